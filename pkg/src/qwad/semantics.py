"""Evaluators for plain and additive programs.

Four views of the same program, all over a fixed register layout:

* :func:`denote` -- the forward superoperator semantics, one partial
  density operator out per density operator in.
* :func:`trace_enumerate` -- small-step execution collecting the final
  state of every run into a multiset.  Measurements fork one run per
  outcome, additive choice forks both branches on the same state.
* :func:`observable_semantics` / :func:`observable_semantics_ancilla`
  -- the scalar read-out tr(O . final state).  For additive programs
  this is the *sum* over the compiled collection, not an average.
* :func:`program_dual_observable` -- pulls an operator backwards
  through a plain program (Heisenberg picture), so that
  tr(O . denote(p)(rho)) == tr(dual(p, O) . rho) for every rho.

The register argument fixes the tensor layout (first variable most
significant).  When omitted it defaults to the program's variables in
first-appearance order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ast import (
    Abort,
    Case,
    Init,
    QVar,
    Register,
    Seq,
    Skip,
    Sum,
    Unitary,
    While,
    is_plain,
    max_param_index,
    qvar_set,
)
from .errors import ValidationError
from .gates import gate_matrix
from .linalg import (
    DensityOperator,
    Observable,
    Superoperator,
    check_sim_dim,
    dagger,
    embed,
)

ZERO_TOL = 1e-12


def _as_theta(theta, need: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise ValidationError("parameter values must be finite")
    if arr.size < need:
        raise ValidationError(
            f"program references th{need} but only {arr.size} values given"
        )
    return arr


def _resolve_register(p, register) -> Register:
    used = qvar_set(p)
    if register is None:
        return used
    if not register.contains_all(used):
        missing = [v.name for v in used if v not in register]
        raise ValidationError(f"register is missing program variables {missing}")
    return register


def embed_on(op, target: Register, register: Register) -> np.ndarray:
    """Lift an operator on a sub-register to the full register."""
    return embed(op, target.dims, register.positions(target), register.dims)


def init_channel(q: QVar, register: Register) -> Superoperator:
    """The reset-to-|0> channel on one variable: rho -> sum_n K_n rho K_n^dag
    with K_n = |0><n| on the variable, identity elsewhere."""
    ops = []
    for n in range(q.dim):
        k = np.zeros((q.dim, q.dim), complex)
        k[0, n] = 1.0
        ops.append(embed_on(k, Register.of(q), register))
    return Superoperator(tuple(ops), validate=False)


def measurement_ops(node, register: Register):
    """Embedded Kraus operator per outcome of a case/while guard."""
    return [
        embed_on(m, node.measured, register)
        for m in node.measurement.operators(node.measured)
    ]


def denote(p, theta, rho: DensityOperator, register: Register | None = None,
           max_dim: int | None = None) -> DensityOperator:
    """Forward semantics: the output partial density operator."""
    reg = _resolve_register(p, register)
    check_sim_dim(reg.dim, max_dim)
    if rho.dim != reg.dim:
        raise ValidationError(
            f"input state dim {rho.dim} does not match register dim {reg.dim}"
        )
    th = _as_theta(theta, max_param_index(p))
    return DensityOperator(_denote(p, th, rho.mat, reg))


def _denote(p, theta, mat: np.ndarray, reg: Register) -> np.ndarray:
    if isinstance(p, Abort):
        return np.zeros_like(mat)
    if isinstance(p, Skip):
        return mat
    if isinstance(p, Init):
        out = np.zeros_like(mat)
        for k in init_channel(p.var, reg).kraus:
            out += k @ mat @ dagger(k)
        return out
    if isinstance(p, Unitary):
        u = embed_on(gate_matrix(p.gate, theta), p.register, reg)
        return u @ mat @ dagger(u)
    if isinstance(p, Seq):
        return _denote(p.second, theta, _denote(p.first, theta, mat, reg), reg)
    if isinstance(p, Case):
        ops = measurement_ops(p, reg)
        out = np.zeros_like(mat)
        for m, branch in zip(ops, p.branches):
            out += _denote(branch, theta, m @ mat @ dagger(m), reg)
        return out
    if isinstance(p, While):
        m0, m1 = measurement_ops(p, reg)
        acc = m0 @ mat @ dagger(m0)
        cur = mat
        for _ in range(1, p.bound):
            cur = _denote(p.body, theta, m1 @ cur @ dagger(m1), reg)
            acc = acc + m0 @ cur @ dagger(m0)
        return acc
    if isinstance(p, Sum):
        raise ValidationError(
            "denote is defined on plain programs; additive programs have "
            "multiset semantics (trace_enumerate / observable_semantics)"
        )
    raise ValidationError(f"not a program node: {type(p).__name__}")


# -- small-step execution -----------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    """One point of an execution: the residual program (None once the
    run has terminated) and the current partial state."""

    residual: object
    state: DensityOperator

    @property
    def terminated(self) -> bool:
        return self.residual is None


# A finite multiset of final states, ordered by enumeration for
# determinism but compared order-insensitively (multisets_match).
FinalMultiset = list


def step(cfg: Configuration, theta, register: Register) -> list:
    """All one-step successors of a configuration, in deterministic order
    (measurement outcomes ascending, additive choice left then right)."""
    p = cfg.residual
    if p is None:
        raise ValidationError("cannot step a terminated configuration")
    th = _as_theta(theta, max_param_index(p))
    mat = cfg.state.mat

    def done(m):
        return Configuration(None, DensityOperator(m))

    if isinstance(p, Abort):
        return [done(np.zeros_like(mat))]
    if isinstance(p, (Skip, Init, Unitary)):
        return [done(_denote(p, th, mat, register))]
    if isinstance(p, Seq):
        out = []
        for nxt in step(Configuration(p.first, cfg.state), th, register):
            rest = p.second if nxt.terminated else Seq(nxt.residual, p.second)
            out.append(Configuration(rest, nxt.state))
        return out
    if isinstance(p, Case):
        ops = measurement_ops(p, register)
        return [
            Configuration(branch, DensityOperator(m @ mat @ dagger(m)))
            for m, branch in zip(ops, p.branches)
        ]
    if isinstance(p, While):
        m0, m1 = measurement_ops(p, register)
        exit_cfg = done(m0 @ mat @ dagger(m0))
        if p.bound == 1:
            rest = Seq(p.body, Abort(qvar_set(p)))
        else:
            rest = Seq(p.body, While(p.bound - 1, p.measured, p.measurement, p.body))
        loop_cfg = Configuration(rest, DensityOperator(m1 @ mat @ dagger(m1)))
        return [exit_cfg, loop_cfg]
    if isinstance(p, Sum):
        return [Configuration(p.left, cfg.state), Configuration(p.right, cfg.state)]
    raise ValidationError(f"not a program node: {type(p).__name__}")


def trace_enumerate(p, theta, rho: DensityOperator,
                    register: Register | None = None,
                    drop_zero: bool = False) -> list:
    """Final states of all maximal runs, as an order-tagged multiset.

    Zero final states (aborted runs) are kept unless ``drop_zero``;
    comparisons between multisets should go through
    :func:`multisets_match` since states carry floating-point noise.
    """
    reg = _resolve_register(p, register)
    check_sim_dim(reg.dim)
    if rho.dim != reg.dim:
        raise ValidationError(
            f"input state dim {rho.dim} does not match register dim {reg.dim}"
        )
    finals = _enumerate_ordered(p, theta, rho, reg)
    if drop_zero:
        finals = [s for s in finals if np.linalg.norm(s.mat) > ZERO_TOL]
    return finals


def _enumerate_ordered(p, theta, rho, reg) -> list:
    out = []

    def run(cfg):
        for nxt in step(cfg, theta, reg):
            if nxt.terminated:
                out.append(nxt.state)
            else:
                run(nxt)

    run(Configuration(p, rho))
    return out


def multisets_match(xs, ys, tol: float = 1e-9) -> bool:
    """Greedy nearest-neighbour matching of two state multisets: every
    member of ``xs`` must claim a distinct member of ``ys`` within
    Frobenius distance ``tol``."""
    if len(xs) != len(ys):
        return False
    pool = [y.mat if isinstance(y, DensityOperator) else np.asarray(y) for y in ys]
    for x in xs:
        xm = x.mat if isinstance(x, DensityOperator) else np.asarray(x)
        dists = [float(np.linalg.norm(xm - y)) for y in pool]
        best = int(np.argmin(dists))
        if dists[best] > tol:
            return False
        pool.pop(best)
    return True


# -- observable semantics ------------------------------------------------------

def observable_semantics(p, o: Observable, rho: DensityOperator, theta,
                         register: Register | None = None) -> float:
    """tr(O . output) for plain programs; for additive programs the sum
    of the same quantity over the compiled collection."""
    reg = _resolve_register(p, register)
    if o.dim != reg.dim:
        raise ValidationError(f"observable dim {o.dim} != register dim {reg.dim}")
    if is_plain(p):
        return _expect(o.mat, denote(p, theta, rho, reg).mat)
    from .compiler import compile_additive

    total = 0.0
    for member in compile_additive(p).members:
        total += _expect(o.mat, denote(member, theta, rho, reg).mat)
    return total


def observable_semantics_ancilla(p, o: Observable, rho: DensityOperator, theta,
                                 ancilla: QVar,
                                 base_register: Register | None = None,
                                 o_ancilla: np.ndarray | None = None) -> float:
    """Read-out with a one-qubit ancilla prepended to the register.

    The ancilla starts in |0><0| and is read with ``o_ancilla`` (the
    Pauli Z matrix by default) tensored with the base observable; the
    base state and observable live on the original register only.
    """
    if ancilla.dim != 2:
        raise ValidationError("ancilla must be a single qubit")
    used = qvar_set(p)
    if base_register is None:
        base_register = Register(tuple(v for v in used if v != ancilla))
    if ancilla in base_register:
        raise ValidationError(f"ancilla {ancilla.name!r} is part of the base register")
    full = Register((ancilla,) + tuple(base_register))
    if o_ancilla is None:
        o_ancilla = np.array([[1, 0], [0, -1]], dtype=complex)
    obs_full = Observable(np.kron(o_ancilla, o.mat))
    zero = np.zeros((2, 2), complex)
    zero[0, 0] = 1.0
    rho_full = DensityOperator(np.kron(zero, rho.mat))
    return observable_semantics(p, obs_full, rho_full, theta, full)


def _expect(o: np.ndarray, mat: np.ndarray) -> float:
    val = complex(np.trace(o @ mat))
    if abs(val.imag) > 1e-9:
        raise ValidationError(
            f"observable semantics has imaginary residue {val.imag:.3e}"
        )
    return val.real


def program_dual_observable(p, theta, o, register: Register | None = None) -> np.ndarray:
    """Heisenberg-picture semantics of a plain program applied to an
    operator: tr(O . denote(p)(rho)) == tr(result . rho) for all rho."""
    if not is_plain(p):
        raise ValidationError("dual semantics is defined on plain programs")
    reg = _resolve_register(p, register)
    o = np.asarray(o, dtype=complex)
    if o.shape != (reg.dim, reg.dim):
        raise ValidationError(
            f"operator shape {o.shape} does not match register dim {reg.dim}"
        )
    th = _as_theta(theta, max_param_index(p))
    return _dual(p, th, o, reg)


def _dual(p, theta, o: np.ndarray, reg: Register) -> np.ndarray:
    if isinstance(p, Abort):
        return np.zeros_like(o)
    if isinstance(p, Skip):
        return o
    if isinstance(p, Init):
        out = np.zeros_like(o)
        for k in init_channel(p.var, reg).kraus:
            out += dagger(k) @ o @ k
        return out
    if isinstance(p, Unitary):
        u = embed_on(gate_matrix(p.gate, theta), p.register, reg)
        return dagger(u) @ o @ u
    if isinstance(p, Seq):
        return _dual(p.first, theta, _dual(p.second, theta, o, reg), reg)
    if isinstance(p, Case):
        ops = measurement_ops(p, reg)
        out = np.zeros_like(o)
        for m, branch in zip(ops, p.branches):
            out += dagger(m) @ _dual(branch, theta, o, reg) @ m
        return out
    if isinstance(p, While):
        m0, m1 = measurement_ops(p, reg)
        cur = dagger(m0) @ o @ m0
        acc = cur.copy()
        for _ in range(1, p.bound):
            cur = dagger(m1) @ _dual(p.body, theta, cur, reg) @ m1
            acc += cur
        return acc
    raise ValidationError(f"not a program node: {type(p).__name__}")
