"""Compilation of additive programs to multisets of plain programs.

An additive program denotes a multiset of runs; compilation recovers an
explicit multiset of plain programs whose combined runs are exactly the
nonzero runs of the source.  The output is normalized: it is either the
single program ``abort`` or it contains no essentially-aborting member.

Rules, structurally:

* atomic statements compile to themselves (a singleton);
* a sequence is the pairwise composition of the two sides' multisets,
  short-circuiting to ``{| abort |}`` if either side is that;
* a case goes through *fill and break*: compile every branch, drop
  aborting members, pad all branch multisets with ``abort`` to equal
  size, and emit one case program per column;
* a bounded while is unfolded to its nested-case form first;
* an additive choice is the multiset union, with ``abort`` singletons
  absorbed.

The module also owns the two static resource counts: the occurrence
count of a parameter in a plain program, and the number of non-aborting
compiled members of an additive program, plus the structural counts
(gates, layers, lines, qubits) reported for benchmark instances.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .ast import (
    Abort,
    Case,
    Init,
    Register,
    Seq,
    Skip,
    Sum,
    Unitary,
    While,
    essentially_aborts,
    expand_while,
    is_plain,
    param_indices,
    qvar_set,
)
from .errors import ValidationError
from .gates import trivially_uses


@dataclass(frozen=True)
class CompiledMultiset:
    """An ordered multiset of plain programs plus its source program.

    ``aborting_pruned`` records whether normalization dropped or
    absorbed any aborting candidates along the way.
    """

    members: tuple
    source: object
    aborting_pruned: bool = False

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def is_abort(self) -> bool:
        return len(self.members) == 1 and isinstance(self.members[0], Abort)

    def to_json(self) -> str:
        from .syntax import print_program

        text = print_program(self.source) if self.source is not None else ""
        doc = {
            "source_hash": hashlib.sha256(text.encode()).hexdigest(),
            "members": [print_program(m) for m in self.members],
            "nna": sum(1 for m in self.members if not essentially_aborts(m)),
            "aborting_pruned": self.aborting_pruned,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def compile_additive(p, register: Register | None = None) -> CompiledMultiset:
    """Compile an additive program into its multiset of plain programs.

    ``register`` only fixes the variable order used for the ``abort``
    programs that normalization introduces; it defaults to the program's
    variables in first-appearance order.
    """
    ambient = qvar_set(p)
    if register is not None:
        if not register.contains_all(ambient):
            missing = [v.name for v in ambient if v not in register]
            raise ValidationError(f"register is missing program variables {missing}")
        ambient = Register(tuple(v for v in register if v in ambient))
    state = {"pruned": False}
    members = _compile(p, ambient, state)
    return CompiledMultiset(tuple(members), p, state["pruned"])


def _abort_singleton(reg: Register):
    return [Abort(reg)]


def _is_abort(members) -> bool:
    return len(members) == 1 and isinstance(members[0], Abort)


def _compile(p, reg: Register, state) -> list:
    if isinstance(p, (Abort, Skip, Init, Unitary)):
        return [p]
    if isinstance(p, Seq):
        left = _compile(p.first, reg, state)
        if _is_abort(left):
            state["pruned"] = True
            return _abort_singleton(reg)
        right = _compile(p.second, reg, state)
        if _is_abort(right):
            state["pruned"] = True
            return _abort_singleton(reg)
        return [Seq(a, b) for a in left for b in right]
    if isinstance(p, Case):
        branch_sets = [_compile(b, reg, state) for b in p.branches]
        return _fill_and_break(p.measured, p.measurement, branch_sets, reg, state)
    if isinstance(p, While):
        return _compile(expand_while(p), reg, state)
    if isinstance(p, Sum):
        left = _compile(p.left, reg, state)
        right = _compile(p.right, reg, state)
        la, ra = _is_abort(left), _is_abort(right)
        if la and ra:
            state["pruned"] = True
            return _abort_singleton(reg)
        if la:
            state["pruned"] = True
            return right
        if ra:
            state["pruned"] = True
            return left
        return left + right
    raise ValidationError(f"not a program node: {type(p).__name__}")


def fill_and_break(measured, measurement, branch_multisets) -> CompiledMultiset:
    """Assemble per-branch multisets into a multiset of case programs.

    Keep only non-aborting members of every branch; if nothing is left
    anywhere the whole case aborts.  Otherwise pad every branch with
    ``abort`` up to the largest branch size (branch order is preserved;
    padding goes at the end) and emit, for each column index, the case
    program built from that column.
    """
    sets = [list(ms) for ms in branch_multisets]
    if len(sets) != measurement.outcomes(measured):
        raise ValidationError(
            f"need one branch multiset per outcome "
            f"({measurement.outcomes(measured)}), got {len(sets)}"
        )
    reg = Register(tuple(measured))
    for ms in sets:
        for m in ms:
            reg = reg.merged(qvar_set(m))
    state = {"pruned": False}
    members = _fill_and_break(measured, measurement, sets, reg, state)
    return CompiledMultiset(tuple(members), None, state["pruned"])


def _fill_and_break(measured, measurement, branch_multisets, reg, state):
    columns = []
    for ms in branch_multisets:
        members = list(ms)
        kept = [m for m in members if not essentially_aborts(m)]
        if len(kept) != len(members):
            state["pruned"] = True
        columns.append(kept)
    width = max(len(c) for c in columns)
    if width == 0:
        return _abort_singleton(reg)
    for c in columns:
        if len(c) < width:
            state["pruned"] = True
        c.extend(Abort(reg) for _ in range(width - len(c)))
    return [
        Case(measured, measurement, tuple(c[j] for c in columns))
        for j in range(width)
    ]


def nna(p) -> int:
    """Number of non-aborting programs in the compiled multiset."""
    return sum(
        1 for m in compile_additive(p).members if not essentially_aborts(m)
    )


def occurrence_count(p, j: int) -> int:
    """Static count of non-trivial uses of parameter ``j`` in a plain
    program: additive over sequencing, worst-case over case branches,
    bound times body for a bounded while."""
    if isinstance(p, Sum):
        raise ValidationError("occurrence count is defined on plain programs")
    if isinstance(p, (Abort, Skip, Init)):
        return 0
    if isinstance(p, Unitary):
        return 0 if trivially_uses(p.gate, j) else 1
    if isinstance(p, Seq):
        return occurrence_count(p.first, j) + occurrence_count(p.second, j)
    if isinstance(p, Case):
        return max(occurrence_count(b, j) for b in p.branches)
    if isinstance(p, While):
        return p.bound * occurrence_count(p.body, j)
    raise ValidationError(f"not a program node: {type(p).__name__}")


# -- structural size counts ---------------------------------------------------

def gate_count(p) -> int:
    """Unitary statements executed in the worst case; a while counts its
    body once per allowed iteration."""
    if isinstance(p, (Abort, Skip, Init)):
        return 0
    if isinstance(p, Unitary):
        return 1
    if isinstance(p, Seq):
        return gate_count(p.first) + gate_count(p.second)
    if isinstance(p, Case):
        return max(gate_count(b) for b in p.branches)
    if isinstance(p, While):
        return p.bound * gate_count(p.body)
    if isinstance(p, Sum):
        return max(gate_count(p.left), gate_count(p.right))
    raise ValidationError(f"not a program node: {type(p).__name__}")


def layer_count(p) -> int:
    """Maximal runs of gate statements, with control boundaries between
    them; a while contributes its body once per allowed iteration."""
    total = 0
    run_open = False
    for part in _segments(p):
        if part == "gates":
            if not run_open:
                total += 1
                run_open = True
        else:
            total += part
            run_open = False
    return total


def _segments(p):
    """Yield 'gates' markers for unitary statements and integer layer
    totals for control constructs, in program order."""
    if isinstance(p, (Abort, Skip, Init)):
        return
    elif isinstance(p, Unitary):
        yield "gates"
    elif isinstance(p, Seq):
        yield from _segments(p.first)
        yield from _segments(p.second)
    elif isinstance(p, Case):
        yield max(layer_count(b) for b in p.branches)
    elif isinstance(p, While):
        yield p.bound * layer_count(p.body)
    elif isinstance(p, Sum):
        yield max(layer_count(p.left), layer_count(p.right))


def line_count(p) -> int:
    from .syntax import print_program

    return len(print_program(p).splitlines())


@dataclass(frozen=True)
class ResourceReport:
    """Static resource summary of a plain program.

    ``oc`` and ``nna`` are per-parameter maps (1-based indices); the
    headline fields repeat the designated parameter's entry, which is
    what gets quoted when an instance is summarized by one number.
    """

    oc: dict
    nna: dict
    gate_count: int
    layer_count: int
    qubit_count: int
    line_count: int
    headline_param: int

    @property
    def headline_oc(self) -> int:
        return self.oc.get(self.headline_param, 0)

    @property
    def headline_nna(self) -> int:
        return self.nna.get(self.headline_param, 0)

    def to_json(self) -> str:
        doc = {
            "oc": {str(j): v for j, v in sorted(self.oc.items())},
            "nna": {str(j): v for j, v in sorted(self.nna.items())},
            "headline_param": self.headline_param,
            "headline_oc": self.headline_oc,
            "headline_nna": self.headline_nna,
            "gates": self.gate_count,
            "layers": self.layer_count,
            "qubits": self.qubit_count,
            "lines": self.line_count,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def resource_report(p, headline_param: int = 1) -> ResourceReport:
    """Compute every column of the resource summary for a plain program."""
    if not is_plain(p):
        raise ValidationError("resource reports cover plain programs")
    from .autodiff import differentiate

    params = sorted(param_indices(p))
    oc = {j: occurrence_count(p, j) for j in params}
    counts = {j: nna(differentiate(p, j).transformed) for j in params}
    for j in params:
        if counts[j] > oc[j]:
            raise ValidationError(
                f"non-aborting count {counts[j]} exceeds occurrence count "
                f"{oc[j]} for parameter {j}; compilation is inconsistent"
            )
    return ResourceReport(
        oc=oc,
        nna=counts,
        gate_count=gate_count(p),
        layer_count=layer_count(p),
        qubit_count=len(qvar_set(p)),
        line_count=line_count(p),
        headline_param=headline_param,
    )
