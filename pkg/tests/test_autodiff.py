import pytest

from progen import corpus
from qwad.ast import (
    COMP_BASIS,
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
    qvar_set,
)
from qwad.autodiff import central_difference, differentiate, judgement_holds
from qwad.errors import ValidationError
from qwad.gates import FixedGate, GadgetRotation, Rotation
from qwad.linalg import Observable, PAULI_Z, random_density, random_observable
from qwad.semantics import observable_semantics, observable_semantics_ancilla

Q1, Q2 = QVar("q1"), QVar("q2")
R1 = Register.of(Q1)


def rx(j=1, q=Q1):
    return Unitary(Rotation("X", j), Register.of(q))


class TestTransformRules:
    def test_skip_becomes_abort_on_extended_register(self):
        d = differentiate(Skip(R1), 1)
        assert d.transformed == Abort(Register.of(d.ancilla, Q1))

    def test_init_and_abort_trivialize(self):
        for p in (Init(Q1), Abort(R1)):
            d = differentiate(p, 1)
            assert isinstance(d.transformed, Abort)

    def test_fixed_gate_trivializes(self):
        d = differentiate(Unitary(FixedGate("H"), R1), 1)
        assert isinstance(d.transformed, Abort)

    def test_other_parameter_trivializes(self):
        d = differentiate(rx(1), 2)
        assert isinstance(d.transformed, Abort)

    def test_rotation_becomes_gadget(self):
        d = differentiate(rx(1), 1)
        assert d.transformed == Unitary(
            GadgetRotation("X", 1), Register.of(d.ancilla, Q1)
        )

    def test_coupling_becomes_wide_gadget(self):
        p = Unitary(Rotation("ZZ", 2), Register.of(Q1, Q2))
        d = differentiate(p, 2)
        assert d.transformed == Unitary(
            GadgetRotation("ZZ", 2), Register.of(d.ancilla, Q1, Q2)
        )

    def test_sequence_rule_structure(self):
        p = Seq(rx(1), Unitary(Rotation("Y", 1), R1))
        d = differentiate(p, 1)
        assert isinstance(d.transformed, Sum)
        left, right = d.transformed.left, d.transformed.right
        # derivative of the first component comes first, matching the
        # column pairing the compiled multiset is checked against
        assert isinstance(left.first.gate, GadgetRotation)
        assert isinstance(left.second.gate, Rotation)
        assert isinstance(right.first.gate, Rotation)
        assert isinstance(right.second.gate, GadgetRotation)

    def test_case_rule_keeps_guard(self):
        p = Case(R1, COMP_BASIS, (rx(1), Skip(R1)))
        d = differentiate(p, 1)
        assert isinstance(d.transformed, Case)
        assert d.transformed.measured == R1
        assert isinstance(d.transformed.branches[1], Abort)

    def test_sum_rule_maps_both_sides(self):
        p = Sum(rx(1), Skip(R1))
        d = differentiate(p, 1)
        assert isinstance(d.transformed, Sum)
        assert isinstance(d.transformed.left, Unitary)
        assert isinstance(d.transformed.right, Abort)

    def test_while_goes_through_expansion(self):
        w = While(2, R1, COMP_BASIS, rx(1))
        d = differentiate(w, 1)
        assert isinstance(d.transformed, Case)  # no While survives

    def test_param_range_check(self):
        with pytest.raises(ValidationError):
            differentiate(rx(1), 0)
        with pytest.raises(ValidationError):
            differentiate(rx(1), 3, k=2)
        differentiate(rx(1), 2, k=2)  # unused but in range

    def test_fresh_ancilla_avoids_collisions(self):
        taken = QVar("A1")
        p = Seq(Skip(Register.of(taken)), rx(1))
        d = differentiate(p, 1)
        assert d.ancilla.name == "A1_1"
        assert d.ancilla not in qvar_set(p)

    def test_register_is_ancilla_first(self):
        d = differentiate(Seq(rx(1), rx(1, Q2)), 1)
        assert d.register.names[0] == d.ancilla.name


class TestJudgement:
    def test_skip_vs_abort_holds(self, rng):
        d = differentiate(Skip(R1), 1)
        assert judgement_holds(Skip(R1), d.transformed, 1, rng=rng)

    def test_rotation_vs_gadget_holds(self, rng):
        d = differentiate(rx(1), 1)
        assert judgement_holds(rx(1), d.transformed, 1, rng=rng)

    def test_wrong_derivative_fails(self, rng):
        a = QVar("A1")
        wrong = Skip(Register.of(a, Q1))
        assert not judgement_holds(rx(1), wrong, 1, rng=rng)

    def test_register_mismatch_rejected(self, rng):
        with pytest.raises(ValidationError):
            judgement_holds(rx(1), Skip(R1), 1, rng=rng)

    def test_transform_passes_on_mixed_corpus(self, rng):
        for p, reg, k in corpus(117, 8, additive=True):
            for j in range(1, k + 1):
                d = differentiate(p, j)
                assert judgement_holds(
                    p, d.transformed, j, rng=rng, n_points=2, n_pairs=2
                ), f"failed for parameter {j} on:\n{p}"

    def test_while_differentiation_is_sound(self, rng):
        w = While(2, R1, COMP_BASIS, Seq(rx(1), Unitary(Rotation("Z", 2), R1)))
        for j in (1, 2):
            d = differentiate(w, j)
            assert judgement_holds(w, d.transformed, j, rng=rng, n_points=3)


class TestDifferentialSemanticsShape:
    def test_one_program_serves_all_draws(self, rng):
        # a single transformed program must satisfy the derivative
        # identity on every (observable, state) pair, not per-pair ones
        p = Seq(rx(1), Unitary(Rotation("Y", 1), R1))
        d = differentiate(p, 1)
        theta = [0.9]
        for _ in range(25):
            o = random_observable(rng, 2)
            rho = random_density(rng, 2)
            got = observable_semantics_ancilla(
                d.transformed, o, rho, theta, d.ancilla, R1
            )
            want = central_difference(
                lambda th: observable_semantics(p, o, rho, th, R1), theta, 1
            )
            assert got == pytest.approx(want, abs=1e-5)

    def test_linearity_in_observable_and_state(self, rng):
        p = Seq(rx(1), Unitary(Rotation("Z", 1), R1))
        d = differentiate(p, 1)
        theta = [1.1]

        def read(o, rho):
            return observable_semantics_ancilla(
                d.transformed, o, rho, theta, d.ancilla, R1
            )

        for _ in range(10):
            o1, o2 = random_observable(rng, 2), random_observable(rng, 2)
            rho1, rho2 = random_density(rng, 2), random_density(rng, 2)
            lam = rng.uniform(0, 1)
            mixed_o = Observable(lam * o1.mat + (1 - lam) * o2.mat)
            mixed_rho_mat = lam * rho1.mat + (1 - lam) * rho2.mat
            from qwad.linalg import DensityOperator

            mixed_rho = DensityOperator(mixed_rho_mat)
            lhs = read(mixed_o, rho1)
            rhs = lam * read(o1, rho1) + (1 - lam) * read(o2, rho1)
            assert lhs == pytest.approx(rhs, abs=1e-9)
            lhs = read(o1, mixed_rho)
            rhs = lam * read(o1, rho1) + (1 - lam) * read(o1, rho2)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_ancilla_z_default_matches_explicit(self, rng):
        d = differentiate(rx(1), 1)
        o = random_observable(rng, 2)
        rho = random_density(rng, 2)
        a = observable_semantics_ancilla(d.transformed, o, rho, [0.4], d.ancilla, R1)
        b = observable_semantics_ancilla(
            d.transformed, o, rho, [0.4], d.ancilla, R1, o_ancilla=PAULI_Z
        )
        assert a == b
