import json

import numpy as np
import pytest

from qwad.ast import COMP_BASIS, Case, QVar, Register, Seq, Skip, Unitary
from qwad.errors import ValidationError
from qwad.gates import Rotation
from qwad.gradient import (
    DEFAULT_SHOT_CONSTANT,
    derivative_program,
    dual_gradient_operator,
    estimate_grad_sampled,
    finite_difference,
    grad_all,
    grad_exact,
    shot_count,
)
from qwad.linalg import DensityOperator, Observable, PAULI_Z, random_density
from qwad.syntax import parse

Q1, Q2 = QVar("q1"), QVar("q2")
R1, R12 = Register.of(Q1), Register.of(Q1, Q2)
Z1 = Observable(PAULI_Z)


def rx(j=1, q=Q1):
    return Unitary(Rotation("X", j), Register.of(q))


def rho0(dim=2):
    return DensityOperator.basis(dim, 0)


# read-out cos(th1); with a guard, the second wire turns by th1 or th2
BENCH = Seq(
    rx(1),
    Case(R1, COMP_BASIS, (Unitary(Rotation("Y", 1), Register.of(Q2)),
                          Unitary(Rotation("Z", 2), Register.of(Q2)))),
)
BENCH_OBS = Observable(np.kron(PAULI_Z, PAULI_Z))


class TestGradExact:
    def test_minus_sine(self):
        g = grad_exact(rx(1), [np.pi / 3], 1, Z1, rho0())
        assert g == pytest.approx(-np.sin(np.pi / 3), abs=1e-12)

    def test_unused_parameter_is_zero(self):
        assert grad_exact(rx(1), [0.3, 0.7], 2, Z1, rho0()) == 0.0

    def test_simple_case_matches_oracle(self):
        u = parse(
            "qubit q1\nparams 1\n"
            "case M[q1] = 0 -> q1 := Rx(th1)[q1]; q1 := Ry(th1)[q1] "
            "1 -> q1 := Rz(th1)[q1] end"
        )
        theta = [0.7]
        g = grad_exact(u.body, theta, 1, Z1, rho0(), u.register)
        fd = finite_difference(u.body, theta, 1, Z1, rho0(), register=u.register)
        assert g == pytest.approx(fd, abs=1e-5)

    def test_simulated_member_count_equals_nonaborting_count(self):
        from qwad.compiler import nna
        from qwad.autodiff import differentiate

        dp = derivative_program(BENCH, 1)
        assert len(dp.members) == nna(differentiate(BENCH, 1).transformed) == 2


class TestFiniteDifference:
    def test_extremum_is_flat(self):
        assert finite_difference(rx(1), [0.0], 1, Z1, rho0()) == pytest.approx(
            0.0, abs=1e-8
        )

    def test_quarter_turn(self):
        assert finite_difference(rx(1), [np.pi / 2], 1, Z1, rho0()) == pytest.approx(
            -1.0, abs=1e-8
        )

    def test_constant_program(self):
        assert finite_difference(Skip(R1), [0.5], 1, Z1, rho0()) == 0.0


class TestDualOperator:
    def test_matches_grad_exact_on_random_states(self, rng):
        theta = [0.9, 1.7]
        dp = derivative_program(BENCH, 1)
        sigma = dual_gradient_operator(dp, theta, BENCH_OBS, R12)
        for _ in range(10):
            rho = random_density(rng, 4)
            want = grad_exact(BENCH, theta, 1, BENCH_OBS, rho, R12, dp)
            zero = np.zeros((2, 2), complex)
            zero[0, 0] = 1
            got = np.trace(sigma @ np.kron(zero, rho.mat)).real
            assert got == pytest.approx(want, abs=1e-10)


class TestSampled:
    def test_zero_member_case_is_exact_zero(self):
        got = estimate_grad_sampled(rx(1), [0.3, 0.5], 2, Z1, rho0(), 0.05, seed=1)
        assert got == 0.0

    def test_shot_count_formula(self):
        n1 = shot_count(2, 0.1)
        n2 = shot_count(2, 0.05)
        assert n1 == int(np.ceil(DEFAULT_SHOT_CONSTANT * 4 / 0.01))
        assert n2 == 4 * n1  # halving delta quadruples the work

    def test_close_to_exact(self):
        theta = [np.pi / 3, 0.4]
        exact = grad_exact(BENCH, theta, 1, BENCH_OBS, rho0(4), R12)
        est = estimate_grad_sampled(
            BENCH, theta, 1, BENCH_OBS, rho0(4), delta=0.1, seed=7, register=R12
        )
        assert est == pytest.approx(exact, abs=0.1)

    def test_unbiased_over_seeds(self):
        theta = [np.pi / 3, 0.4]
        dp = derivative_program(BENCH, 1)
        exact = grad_exact(BENCH, theta, 1, BENCH_OBS, rho0(4), R12, dp)
        delta = 0.25
        n = shot_count(dp.count, delta)
        draws = [
            estimate_grad_sampled(
                BENCH, theta, 1, BENCH_OBS, rho0(4), delta, seed=s,
                register=R12, dp=dp,
            )
            for s in range(200)
        ]
        mean = float(np.mean(draws))
        stderr = float(np.std(draws, ddof=1)) / np.sqrt(len(draws))
        assert abs(mean - exact) <= 3 * max(stderr, 1e-12)

    def test_mixed_state_input(self, rng):
        theta = [0.8, 1.1]
        rho = random_density(rng, 4)
        exact = grad_exact(BENCH, theta, 1, BENCH_OBS, rho, R12)
        est = estimate_grad_sampled(
            BENCH, theta, 1, BENCH_OBS, rho, delta=0.15, seed=3, register=R12
        )
        assert est == pytest.approx(exact, abs=0.15)

    def test_single_rotation_concentrates(self):
        # reduced-seed version of the release check, on the plain rotation
        theta = [np.pi / 3]
        exact = grad_exact(rx(1), theta, 1, Z1, rho0())
        delta = 0.05
        hits = sum(
            abs(estimate_grad_sampled(rx(1), theta, 1, Z1, rho0(), delta, seed=s)
                - exact) <= delta
            for s in range(30)
        )
        assert hits >= 29

    def test_seed_reproducibility(self):
        theta = [np.pi / 3, 0.4]
        a = estimate_grad_sampled(
            BENCH, theta, 1, BENCH_OBS, rho0(4), 0.2, seed=42, register=R12
        )
        b = estimate_grad_sampled(
            BENCH, theta, 1, BENCH_OBS, rho0(4), 0.2, seed=42, register=R12
        )
        assert a == b

    def test_bad_delta(self):
        with pytest.raises(ValidationError):
            estimate_grad_sampled(rx(1), [0.1], 1, Z1, rho0(), 0.0, seed=1)


class TestTrajectory:
    def test_invariants_and_history(self, rng):
        from qwad.gradient import sample_trajectory

        dp = derivative_program(BENCH, 1)
        psi0 = np.zeros(8, complex)
        psi0[0] = 1.0
        full = Register((dp.ancilla, Q1, Q2))
        for member in dp.members:
            t = sample_trajectory(member, [0.7, 0.2], psi0, rng, full)
            assert 0 <= t.weight <= 1
            assert len(t.outcomes) == 1  # one guard along every path
            if not t.aborted:
                assert np.linalg.norm(t.state) == pytest.approx(1.0)

    def test_aborting_member_flags(self, rng):
        from qwad.ast import Abort
        from qwad.gradient import sample_trajectory

        t = sample_trajectory(Abort(R1), [], np.array([1, 0], complex), rng, R1)
        assert t.aborted

    def test_weights_multiply_along_branches(self):
        from qwad.gradient import sample_trajectory
        from qwad.gates import FixedGate
        from qwad.ast import Case

        # H puts the guard on a fair coin; weight of either branch is 1/2
        p = Seq(
            Unitary(FixedGate("H"), R1),
            Case(R1, COMP_BASIS, (Skip(R1), Skip(R1))),
        )
        rng = np.random.default_rng(0)
        t = sample_trajectory(p, [], np.array([1, 0], complex), rng, R1)
        assert t.weight == pytest.approx(0.5)


class TestGradAll:
    def test_vector_and_counts(self):
        theta = [0.4, 1.2]
        report = grad_all(BENCH, theta, BENCH_OBS, rho0(4), R12)
        assert len(report.values) == 2
        assert report.nna == (2, 1)
        assert report.oc == (2, 1)
        for j in (1, 2):
            fd = finite_difference(BENCH, theta, j, BENCH_OBS, rho0(4), register=R12)
            assert report.values[j - 1] == pytest.approx(fd, abs=1e-5)

    def test_skip_program_is_zero_vector(self):
        report = grad_all(Skip(R1), [0.1, 0.2], Z1, rho0())
        assert report.values == (0.0, 0.0)

    def test_json_shape(self):
        report = grad_all(rx(1), [0.5], Z1, rho0())
        doc = json.loads(report.to_json())
        assert set(doc) == {"theta", "grad", "method", "nna", "oc", "shots", "delta"}
        assert doc["method"] == "exact"
        assert doc["shots"] is None

    def test_zero_rotation_of_z_axis_on_basis_state(self):
        # a Z rotation cannot move the Z read-out of a basis state
        p = Seq(rx(1), Unitary(Rotation("Z", 2), R1))
        report = grad_all(p, [0.6, 0.9], Z1, rho0())
        assert report.values[1] == pytest.approx(0.0, abs=1e-12)
