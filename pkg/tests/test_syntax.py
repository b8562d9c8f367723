import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from progen import corpus
from qwad.ast import (
    COMP_BASIS,
    Abort,
    Case,
    Init,
    Measurement,
    QVar,
    Register,
    Seq,
    Skip,
    Sum,
    Unitary,
    While,
)
from qwad.errors import ParseError, ValidationError
from qwad.gates import GadgetRotation, LiteralGate, MatrixLiteral, Rotation
from qwad.syntax import (
    SourceUnit,
    format_complex,
    parse,
    parse_program,
    print_program,
    print_source,
    tokenize,
)

Q1, Q2 = QVar("q1"), QVar("q2")


def unit_of(body, *vars, k=0):
    return SourceUnit(Register(tuple(vars)), k, body)


class TestParseBasics:
    def test_skip(self):
        u = parse("qubit q1\nskip[q1]")
        assert u.body == Skip(Register.of(Q1))

    def test_example_case_program(self):
        u = parse(
            "qubit q1\nparams 1\n"
            "case M[q1] = 0 -> q1 := Rx(th1)[q1]; q1 := Ry(th1)[q1] "
            "1 -> q1 := Rz(th1)[q1] end"
        )
        want = Case(
            Register.of(Q1),
            COMP_BASIS,
            (
                Seq(
                    Unitary(Rotation("X", 1), Register.of(Q1)),
                    Unitary(Rotation("Y", 1), Register.of(Q1)),
                ),
                Unitary(Rotation("Z", 1), Register.of(Q1)),
            ),
        )
        assert u.body == want

    def test_sum_is_left_associative_and_binds_loosest(self):
        u = parse("qubit q1\nskip[q1] [] abort[q1] [] skip[q1]; skip[q1]")
        body = u.body
        assert isinstance(body, Sum)
        assert isinstance(body.left, Sum)  # (a [] b) [] c
        assert isinstance(body.right, Seq)  # [] binds looser than ;

    def test_comments_and_whitespace(self):
        u = parse("# leading\nqubit q1 # trailing\n\nskip[q1] # done\n")
        assert u.body == Skip(Register.of(Q1))

    def test_qint_declaration(self):
        u = parse("qint n : 3\nn := |0>")
        assert u.register[0].dim == 3
        assert u.body == Init(QVar("n", 3))

    def test_while_and_init(self):
        u = parse(
            "qubit q1\nparams 1\nwhile (2) M[q1] = 1 do q1 := |0> done"
        )
        assert u.body == While(2, Register.of(Q1), COMP_BASIS, Init(Q1))

    def test_literal_gate(self):
        u = parse("qubit q1\nq1 := U([[0,1],[1,0]])[q1]")
        gate = u.body.gate
        assert isinstance(gate, LiteralGate)
        assert np.allclose(gate.matrix.array, [[0, 1], [1, 0]])

    def test_explicit_kraus_guard(self):
        u = parse(
            "qubit q1\n"
            "case M{[[1,0],[0,0]],[[0,0],[0,1]]}[q1] = "
            "0 -> skip[q1] 1 -> abort[q1] end"
        )
        assert u.body.measurement.kraus is not None

    def test_gadget_and_controlled_gates(self):
        u = parse("qubit A1, q1\nparams 1\nA1,q1 := Rx'(th1)[A1,q1]")
        assert u.body.gate == GadgetRotation("X", 1)
        u = parse("qubit A1, q1\nparams 1\nA1,q1 := CRx(th1)[A1,q1]")
        from qwad.gates import ControlledShiftRotation

        assert u.body.gate == ControlledShiftRotation("X", 1)


class TestParseErrors:
    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as err:
            parse("qubit q1\nskip[q1")
        assert err.value.line == 2

    def test_undeclared_variable(self):
        with pytest.raises(ValidationError, match="undeclared"):
            parse("qubit q1\nskip[q2]")

    def test_param_out_of_range(self):
        with pytest.raises(ValidationError, match="th2"):
            parse("qubit q1\nparams 1\nq1 := Rx(th2)[q1]")

    def test_branch_count_mismatch(self):
        with pytest.raises(ValidationError, match="branches"):
            parse("qubit q1\ncase M[q1] = 0 -> skip[q1] end")

    def test_branch_labels_must_be_ordered(self):
        with pytest.raises(ValidationError, match="0..n-1"):
            parse("qubit q1\ncase M[q1] = 1 -> skip[q1] 0 -> skip[q1] end")

    def test_incomplete_kraus_rejected(self):
        with pytest.raises(ValidationError, match="identity"):
            parse(
                "qubit q1\n"
                "case M{[[1,0],[0,0]],[[0,0],[0,0.5]]}[q1] = "
                "0 -> skip[q1] 1 -> abort[q1] end"
            )

    def test_nonunitary_literal_gate_rejected(self):
        with pytest.raises(ValidationError, match="unitary"):
            parse("qubit q1\nq1 := U([[1,0],[0,2]])[q1]")

    def test_mismatched_assignment_registers(self):
        with pytest.raises(ValidationError, match="registers differ"):
            parse("qubit q1, q2\nq1 := X[q2]")

    def test_duplicate_declaration(self):
        with pytest.raises(ValidationError, match="twice"):
            parse("qubit q1\nqubit q1\nskip[q1]")

    def test_unknown_gate(self):
        with pytest.raises(ParseError, match="unknown gate"):
            parse("qubit q1\nq1 := Rq(th1)[q1]")


class TestPrinter:
    def test_abort_form(self):
        assert print_program(Abort(Register.of(Q1, Q2))) == "abort[q1,q2]"

    def test_gadget_prints_with_ancilla(self):
        a = QVar("A1")
        stmt = Unitary(GadgetRotation("X", 1), Register.of(a, Q1))
        assert print_program(stmt) == "A1,q1 := Rx'(th1)[A1,q1]"

    def test_right_nested_seq_gets_parens(self):
        p = Seq(Skip(Register.of(Q1)), Seq(Init(Q1), Skip(Register.of(Q1))))
        text = print_program(p)
        assert "(" in text
        assert parse_program(text, Register.of(Q1)) == p

    def test_kraus_guard_roundtrips_floats(self):
        m = Measurement(
            (
                MatrixLiteral.of(np.array([[1, 0], [0, 1]]) / np.sqrt(2)),
                MatrixLiteral.of(np.array([[1, 0], [0, -1]]) / np.sqrt(2)),
            )
        )
        p = Case(Register.of(Q1), m, (Skip(Register.of(Q1)), Abort(Register.of(Q1))))
        text = print_source(unit_of(p, Q1))
        assert parse(text).body == p


class TestRoundTrip:
    def test_fifty_program_corpus_identity(self):
        for p, reg, k in corpus(23, 50, additive=True):
            u = SourceUnit(reg, k, p)
            assert parse(print_source(u)) == u

    def test_two_hundred_random_asts(self):
        seen_sum = seen_while = 0
        for p, reg, k in corpus(99, 200, additive=True):
            u = SourceUnit(reg, k, p)
            text = print_source(u)
            assert parse(text) == u, text
            seen_sum += any(isinstance(n, Sum) for n in _walk(p))
            seen_while += any(isinstance(n, While) for n in _walk(p))
        assert seen_sum > 20 and seen_while > 20

    def test_unit_with_undeclared_body_rejected(self):
        with pytest.raises(ValidationError, match="not declared"):
            unit_of(Skip(Register.of(Q1, Q2)), Q1)


def _walk(p):
    yield p
    if isinstance(p, Seq):
        yield from _walk(p.first)
        yield from _walk(p.second)
    elif isinstance(p, Sum):
        yield from _walk(p.left)
        yield from _walk(p.right)
    elif isinstance(p, Case):
        for b in p.branches:
            yield from _walk(b)
    elif isinstance(p, While):
        yield from _walk(p.body)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestScalars:
    @given(finite, finite)
    @settings(max_examples=300, deadline=None)
    def test_complex_literal_roundtrip(self, re_, im):
        z = complex(re_, im)
        assert _parse_scalar(format_complex(z)) == z

    def test_tokenizer_imaginary_suffix(self):
        kinds = [t.kind for t in tokenize("1 2.5 3i 0.5e-3i name i1")][:-1]
        assert kinds == ["INT", "NUM", "IMAG", "IMAG", "NAME", "NAME"]


def _parse_scalar(text):
    from qwad.syntax import _Parser

    return _Parser(text).parse_scalar()
