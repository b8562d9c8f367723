"""Text format for programs: parser and pretty-printer.

A source unit is a declaration preamble followed by one program::

    qubit q1
    qubit q2
    params 2

    q1 := Rx(th1)[q1];
    case M[q2] =
      0 ->
        skip[q1,q2]
      1 ->
        q1,q2 := Rzz(th2)[q1,q2]
    end

Grammar (normative; '#' starts a comment, additive choice '[]' binds
looser than ';' and is left-associative)::

    source   := decl* program
    decl     := 'qubit' NAME (',' NAME)* | 'qint' NAME ':' INT | 'params' INT
    program  := seq ('[]' seq)*
    seq      := stmt (';' stmt)*
    stmt     := 'abort' '[' names ']' | 'skip' '[' names ']'
              | NAME ':=' '|0>'
              | names ':=' gate '[' names ']'
              | 'case' guard '=' (INT '->' program)+ 'end'
              | 'while' '(' INT ')' guard '=' '1' 'do' program 'done'
              | '(' program ')'
    guard    := 'M' ('{' matrix (',' matrix)* '}')? '[' names ']'
    gate     := 'H'|'X'|'Y'|'Z'|'CNOT' | 'U' '(' matrix ')'
              | ROT '(' 'th' INT ')'
    ROT      := ('R'|'CR') ('x'|'y'|'z'|'xx'|'yy'|'zz') "'"?
    matrix   := '[' row (',' row)* ']' ;  row := '[' scalar (',' scalar)* ']'
    scalar   := complex literal, e.g.  1, -0.5, 2i, 0.5-0.5i

A guard without an explicit operator list measures the computational
basis of a single variable (one branch per basis state).  Explicit
operator lists are the IR-literal escape hatch for tests and must
resolve the identity.

Round trip: ``parse(print_source(u))`` is structurally equal to ``u``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
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
    is_plain,
    max_param_index,
    qvar_set,
)
from .errors import ParseError, ValidationError
from .gates import (
    ControlledShiftRotation,
    FixedGate,
    GadgetRotation,
    LiteralGate,
    MatrixLiteral,
    Rotation,
    gate_name,
)

KEYWORDS = {
    "qubit", "qint", "params", "abort", "skip", "case", "while",
    "do", "done", "end", "M",
}

_PARAM_RE = re.compile(r"^th([1-9][0-9]*)$")
_ROT_RE = re.compile(r"^(C?)R(xx|yy|zz|x|y|z)(')?$")


@dataclass(frozen=True)
class SourceUnit:
    """Declared variables (their order is the tensor layout), the
    parameter count, and the program body."""

    register: Register
    k: int
    body: object

    def __post_init__(self):
        used = qvar_set(self.body)
        for v in used:
            if v not in self.register:
                raise ValidationError(f"variable {v.name!r} is not declared")
        j = max_param_index(self.body)
        if j > self.k:
            raise ValidationError(
                f"parameter th{j} referenced but only {self.k} declared"
            )

    @property
    def is_plain(self) -> bool:
        return is_plain(self.body)


# -- lexer -------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # NAME INT NUM IMAG SYM KET0 EOF
    text: str
    line: int
    col: int


_SYMBOLS = (":=", "->", "[]", ";", ",", "[", "]", "(", ")", "{", "}", "=", ":", "+", "-")


def tokenize(text: str):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "|":
            if text[i : i + 3] == "|0>":
                toks.append(Token("KET0", "|0>", line, col))
                i += 3
                col += 3
                continue
            raise ParseError("expected '|0>'", line, col)
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = re.match(r"\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?", text[i:])
            lit = m.group(0)
            j = i + len(lit)
            if j < n and text[j] in "ij" and (j + 1 >= n or not (text[j + 1].isalnum() or text[j + 1] == "_")):
                toks.append(Token("IMAG", lit, line, col))
                j += 1
            elif "." in lit or "e" in lit or "E" in lit:
                toks.append(Token("NUM", lit, line, col))
            else:
                toks.append(Token("INT", lit, line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            m = re.match(r"[A-Za-z_][A-Za-z0-9_]*'?", text[i:])
            lit = m.group(0)
            toks.append(Token("NAME", lit, line, col))
            i += len(lit)
            col += len(lit)
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("SYM", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0
        self.vars: dict[str, QVar] = {}
        self.order: list[QVar] = []
        self.k = 0

    # token plumbing
    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_sym(self, s: str, ahead=0) -> bool:
        t = self.peek(ahead)
        return t.kind == "SYM" and t.text == s

    def at_name(self, s: str, ahead=0) -> bool:
        t = self.peek(ahead)
        return t.kind == "NAME" and t.text == s

    def expect_sym(self, s: str) -> Token:
        t = self.next()
        if t.kind != "SYM" or t.text != s:
            raise ParseError(f"expected {s!r}, got {t.text!r}", t.line, t.col)
        return t

    def expect_name(self, s: str | None = None) -> Token:
        t = self.next()
        if t.kind != "NAME" or (s is not None and t.text != s):
            want = s or "a name"
            raise ParseError(f"expected {want!r}, got {t.text!r}", t.line, t.col)
        return t

    def expect_int(self) -> int:
        t = self.next()
        if t.kind != "INT":
            raise ParseError(f"expected an integer, got {t.text!r}", t.line, t.col)
        return int(t.text)

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # declarations
    def parse_unit(self) -> SourceUnit:
        while self.peek().kind == "NAME" and self.peek().text in ("qubit", "qint", "params"):
            kw = self.next().text
            if kw == "qubit":
                self.declare(self.expect_name().text, 2)
                while self.at_sym(","):
                    self.next()
                    self.declare(self.expect_name().text, 2)
            elif kw == "qint":
                name = self.expect_name().text
                self.expect_sym(":")
                dim = self.expect_int()
                self.declare(name, dim)
            else:
                self.k = self.expect_int()
        body = self.parse_program()
        t = self.peek()
        if t.kind != "EOF":
            raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
        return SourceUnit(Register(tuple(self.order)), self.k, body)

    def declare(self, name: str, dim: int):
        if name in self.vars:
            raise ValidationError(f"variable {name!r} declared twice")
        if name in KEYWORDS:
            raise ValidationError(f"{name!r} is a reserved word")
        v = QVar(name, dim)
        self.vars[name] = v
        self.order.append(v)

    def lookup(self, tok: Token) -> QVar:
        v = self.vars.get(tok.text)
        if v is None:
            raise ValidationError(
                f"{tok.line}:{tok.col}: undeclared variable {tok.text!r}"
            )
        return v

    # programs
    def parse_program(self):
        node = self.parse_seq()
        while self.at_sym("[]"):
            self.next()
            node = Sum(node, self.parse_seq())
        return node

    def parse_seq(self):
        node = self.parse_stmt()
        while self.at_sym(";"):
            self.next()
            node = Seq(node, self.parse_stmt())
        return node

    def parse_register(self) -> Register:
        names = [self.lookup(self.expect_name())]
        while self.at_sym(","):
            self.next()
            names.append(self.lookup(self.expect_name()))
        return Register(tuple(names))

    def parse_bracketed_register(self) -> Register:
        self.expect_sym("[")
        reg = self.parse_register()
        self.expect_sym("]")
        return reg

    def parse_stmt(self):
        t = self.peek()
        if t.kind == "SYM" and t.text == "(":
            self.next()
            node = self.parse_program()
            self.expect_sym(")")
            return node
        if t.kind != "NAME":
            self.fail(f"expected a statement, got {t.text!r}")
        if t.text in ("end", "done", "do", "M", "qubit", "qint", "params"):
            self.fail(f"expected a statement, got {t.text!r}")
        if t.text == "abort":
            self.next()
            return Abort(self.parse_bracketed_register())
        if t.text == "skip":
            self.next()
            return Skip(self.parse_bracketed_register())
        if t.text == "case":
            self.next()
            return self.parse_case()
        if t.text == "while":
            self.next()
            return self.parse_while()
        return self.parse_assignment()

    def parse_guard(self):
        self.expect_name("M")
        kraus = None
        if self.at_sym("{"):
            self.next()
            mats = [self.parse_matrix()]
            while self.at_sym(","):
                self.next()
                mats.append(self.parse_matrix())
            self.expect_sym("}")
            kraus = tuple(mats)
        measured = self.parse_bracketed_register()
        try:
            meas = Measurement(kraus)
        except ValidationError as e:
            raise ValidationError(f"in measurement of {measured.names}: {e}")
        if kraus is None and len(measured) != 1:
            raise ValidationError(
                "computational-basis guards measure exactly one variable"
            )
        return measured, meas

    def parse_case(self):
        measured, meas = self.parse_guard()
        self.expect_sym("=")
        branches = []
        labels = []
        while self.peek().kind == "INT" and self.at_sym("->", 1):
            labels.append(self.expect_int())
            self.expect_sym("->")
            branches.append(self.parse_program())
        tok = self.expect_name("end")
        if labels != list(range(len(labels))):
            raise ValidationError(
                f"{tok.line}:{tok.col}: case outcomes must be 0..n-1 in order, "
                f"got {labels}"
            )
        return Case(measured, meas, tuple(branches))

    def parse_while(self):
        self.expect_sym("(")
        bound = self.expect_int()
        self.expect_sym(")")
        measured, meas = self.parse_guard()
        self.expect_sym("=")
        one = self.expect_int()
        if one != 1:
            self.fail("while guard compares against outcome 1")
        self.expect_name("do")
        body = self.parse_program()
        self.expect_name("done")
        return While(bound, measured, meas, body)

    def parse_assignment(self):
        lhs_first = self.expect_name()
        lhs = [self.lookup(lhs_first)]
        while self.at_sym(","):
            self.next()
            lhs.append(self.lookup(self.expect_name()))
        self.expect_sym(":=")
        if self.peek().kind == "KET0":
            self.next()
            if len(lhs) != 1:
                raise ValidationError(
                    f"{lhs_first.line}:{lhs_first.col}: initialization targets "
                    "one variable"
                )
            return Init(lhs[0])
        gate = self.parse_gate()
        target = self.parse_bracketed_register()
        if tuple(lhs) != tuple(target):
            raise ValidationError(
                f"{lhs_first.line}:{lhs_first.col}: assignment registers differ: "
                f"{[v.name for v in lhs]} vs {list(target.names)}"
            )
        return Unitary(gate, target)

    def parse_gate(self):
        t = self.expect_name()
        if t.text in ("H", "X", "Y", "Z", "CNOT"):
            return FixedGate(t.text)
        if t.text == "U":
            self.expect_sym("(")
            mat = self.parse_matrix()
            self.expect_sym(")")
            return LiteralGate(mat)
        m = _ROT_RE.match(t.text)
        if not m:
            raise ParseError(f"unknown gate {t.text!r}", t.line, t.col)
        controlled, axis, primed = m.group(1), m.group(2).upper(), m.group(3)
        if controlled and primed:
            raise ParseError(f"unknown gate {t.text!r}", t.line, t.col)
        self.expect_sym("(")
        ptok = self.expect_name()
        pm = _PARAM_RE.match(ptok.text)
        if not pm:
            raise ParseError(
                f"expected a parameter like th1, got {ptok.text!r}", ptok.line, ptok.col
            )
        j = int(pm.group(1))
        self.expect_sym(")")
        if self.k and j > self.k:
            raise ValidationError(
                f"{ptok.line}:{ptok.col}: parameter th{j} exceeds declared count "
                f"{self.k}"
            )
        if controlled:
            return ControlledShiftRotation(axis, j)
        if primed:
            return GadgetRotation(axis, j)
        return Rotation(axis, j)

    # matrices and scalars
    def parse_matrix(self) -> MatrixLiteral:
        self.expect_sym("[")
        rows = [self.parse_row()]
        while self.at_sym(","):
            self.next()
            rows.append(self.parse_row())
        self.expect_sym("]")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            self.fail("ragged matrix literal")
        return MatrixLiteral(tuple(rows))

    def parse_row(self):
        self.expect_sym("[")
        out = [self.parse_scalar()]
        while self.at_sym(","):
            self.next()
            out.append(self.parse_scalar())
        self.expect_sym("]")
        return tuple(out)

    def parse_scalar(self) -> complex:
        re_part, im_part = 0.0, 0.0
        seen_re = seen_im = False
        sign = 1.0
        if self.at_sym("+") or self.at_sym("-"):
            sign = -1.0 if self.next().text == "-" else 1.0
        while True:
            t = self.peek()
            if t.kind not in ("NUM", "INT", "IMAG"):
                self.fail(f"expected a number, got {t.text!r}")
            self.next()
            val = sign * float(t.text)
            if t.kind == "IMAG":
                if seen_im:
                    raise ParseError("two imaginary parts in one scalar", t.line, t.col)
                im_part, seen_im = val, True
            else:
                if seen_re:
                    raise ParseError("two real parts in one scalar", t.line, t.col)
                re_part, seen_re = val, True
            if self.at_sym("+") or self.at_sym("-"):
                nxt = self.peek(1)
                if nxt.kind in ("NUM", "INT", "IMAG"):
                    sign = -1.0 if self.next().text == "-" else 1.0
                    continue
            break
        return complex(re_part, im_part)


def parse(text: str) -> SourceUnit:
    """Parse a source unit; raises ParseError with line:column on bad syntax."""
    return _Parser(text).parse_unit()


def parse_program(text: str, register: Register, k: int = 0):
    """Parse a bare program against an existing declaration set."""
    p = _Parser("")
    for v in register:
        p.declare(v.name, v.dim)
    p.k = k
    p.toks = tokenize(text)
    p.pos = 0
    node = p.parse_program()
    t = p.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return node


# -- printer -----------------------------------------------------------------

_LEVEL_SUM, _LEVEL_SEQ, _LEVEL_ATOM = 0, 1, 2
_INDENT = "  "


def format_complex(z: complex) -> str:
    re_, im = z.real, z.imag
    if im == 0:
        return repr(re_)
    if re_ == 0:
        return repr(im) + "i"
    op = "+" if im > 0 else "-"
    return f"{re_!r}{op}{abs(im)!r}i"


def format_matrix(m: MatrixLiteral) -> str:
    rows = ",".join(
        "[" + ",".join(format_complex(z) for z in row) + "]" for row in m.entries
    )
    return "[" + rows + "]"


def _names(reg: Register) -> str:
    return ",".join(reg.names)


def _guard(measured: Register, meas: Measurement) -> str:
    if meas.kraus is None:
        return f"M[{_names(measured)}]"
    mats = ",".join(format_matrix(m) for m in meas.kraus)
    return f"M{{{mats}}}[{_names(measured)}]"


def _level(node) -> int:
    if isinstance(node, Sum):
        return _LEVEL_SUM
    if isinstance(node, Seq):
        return _LEVEL_SEQ
    return _LEVEL_ATOM


def _format(node, min_level: int, depth: int) -> list:
    lines = _format_bare(node, depth)
    if _level(node) < min_level:
        lines = lines.copy()
        head = lines[0]
        indent = head[: len(head) - len(head.lstrip())]
        lines[0] = indent + "(" + head.lstrip()
        lines[-1] = lines[-1] + ")"
    return lines


def _format_bare(node, depth: int) -> list:
    pad = _INDENT * depth
    if isinstance(node, Abort):
        return [pad + f"abort[{_names(node.register)}]"]
    if isinstance(node, Skip):
        return [pad + f"skip[{_names(node.register)}]"]
    if isinstance(node, Init):
        return [pad + f"{node.var.name} := |0>"]
    if isinstance(node, Unitary):
        g = node.gate
        if isinstance(g, FixedGate):
            gate = g.name
        elif isinstance(g, LiteralGate):
            gate = f"U({format_matrix(g.matrix)})"
        else:
            gate = f"{gate_name(g)}(th{g.param})"
        return [pad + f"{_names(node.register)} := {gate}[{_names(node.register)}]"]
    if isinstance(node, Seq):
        left = _format(node.first, _LEVEL_SEQ, depth)
        right = _format(node.second, _LEVEL_ATOM, depth)
        return left[:-1] + [left[-1] + ";"] + right
    if isinstance(node, Sum):
        left = _format(node.left, _LEVEL_SUM, depth)
        right = _format(node.right, _LEVEL_SEQ, depth)
        return left + [pad + "[]"] + right
    if isinstance(node, Case):
        lines = [pad + f"case {_guard(node.measured, node.measurement)} ="]
        for m, branch in enumerate(node.branches):
            lines.append(pad + _INDENT + f"{m} ->")
            lines.extend(_format(branch, _LEVEL_SUM, depth + 2))
        lines.append(pad + "end")
        return lines
    if isinstance(node, While):
        head = f"while ({node.bound}) {_guard(node.measured, node.measurement)} = 1 do"
        lines = [pad + head]
        lines.extend(_format(node.body, _LEVEL_SUM, depth + 1))
        lines.append(pad + "done")
        return lines
    raise ValidationError(f"cannot print node of type {type(node).__name__}")


def print_program(node) -> str:
    """Canonical text of a bare program."""
    return "\n".join(_format(node, _LEVEL_SUM, 0))


def print_source(unit: SourceUnit) -> str:
    """Canonical text of a source unit; parsing it back reproduces `unit`."""
    lines = []
    for v in unit.register:
        if v.dim == 2:
            lines.append(f"qubit {v.name}")
        else:
            lines.append(f"qint {v.name} : {v.dim}")
    if unit.k:
        lines.append(f"params {unit.k}")
    lines.append("")
    lines.append(print_program(unit.body))
    return "\n".join(lines) + "\n"
