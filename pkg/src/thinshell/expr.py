"""Parser and evaluator for the scalar expressions used in run configs.

Grammar, loosest binding first::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | FUNC '(' sum ')' | '(' sum ')'

so ``-2^2 == -4`` and ``2^3^2 == 512``.  There is no implicit
multiplication.  Expressions are evaluated either on floats or on jets, in
which case every derivative up to order 4 comes out exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from . import jets as J

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
MAX_DEPTH = 100


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    """Malformed expression.  ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int, expected: Sequence[str] = ()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class UnboundVariable(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unbound variable {name!r} at byte {offset}")


# -- AST ----------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Const:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    index: int
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    offset: int = field(default=0, compare=False)


Node = Num | Const | Var | Neg | BinOp | Call


@dataclass(frozen=True)
class Expr:
    root: Node
    variables: tuple[str, ...]

    def __str__(self) -> str:
        return pretty(self)

    @property
    def nvars(self) -> int:
        return len(self.variables)


# -- tokenizer ------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # num | name | op | end
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    out = []
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte, ["number", "name", "operator"])
        text = m.group()
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, text, byte))
        pos = m.end()
        byte += len(text.encode("utf-8"))
    out.append(_Tok("end", "", byte))
    return out


# -- parser ---------------------------------------------------------------

_AFTER_OPERAND = ("+", "-", "*", "/", "^", ")", "end of input")
_OPERAND = ("number", "name", "(", "-")


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.toks = _tokenize(source)
        self.i = 0
        self.vars = {name: k for k, name in enumerate(variables)}
        self.depth = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def expect(self, text: str, expected: Sequence[str]) -> _Tok:
        if not self.at(text):
            raise ExprSyntaxError(f"unexpected {self.describe()}", self.tok.offset, expected)
        return self.advance()

    def describe(self) -> str:
        t = self.tok
        return "end of input" if t.kind == "end" else repr(t.text)

    def parse(self) -> Node:
        node = self.sum()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.describe()}", self.tok.offset, _AFTER_OPERAND[:-2] + ("end of input",))
        return node

    def sum(self) -> Node:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", self.tok.offset)
        node = self.product()
        while self.at("+") or self.at("-"):
            t = self.advance()
            node = BinOp(t.text, node, self.product(), t.offset)
        self.depth -= 1
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.at("*") or self.at("/"):
            t = self.advance()
            node = BinOp(t.text, node, self.unary(), t.offset)
        return node

    def unary(self) -> Node:
        if self.at("-"):
            t = self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise ExprSyntaxError("expression nested too deeply", t.offset)
            node = Neg(self.unary(), t.offset)
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at("^"):
            t = self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise ExprSyntaxError("expression nested too deeply", t.offset)
            node = BinOp("^", base, self.unary(), t.offset)
            self.depth -= 1
            return node
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text), t.offset)
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(", ["("])
                arg = self.sum()
                self.expect(")", [")", "+", "-", "*", "/", "^"])
                return Call(t.text, arg, t.offset)
            if self.at("("):
                raise ExprSyntaxError(f"unknown function {t.text!r}", t.offset, FUNCTIONS)
            if t.text in self.vars:
                return Var(t.text, self.vars[t.text], t.offset)
            if t.text in CONSTANTS:
                return Const(t.text, t.offset)
            raise UnboundVariable(t.text, t.offset)
        if self.at("("):
            self.advance()
            node = self.sum()
            self.expect(")", [")", "+", "-", "*", "/", "^"])
            return node
        raise ExprSyntaxError(f"unexpected {self.describe()}", t.offset, _OPERAND)


def parse(source: str, variables: Sequence[str]) -> Expr:
    """Parse ``source`` with the declared ``variables`` (e.g. ``["u1", "u2"]``)."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, _OPERAND)
    for name in variables:
        if name in FUNCTIONS or name in CONSTANTS:
            raise ValueError(f"variable name {name!r} shadows a built-in")
    return Expr(_Parser(source, variables).parse(), tuple(variables))


# -- pretty printer -------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG = 3
_ATOM = 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg) or (isinstance(node, Num) and (node.value < 0 or math.copysign(1, node.value) < 0)):
        return _NEG
    return _ATOM


def _fmt(node: Node, min_prec: int) -> str:
    text = _show(node)
    return f"({text})" if _prec(node) < min_prec else text


def _show(node: Node) -> str:
    if isinstance(node, Num):
        v = node.value
        if math.copysign(1, v) < 0:
            return "-" + repr(-v)
        return repr(v)
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        return "-" + _fmt(node.operand, _NEG)
    if isinstance(node, Call):
        return f"{node.func}({_show(node.arg)})"
    p = _PREC[node.op]
    if node.op == "^":
        return f"{_fmt(node.left, _ATOM)}^{_fmt(node.right, _NEG)}"
    return f"{_fmt(node.left, p)}{node.op}{_fmt(node.right, p + 1)}"


def pretty(expr: Expr | Node) -> str:
    return _show(expr.root if isinstance(expr, Expr) else expr)


# -- evaluation -----------------------------------------------------------


def _float_call(func: str, x: float) -> float:
    if func == "sqrt" and x < 0:
        raise J.DomainError("sqrt of a negative value")
    if func == "log" and x <= 0:
        raise J.DomainError("log of a non-positive value")
    return {
        "sin": math.sin,
        "cos": math.cos,
        "tan": math.tan,
        "exp": math.exp,
        "log": math.log,
        "sqrt": math.sqrt,
        "abs": abs,
    }[func](x)


def _float_pow(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise J.DomainError(f"negative base raised to non-integer power {b}")
    if a == 0 and b < 0:
        raise J.DivisionByZero("zero raised to a negative power")
    return a**b


def _eval(node: Node, env, jet_space) -> object:
    try:
        if isinstance(node, Num):
            return node.value if jet_space is None else J.Jet.constant(node.value, jet_space)
        if isinstance(node, Const):
            v = CONSTANTS[node.name]
            return v if jet_space is None else J.Jet.constant(v, jet_space)
        if isinstance(node, Var):
            return env[node.index]
        if isinstance(node, Neg):
            return -_eval(node.operand, env, jet_space)
        if isinstance(node, Call):
            x = _eval(node.arg, env, jet_space)
            return _float_call(node.func, x) if jet_space is None else J.UNARY[node.func](x)
        a = _eval(node.left, env, jet_space)
        b = _eval(node.right, env, jet_space)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if jet_space is None and b == 0:
                raise J.DivisionByZero("division by zero")
            return a / b
        return _float_pow(a, b) if jet_space is None else J.power(a, b)
    except J.JetError as exc:
        if exc.offset is None:
            exc.offset = node.offset
        raise
    except (OverflowError, ValueError) as exc:
        raise J.DomainError(str(exc), node.offset) from exc


def evaluate(expr: Expr, point: Sequence[float]) -> float:
    """Plain floating point evaluation."""
    if len(point) != expr.nvars:
        raise ValueError(f"expected {expr.nvars} values, got {len(point)}")
    return float(_eval(expr.root, [float(x) for x in point], None))


def eval_jet(expr: Expr, point: Sequence[J.Jet], jet_space: J.JetSpace | None = None) -> J.Jet:
    """Evaluate under jet arithmetic; ``point`` holds one jet per declared variable."""
    if len(point) != expr.nvars:
        raise ValueError(f"expected {expr.nvars} jets, got {len(point)}")
    if jet_space is None:
        if not point:
            raise ValueError("a jet space is required for expressions without variables")
        jet_space = point[0].space
    out = _eval(expr.root, list(point), jet_space)
    return out
