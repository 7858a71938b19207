"""Kernel / right-hand-side expression language.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' exponent)*
    exponent:= '-'? atom            (must fold to an integer constant)
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

All binary operators are left-associative, so ``x^2^3`` means ``(x^2)^3``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputError

FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
}
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


class ExpressionSyntaxError(InputError):
    def __init__(self, message, text, offset):
        self.offset = offset
        self.text = text
        caret = " " * _char_column(text, offset) + "^"
        super().__init__(f"{message} at byte {offset}\n  {text}\n  {caret}")


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


def _char_column(text, offset):
    return len(text.encode("utf-8")[:offset].decode("utf-8", errors="ignore"))


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    raw = text.encode("utf-8")
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            rest = text[pos:]
            if rest.strip() == "":
                break
            skipped = len(rest) - len(rest.lstrip())
            offset = len(text[: pos + skipped].encode("utf-8"))
            raise ExpressionSyntaxError(f"unexpected character {rest.lstrip()[0]!r}", text, offset)
        kind = m.lastgroup
        offset = len(text[: m.start(kind)].encode("utf-8"))
        tokens.append((kind, m.group(kind), offset))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", self.text, off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {val!r}", self.text, off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            off = self.peek()[2]
            if self.peek()[:2] == ("op", "-"):
                self.take()
                exponent = Neg(self.atom())
            else:
                exponent = self.atom()
            value = constant_value(exponent)
            if value is None or value != int(value):
                raise ExpressionSyntaxError("exponent must be an integer constant", self.text, off)
            node = BinOp("^", node, exponent)
        return node

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {val!r}", self.text, off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in self.variables:
                return Var(val)
            if val in CONSTANTS:
                return Const(val)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", self.text, off)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {found}", self.text, off)


def parse_expression(text: str, variables=("x", "y")) -> Node:
    return _Parser(text, tuple(variables)).parse()


# ---------------------------------------------------------------------------
# evaluation


def evaluate(node: Node, **values):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return values[node.name]
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, **values)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, **values))
    left = evaluate(node.left, **values)
    if node.op == "^":
        p = int(constant_value(node.right))
        if p < 0:
            return 1.0 / np.power(left, -p)
        return np.power(left, p)
    right = evaluate(node.right, **values)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    return left / right


def variables_of(node: Node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Num, Const)):
        return set()
    if isinstance(node, (Neg,)):
        return variables_of(node.operand)
    if isinstance(node, Call):
        return variables_of(node.arg)
    return variables_of(node.left) | variables_of(node.right)


def constant_value(node: Node):
    """Fold a variable-free subtree to a float, or return None."""
    if variables_of(node):
        return None
    with np.errstate(all="ignore"):
        value = float(evaluate(node))
    return value if math.isfinite(value) else None


def to_function(node: Node, variables=("x", "y")):
    """Vectorised callable taking the variables positionally."""

    def f(*args):
        values = dict(zip(variables, args))
        out = evaluate(node, **values)
        shape = np.broadcast(*args).shape if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    return f


# ---------------------------------------------------------------------------
# polynomial read-off


def to_polynomial(node: Node):
    """``{(px, py): coeff}`` if the expression is a polynomial in x, y, else None."""
    if isinstance(node, Num):
        return {(0, 0): node.value}
    if isinstance(node, Const):
        return {(0, 0): CONSTANTS[node.name]}
    if isinstance(node, Var):
        return {(1, 0): 1.0} if node.name == "x" else {(0, 1): 1.0}
    if isinstance(node, Call):
        c = constant_value(node)
        return None if c is None else {(0, 0): c}
    if isinstance(node, Neg):
        p = to_polynomial(node.operand)
        return None if p is None else {k: -v for k, v in p.items()}
    if node.op == "^":
        base = to_polynomial(node.left)
        power = int(constant_value(node.right))
        if base is None:
            return None
        if power < 0:
            c = constant_value(node)
            return None if c is None else {(0, 0): c}
        out = {(0, 0): 1.0}
        for _ in range(power):
            out = _poly_mul(out, base)
        return out
    left = to_polynomial(node.left)
    right = to_polynomial(node.right)
    if left is None or right is None:
        return None
    if node.op == "+":
        return _poly_add(left, right, 1.0)
    if node.op == "-":
        return _poly_add(left, right, -1.0)
    if node.op == "*":
        return _poly_mul(left, right)
    c = constant_value(node.right)
    if c is None or c == 0.0:
        return None
    return {k: v / c for k, v in left.items()}


def _poly_add(p, q, sign):
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0.0) + sign * v
    return out


def _poly_mul(p, q):
    out = {}
    for (a, b), u in p.items():
        for (c, d), v in q.items():
            key = (a + c, b + d)
            out[key] = out.get(key, 0.0) + u * v
    return out


# ---------------------------------------------------------------------------
# printing


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def to_text(node: Node) -> str:
    """Render with the minimum parentheses needed to re-parse to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    if node.op == "^":
        base = to_text(node.left)
        if _prec(node.left) < 4:
            base = f"({base})"
        return f"{base}^{to_text(node.right)}"
    p = _PREC[node.op]
    left = to_text(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = to_text(node.right)
    if _prec(node.right) <= p and not isinstance(node.right, Neg):
        right = f"({right})"
    return f"{left} {node.op} {right}"
