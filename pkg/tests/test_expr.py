import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsevolterra.errors import InputError
from sparsevolterra.expr import (
    BinOp,
    Call,
    Const,
    ExpressionSyntaxError,
    Neg,
    Num,
    UnknownIdentifierError,
    Var,
    evaluate,
    parse_expression,
    to_function,
    to_polynomial,
    to_text,
)


@pytest.mark.parametrize(
    "text, point, value",
    [
        ("1 - cos(10*pi*(x - y))", (0.1, 0.1), 0.0),
        ("exp(y - x)", (0.5, 0.5), 1.0),
        ("x^2 + 3*x*y", (2.0, 1.0), 10.0),
    ],
)
def test_examples(text, point, value):
    node = parse_expression(text)
    assert evaluate(node, x=point[0], y=point[1]) == pytest.approx(value, abs=1e-15)


def test_precedence():
    assert parse_expression("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert evaluate(parse_expression("-x^2"), x=3.0, y=0.0) == -9.0
    assert parse_expression("x - y - 1") == BinOp("-", BinOp("-", Var("x"), Var("y")), Num(1.0))
    assert parse_expression("x / y * 2") == BinOp("*", BinOp("/", Var("x"), Var("y")), Num(2.0))
    assert evaluate(parse_expression("2^3^2"), x=0, y=0) == 64.0
    assert evaluate(parse_expression("1 + 2*3"), x=0, y=0) == 7.0
    assert evaluate(parse_expression("x^-2"), x=2.0, y=0) == 0.25


def test_vectorised():
    f = to_function(parse_expression("1"))
    assert f(np.zeros((3, 2)), np.zeros((3, 2))).shape == (3, 2)
    g = to_function(parse_expression("sin(x) * cosh(y)"))
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(g(x, x), np.sin(x) * np.cosh(x))


def test_polynomial_readoff():
    assert to_polynomial(parse_expression("x^2 + 3*x*y")) == {(2, 0): 1.0, (1, 1): 3.0}
    assert to_polynomial(parse_expression("(x - y)/2")) == {(1, 0): 0.5, (0, 1): -0.5}
    assert to_polynomial(parse_expression("exp(x)")) is None
    assert to_polynomial(parse_expression("x/y")) is None
    assert to_polynomial(parse_expression("cos(pi)*y"))[(0, 1)] == pytest.approx(-1.0)


@pytest.mark.parametrize(
    "text, offset",
    [("1 + * x", 4), ("(x + y", 6), ("x y", 2), ("x + y )", 6), ("x + é", 4), ("", 0)],
)
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(text)
    assert info.value.offset == offset
    assert isinstance(info.value, InputError)
    lines = str(info.value).splitlines()
    assert lines[1].strip() == text.strip()
    assert lines[2].index("^") - 2 == len(text.encode()[:offset].decode())


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError, match="'z'"):
        parse_expression("x + z")
    with pytest.raises(UnknownIdentifierError, match="'tan'"):
        parse_expression("tan(x)")


def test_bad_exponent():
    with pytest.raises(ExpressionSyntaxError, match="integer"):
        parse_expression("x^y")
    with pytest.raises(ExpressionSyntaxError, match="integer"):
        parse_expression("x^0.5")


numbers = st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num)
leaves = st.one_of(numbers, st.sampled_from([Var("x"), Var("y"), Const("pi")]))
exponents = st.integers(-4, 4).map(lambda n: Neg(Num(float(-n))) if n < 0 else Num(float(n)))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(children, exponents).map(lambda t: BinOp("^", *t)),
        st.tuples(st.sampled_from(["exp", "sin", "cos", "sinh", "cosh"]), children).map(lambda t: Call(*t)),
    )


def depth(node):
    if isinstance(node, (Num, Var, Const)):
        return 0
    if isinstance(node, (Neg, Call)):
        return 1 + depth(node.operand if isinstance(node, Neg) else node.arg)
    return 1 + max(depth(node.left), depth(node.right))


trees = st.recursive(leaves, _extend, max_leaves=24).filter(lambda n: depth(n) <= 6)


@given(trees)
def test_round_trip(tree):
    assert parse_expression(to_text(tree)) == tree
