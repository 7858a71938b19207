import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsevolterra.symbol import (
    GRID,
    THRESHOLD,
    Verdict,
    fredholm_check,
    toeplitz_symbol,
    weighted_symbol,
    winding_number,
)

THETA = np.linspace(0, 2 * np.pi, 101)


def test_toeplitz_examples():
    s, f = toeplitz_symbol({(0, 0): 1.0})
    np.testing.assert_array_equal(s, [1.0])
    np.testing.assert_allclose(f(THETA), 1.0)
    s, f = toeplitz_symbol({(1, 0): 1.0})
    np.testing.assert_allclose(f(THETA), np.cos(THETA / 2) ** 2, atol=1e-16)
    s, f = toeplitz_symbol({(1, 0): 1.0, (1, 1): -1.0})
    assert s[1] == 0.0
    np.testing.assert_array_equal(f(THETA), 0.0)


@pytest.mark.parametrize(
    "kernel, verdict",
    [
        ("exp(y - x)", Verdict.INVERTIBLE),
        ("x - y", Verdict.NOT_FREDHOLM),
        ("1 - cos(10*pi*(x - y))", Verdict.NOT_FREDHOLM),
        ("1 + x*y", Verdict.INVERTIBLE),
        ("(x - 0.5)^2", Verdict.NOT_FREDHOLM),
        ("x - 0.3", Verdict.NOT_FREDHOLM),
    ],
)
def test_fredholm_examples(kernel, verdict):
    r = fredholm_check(kernel)
    assert r.verdict is verdict
    assert (r.min_abs_on_circle < THRESHOLD) == (verdict is Verdict.NOT_FREDHOLM)
    assert r.values.size == GRID
    assert "verdict: " + verdict.value in str(r)


def test_nonpolynomial_kernel_falls_back_to_diagonal():
    r = fredholm_check("sin(10*pi*x) + cos(10*pi*y) + 3")
    assert r.cos_coeffs.size == 0
    assert r.verdict is Verdict.INVERTIBLE
    assert r.kxx_min == pytest.approx(3 - np.sqrt(2), abs=1e-9)


def random_kernel(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(0, 5))
    table = {(n, j): float(rng.standard_normal()) for n in range(M + 1) for j in range(n + 1)}
    if rng.random() < 0.5:
        # plant a root of K(x, x) inside [0, 1]
        r = rng.random()
        s = sum(c * r**n for (n, _), c in table.items())
        table[(0, 0)] -= s
    return table


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_symbol_matches_diagonal_criterion(seed):
    table = random_kernel(seed)
    r = fredholm_check(table)
    assert np.all(np.isreal(r.values))
    assert (r.min_abs_on_circle < THRESHOLD) == (r.kxx_min < THRESHOLD)
    if r.min_abs_on_circle > 0:
        assert r.winding_number == 0
    assert r.verdict is not Verdict.INCONCLUSIVE


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_weighted_symbol_vanishes_at_zero(seed):
    table = random_kernel(seed)
    assert abs(weighted_symbol(table)(0.0)) < 1e-12


def test_winding_number():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    assert winding_number(np.exp(1j * t)) == 1
    assert winding_number(np.exp(-2j * t)) == -2
    assert winding_number(2 + np.exp(1j * t)) == 0
