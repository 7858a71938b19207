import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from sparsevolterra.errors import InputError, KernelResolutionError, NumericalError
from sparsevolterra.jacobi import CoeffVec1D, JacobiParams, jacobi_matrix, transform_1d
from sparsevolterra.kernels import KernelSpec, kernel_to_chebyshev, kernel_to_monomial, kernel_to_triangle
from sparsevolterra.operators import (
    Limits,
    apply_weight_and_reflection,
    build_D,
    build_Ey,
    build_Qy,
    build_volterra_chebyshev,
    build_volterra_clenshaw,
    build_volterra_monomial,
)
from sparsevolterra.triangle import CoeffVecTri, TriParams, block_jacobi, ncoeffs, transform_triangle

B = JacobiParams(1, 0)
P0 = TriParams(0, 0, 0)
XS = np.linspace(0.05, 0.95, 20)


def evaluate(c, x=XS):
    return CoeffVec1D(B, np.asarray(c))(x)


def integral(kernel, f, limits, x):
    upper = x if limits == "x" else 1 - x
    return quad(lambda y: kernel(x, y) * f(y), 0, upper, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def random_table(rng, degree):
    return {(n, j): float(rng.standard_normal()) for n in range(degree + 1) for j in range(n + 1)}


def table_kernel(table):
    return lambda x, y: sum(c * x ** (n - j) * y**j for (n, j), c in table.items())


# --- Q_y, E_y, D -------------------------------------------------------------


def test_qy_examples():
    Q = build_Qy(6).toarray()
    e0 = np.eye(ncoeffs(6))[0]
    np.testing.assert_allclose(Q @ e0, np.eye(7)[0])
    fy = transform_triangle(lambda x, y: y, P0, 6).coeffs
    x = np.linspace(0, 1, 20)
    np.testing.assert_allclose((1 - x) * evaluate(Q @ fy, x), (1 - x) ** 2 / 2, atol=1e-13)


def test_qy_random_polynomial(rng):
    v = CoeffVecTri(P0, rng.standard_normal(ncoeffs(6)))
    Q = build_Qy(6).toarray()
    for x in XS:
        ref = quad(lambda y: v(x, y), 0, 1 - x, epsabs=1e-14)[0]
        assert abs((1 - x) * evaluate(Q @ v.coeffs, x) - ref) < 1e-12


def test_ey_blocks():
    E = build_Ey(3).toarray()
    np.testing.assert_allclose(E[0:1, 0], [1.0])
    np.testing.assert_allclose(E[1:3, 1], [-0.5, 1.5])


def test_ey_extends_in_y(rng):
    # the lifted function is constant along x: (E_y f)(x, y) = f(y)
    c = np.zeros(7)
    c[:2] = transform_1d(lambda t: t, B, 2).coeffs
    lifted = CoeffVecTri(P0, build_Ey(6).toarray() @ c)
    assert lifted(0.3, 0.5) == pytest.approx(0.5, abs=1e-13)
    c = rng.standard_normal(7)
    lifted = CoeffVecTri(P0, build_Ey(6).toarray() @ c)
    x, y = rng.random(20) * 0.5, rng.random(20) * 0.5
    np.testing.assert_allclose(lifted(x, y), evaluate(c, y), atol=1e-12)


def test_d_examples():
    D = build_D(5)
    np.testing.assert_allclose(D.diagonal()[:3], [1, -0.5, 1 / 3], atol=1e-16)
    P = build_Qy(4).toarray() @ build_Ey(4).toarray()
    assert np.max(np.abs(P - D.todense())) <= 1e-15
    assert np.max(np.abs(P - np.diag(np.diag(P)))) <= 1e-15


def test_commutation_relations():
    for d in (10, 40, 99):
        Q, E = build_Qy(d).toarray(), build_Ey(d).toarray()
        Jx = block_jacobi(P0, "x", d).todense()
        Jy = block_jacobi(P0, "y", d).todense()
        J = jacobi_matrix(B, d + 1).todense()
        inner = ncoeffs(d - 2)
        assert np.max(np.abs((Q @ Jx - J @ Q)[: d - 1, :inner])) < 1e-13
        assert np.max(np.abs((Jy @ E - E @ J)[:inner, : d - 1])) < 1e-13


# --- monomial path -----------------------------------------------------------


def test_kernel_to_monomial_examples():
    assert kernel_to_monomial("1") == {(0, 0): 1.0}
    assert kernel_to_monomial("x - y") == {(1, 0): 1.0, (1, 1): -1.0}
    table = kernel_to_monomial("exp(y - x)", M=12)
    x, y = np.meshgrid(np.linspace(0, 1, 60), np.linspace(0, 1, 60))
    inside = x + y <= 1
    resid = table_kernel(table)(x[inside], y[inside]) - np.exp(y[inside] - x[inside])
    assert np.max(np.abs(resid)) < 1e-12
    with pytest.raises(KernelResolutionError, match="Clenshaw"):
        kernel_to_monomial("1 - cos(10*pi*(x - y))", M=10)
    with pytest.raises(KernelResolutionError):
        kernel_to_monomial("x^3", M=2)


def test_monomial_examples():
    one = np.eye(40)[0]
    V = build_volterra_monomial({(0, 0): 1.0}, "1-x", 40).weighted()
    np.testing.assert_allclose(evaluate(V @ one), 1 - XS, atol=1e-13)
    V = build_volterra_monomial({(1, 0): 1.0, (1, 1): -1.0}, "x", 40).weighted()
    assert evaluate(V @ one, 0.5) == pytest.approx(0.125, abs=1e-14)
    table = kernel_to_monomial("exp(y - x)", M=12)
    f = transform_1d(lambda y: 4 * y * np.exp(y), B, 40).coeffs
    V = build_volterra_monomial(table, "x", 40).weighted()
    exact = np.exp(-XS) + np.exp(XS) * (2 * XS - 1)
    np.testing.assert_allclose(evaluate(V @ f), exact, atol=1e-11)
    assert evaluate(V @ f, 0.5) == pytest.approx(np.exp(-0.5), abs=1e-11)


def test_monomial_rejects_bad_index():
    with pytest.raises(InputError):
        build_volterra_monomial({(1, 2): 1.0}, "x", 5)


@given(st.integers(0, 2**32 - 1), st.integers(0, 8), st.sampled_from(["x", "1-x"]))
def test_bandedness(seed, M, limits):
    rng = np.random.default_rng(seed)
    op = build_volterra_monomial(random_table(rng, M), limits, 40)
    A = op.todense()
    i, j = np.indices(A.shape)
    assert np.all(np.abs(A[np.abs(i - j) > M + 2]) < 1e-14)
    lo, hi = op.matrix.bandwidths
    assert lo <= M + 1 and hi <= M + 1


# --- Clenshaw paths ----------------------------------------------------------


def test_clenshaw_examples():
    e0 = CoeffVecTri.unit(P0, 0, 0, 0)
    for limits in ("x", "1-x"):
        a = build_volterra_clenshaw(e0, limits, 30).todense()
        b = build_volterra_monomial({(0, 0): 1.0}, limits, 30).todense()
        assert np.max(np.abs(a - b)) < 1e-14
        xy = transform_triangle(lambda x, y: x * y, P0, 2)
        a = build_volterra_clenshaw(xy, limits, 30).todense()
        b = build_volterra_monomial({(2, 1): 1.0}, limits, 30).todense()
        assert np.max(np.abs(a - b)) < 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(0, 8), st.sampled_from(["x", "1-x"]))
def test_monomial_clenshaw_agree(seed, M, limits):
    rng = np.random.default_rng(seed)
    table = random_table(rng, M)
    K = KernelSpec.monomial(table)
    r = kernel_to_triangle(K, limits)
    a = build_volterra_clenshaw(r.coeffs, limits, 80, reflected_input=r.reflected).todense()
    b = build_volterra_monomial(table, limits, 80).todense()
    assert np.max(np.abs(a - b)) < 1e-11


@given(st.integers(0, 2**32 - 1), st.integers(0, 8), st.sampled_from(["x", "1-x"]))
def test_monomial_chebyshev_agree(seed, M, limits):
    rng = np.random.default_rng(seed)
    table = random_table(rng, M)
    A, reflected, converged = kernel_to_chebyshev(KernelSpec.monomial(table), limits)
    assert converged
    a = build_volterra_chebyshev(A, limits, 60, reflected_input=reflected).todense()
    b = build_volterra_monomial(table, limits, 60).todense()
    assert np.max(np.abs(a - b)) < 1e-11


@given(st.integers(0, 2**32 - 1), st.sampled_from(["x", "1-x"]))
def test_operator_matches_quadrature(seed, limits):
    rng = np.random.default_rng(seed)
    table = random_table(rng, int(rng.integers(0, 5)))
    fc = rng.standard_normal(6)
    V = build_volterra_monomial(table, limits, 20).weighted()
    got = evaluate(V @ np.pad(fc, (0, 14)), XS[:5])
    f = lambda y: CoeffVec1D(B, fc)(y)  # noqa: E731
    ref = [integral(table_kernel(table), f, limits, x) for x in XS[:5]]
    np.testing.assert_allclose(got, ref, atol=1e-11)


SET2A = "1 - cos(10*pi*(x - y))"


@pytest.mark.parametrize("limits", ["x", "1-x"])
def test_oscillatory_kernel_on_square_path(limits):
    k = KernelSpec.expression(SET2A)
    A, reflected, converged = kernel_to_chebyshev(k, limits)
    assert converged
    V = build_volterra_chebyshev(A, limits, 60, reflected_input=reflected).weighted()
    ref = [integral(k, lambda y: 1.0, limits, x) for x in XS]
    np.testing.assert_allclose(evaluate(V @ np.eye(60)[0]), ref, atol=1e-12)


@pytest.mark.xfail(strict=True, reason="operator Clenshaw over the triangle basis is unstable at high degree")
@pytest.mark.parametrize("limits", ["x", "1-x"])
def test_oscillatory_kernel_triangle_degree_60(limits):
    k = KernelSpec.expression(SET2A)
    r = kernel_to_triangle(k, limits, degree=60)
    V = build_volterra_clenshaw(r.coeffs, limits, 60, reflected_input=r.reflected).weighted()
    ref = [integral(k, lambda y: 1.0, limits, x) for x in XS]
    np.testing.assert_allclose(evaluate(V @ np.eye(60)[0]), ref, atol=1e-9)


def test_clenshaw_overflow():
    huge = CoeffVecTri(P0, np.full(ncoeffs(3), 1e303))
    with pytest.raises(NumericalError, match="overflow"):
        build_volterra_clenshaw(huge, "1-x", 10)


# --- weights -----------------------------------------------------------------


def test_weight_examples():
    one = np.eye(30)[0]
    core = build_volterra_monomial({(0, 0): 1.0}, "1-x", 30)
    np.testing.assert_allclose(evaluate(apply_weight_and_reflection(core) @ one), 1 - XS, atol=1e-13)
    core = build_volterra_monomial({(0, 0): 1.0}, "x", 30)
    W = apply_weight_and_reflection(core)
    np.testing.assert_allclose(evaluate(W @ one), XS, atol=1e-13)
    lo, hi = core.matrix.bandwidths
    assert W.bandwidths[0] <= lo + 2 and W.bandwidths[1] <= hi + 2


def test_limits_parse():
    assert Limits.parse("1 - x") is Limits.ZERO_TO_ONE_MINUS_X
    with pytest.raises(InputError):
        Limits.parse("2x")
