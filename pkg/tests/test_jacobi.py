import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_jacobi, roots_jacobi

from sparsevolterra.errors import DomainError, InputError, ParameterError
from sparsevolterra.jacobi import (
    CoeffVec1D,
    JacobiParams,
    eval_clenshaw_1d,
    gauss_nodes_weights,
    jacobi_matrix,
    norms_squared,
    raising_S,
    recurrence_coeffs,
    reflection_R,
    transform_1d,
    vandermonde,
    weighted_lowering_L,
)

LEGENDRE = JacobiParams(0, 0)
BASIS = JacobiParams(1, 0)
params_st = st.tuples(st.sampled_from([0, 1, 2, 0.5, -0.5]), st.sampled_from([0, 1, 2, 0.5, -0.5]))


def scipy_poly(p, n, x):
    # shifted classical Jacobi: P~_n(x) = P_n^(a,b)(2x - 1) with weight (1-x)^a x^b
    return eval_jacobi(n, p.alpha, p.beta, 2 * np.asarray(x) - 1)


def scipy_rule(p, m):
    t, w = roots_jacobi(m, p.alpha, p.beta)
    return (t + 1) / 2, w / 2 ** (p.alpha + p.beta + 1)


def gram_jacobi(p, N):
    x, w = scipy_rule(p, N + 4)
    P = np.stack([scipy_poly(p, n, x) for n in range(N + 1)], axis=1)
    G = (P * w[:, None]).T @ (x[:, None] * P)
    return G[:, :N] / np.diag((P * w[:, None]).T @ P)[:, None]


def test_vandermonde_matches_classical_normalization():
    x = np.linspace(0, 1, 11)
    for p in (LEGENDRE, BASIS, JacobiParams(2, 1)):
        V = vandermonde(p, 6, x)
        ref = np.stack([scipy_poly(p, n, x) for n in range(6)], axis=1)
        np.testing.assert_allclose(V, ref, rtol=1e-13, atol=1e-13)


def test_legendre_diagonal_is_half():
    a, b, c = recurrence_coeffs(LEGENDRE, 10)
    np.testing.assert_allclose(a, 0.5, atol=1e-15)


def test_toeplitz_limit_of_basis_recurrence():
    a, b, c = recurrence_coeffs(BASIS, 4000)
    assert abs(a[-1] - 0.5) < 1e-6
    assert abs(b[-1] - 0.25) < 1e-3
    assert abs(c[-1] - 0.25) < 1e-3


@pytest.mark.parametrize("p", [LEGENDRE, BASIS, JacobiParams(2, 1), JacobiParams(0.5, -0.5)])
def test_jacobi_matrix_matches_gram_oracle(p):
    N = 12
    J = jacobi_matrix(p, N + 1).todense()
    G = gram_jacobi(p, N)
    np.testing.assert_allclose(J[:, :N], G[: N + 1][: J.shape[0]], atol=1e-13)


def test_jacobi_matrix_examples():
    J = jacobi_matrix(LEGENDRE, 4)
    assert J.bandwidths == (1, 1)
    np.testing.assert_allclose(J @ np.array([1.0, 0, 0, 0]), [0.5, 0.5, 0, 0], atol=1e-15)
    x2 = transform_1d(lambda x: x**2, LEGENDRE, 4).coeffs
    np.testing.assert_allclose(J @ (J @ np.array([1.0, 0, 0, 0])), x2, atol=1e-14)
    np.testing.assert_allclose(jacobi_matrix(LEGENDRE, 1).todense(), [[0.5]])


def test_invalid_params():
    with pytest.raises(ParameterError):
        JacobiParams(-1, 0)
    with pytest.raises(ParameterError):
        recurrence_coeffs(JacobiParams(0, -2), 3)


def test_clenshaw_examples():
    assert eval_clenshaw_1d(CoeffVec1D(BASIS, [1.0]), 0.3) == pytest.approx(1.0)
    assert eval_clenshaw_1d(CoeffVec1D(LEGENDRE, [0.0, 1.0]), 0.75) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        eval_clenshaw_1d(CoeffVec1D(BASIS, [1.0]), 1.5)
    assert np.isfinite(eval_clenshaw_1d(CoeffVec1D(BASIS, [1.0, 1.0]), 1.5, extrapolate=True))


@given(st.integers(1, 40), params_st, st.integers(0, 2**32 - 1))
def test_clenshaw_matches_direct_sum(n, ab, seed):
    p = JacobiParams(*ab)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(n)
    x = rng.random(20)
    ref = np.stack([scipy_poly(p, k, x) for k in range(n)], axis=1) @ c
    scale = np.abs(np.stack([scipy_poly(p, k, x) for k in range(n)], axis=1)) @ np.abs(c)
    got = eval_clenshaw_1d(CoeffVec1D(p, c), x)
    assert np.all(np.abs(got - ref) <= 1e-13 * np.maximum(scale, 1.0))


def test_gauss_examples():
    x, w = gauss_nodes_weights(LEGENDRE, 1)
    np.testing.assert_allclose([x[0], w[0]], [0.5, 1.0])
    x, w = gauss_nodes_weights(LEGENDRE, 2)
    np.testing.assert_allclose(np.sort(x), [0.5 - 1 / (2 * np.sqrt(3)), 0.5 + 1 / (2 * np.sqrt(3))])
    np.testing.assert_allclose(w, [0.5, 0.5])
    x, w = gauss_nodes_weights(BASIS, 1)
    np.testing.assert_allclose([x[0], w[0]], [1 / 3, 0.5])


@pytest.mark.parametrize("a", [0, 1, 2])
@pytest.mark.parametrize("b", [0, 1, 2])
def test_gauss_exactness(a, b):
    p = JacobiParams(a, b)
    for N in (1, 5, 12, 20):
        x, w = gauss_nodes_weights(p, N)
        xr, wr = scipy_rule(p, N + 10)
        for k in range(2 * N):
            exact = np.sum(wr * xr**k)
            assert abs(np.sum(w * x**k) - exact) <= 1e-13 * abs(exact)


def test_norms_match_quadrature():
    for p in (LEGENDRE, BASIS, JacobiParams(2, 1)):
        x, w = scipy_rule(p, 30)
        ref = [np.sum(w * scipy_poly(p, n, x) ** 2) for n in range(10)]
        np.testing.assert_allclose(norms_squared(p, 10), ref, rtol=1e-13)


def test_transform_examples():
    np.testing.assert_allclose(transform_1d(lambda x: np.ones_like(x), BASIS, 5).coeffs, [1, 0, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(transform_1d(lambda x: x, LEGENDRE, 4).coeffs, [0.5, 0.5, 0, 0], atol=1e-15)
    v = transform_1d(np.exp, LEGENDRE, 30)
    x = np.linspace(0, 1, 100)
    assert np.max(np.abs(eval_clenshaw_1d(v, x) - np.exp(x))) < 1e-13
    with pytest.raises(InputError):
        transform_1d(lambda x: np.full_like(x, np.nan), BASIS, 4)


@pytest.mark.parametrize("f", [np.exp, lambda x: np.sin(3 * x)])
@pytest.mark.parametrize("p", [LEGENDRE, BASIS, JacobiParams(0, 1)])
def test_transform_round_trip(f, p):
    v = transform_1d(f, p, 40)
    x = np.linspace(0, 1, 201)
    assert np.max(np.abs(v(x) - f(x))) < 1e-12


def test_raising_examples():
    S = raising_S(LEGENDRE, "alpha", 6)
    assert S.bandwidths == (0, 1)
    np.testing.assert_allclose(S @ np.eye(6)[0], np.eye(6)[0], atol=1e-15)
    c = np.array([0.0, 1.0, 0, 0, 0, 0])  # 2x - 1
    out = CoeffVec1D(BASIS, S @ c)
    x = np.linspace(0, 1, 10)
    np.testing.assert_allclose(out(x), 2 * x - 1, atol=1e-13)


@given(params_st, st.sampled_from(["alpha", "beta"]), st.integers(0, 2**32 - 1))
def test_raising_preserves_function(ab, which, seed):
    p = JacobiParams(*ab)
    rng = np.random.default_rng(seed)
    N = 10
    c = np.zeros(N)
    c[: N - 1] = rng.standard_normal(N - 1)
    S = raising_S(p, which, N)
    q = JacobiParams(p.alpha + (which == "alpha"), p.beta + (which == "beta"))
    x = rng.random(15)
    np.testing.assert_allclose(CoeffVec1D(q, S @ c)(x), CoeffVec1D(p, c)(x), atol=1e-12)


def test_lowering_examples():
    L = weighted_lowering_L(BASIS, "alpha", 4)
    assert L.bandwidths == (1, 0)
    np.testing.assert_allclose((L @ np.eye(4)[0])[:2], [0.5, -0.5], atol=1e-15)
    L = weighted_lowering_L(JacobiParams(0, 1), "beta", 4)
    np.testing.assert_allclose((L @ np.eye(4)[0])[:2], [0.5, 0.5], atol=1e-15)
    with pytest.raises(ParameterError):
        weighted_lowering_L(LEGENDRE, "alpha", 3)


@given(st.sampled_from([(1, 0), (2, 1), (1, 1), (0, 1), (1.5, 2)]), st.sampled_from(["alpha", "beta"]), st.integers(0, 2**32 - 1))
def test_lowering_multiplies_by_weight(ab, which, seed):
    p = JacobiParams(*ab)
    if (p.alpha if which == "alpha" else p.beta) < 1:
        return
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(6)
    L = weighted_lowering_L(p, which, 6)
    q = JacobiParams(p.alpha - (which == "alpha"), p.beta - (which == "beta"))
    x = rng.random(20)
    factor = (1 - x) if which == "alpha" else x
    np.testing.assert_allclose(CoeffVec1D(q, L @ c)(x), factor * CoeffVec1D(p, c)(x), atol=1e-13)


def test_reflection_examples():
    r = reflection_R(CoeffVec1D(BASIS, [1.0]))
    assert r.params == JacobiParams(0, 1)
    np.testing.assert_allclose(r.coeffs, [1.0])
    r = reflection_R(CoeffVec1D(LEGENDRE, [0.5, 0.5]))
    np.testing.assert_allclose(r.coeffs, [0.5, -0.5])


@given(params_st, st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_reflection_property(ab, n, seed):
    p = JacobiParams(*ab)
    rng = np.random.default_rng(seed)
    v = CoeffVec1D(p, rng.standard_normal(n) / np.arange(1, n + 1) ** 2)
    x = rng.random(50)
    r = reflection_R(v)
    np.testing.assert_allclose(r(x), v(1 - x), atol=1e-13 * max(1.0, np.abs(v.coeffs).sum() * n))
    np.testing.assert_array_equal(reflection_R(r).coeffs, v.coeffs)
    assert reflection_R(r).params == p
