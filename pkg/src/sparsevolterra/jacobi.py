"""Shifted Jacobi polynomials on [0, 1].

Convention: ``P~_n^(a, b)(x) = P_n^(a, b)(2x - 1)`` in the classical
(non-orthonormal) normalisation, orthogonal under the weight
``(1 - x)**a * x**b``.  So ``a`` pairs with the ``(1 - x)`` factor and ``b``
with ``x``.  The raising, lowering and reflection operators below all follow
from that pairing.

Coefficient-space operators act on coefficient vectors ``f`` so that
``P(x).T @ (J @ f) == x * f(x)``: column ``n`` of ``J`` holds the expansion of
``x P~_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln, gammaln

from .banded import BandedOp
from .errors import DomainError, InputError, NumericalError, ParameterError


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise ParameterError(
                f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})"
            )

    def swapped(self):
        return JacobiParams(self.beta, self.alpha)


def as_params(params) -> JacobiParams:
    if isinstance(params, JacobiParams):
        return params
    a, b = params
    return JacobiParams(float(a), float(b))


@dataclass(frozen=True)
class CoeffVec1D:
    """Coefficients of ``sum_n c_n P~_n^(a, b)``."""

    params: JacobiParams
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "params", as_params(self.params))
        c = np.array(self.coeffs, dtype=float).ravel()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.size

    def __call__(self, x, extrapolate=False):
        return eval_clenshaw_1d(self, x, extrapolate=extrapolate)

    def padded(self, n):
        c = np.zeros(n)
        m = min(n, self.coeffs.size)
        c[:m] = self.coeffs[:m]
        return CoeffVec1D(self.params, c)


# ---------------------------------------------------------------------------
# recurrences


def _classical_recurrence(a, b, n_max):
    """``t P_n = A_n P_{n+1} + B_n P_n + C_n P_{n-1}`` on [-1, 1], n = 0..n_max-1."""
    n = np.arange(n_max, dtype=float)
    s = 2 * n + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        A = 2 * (n + 1) * (n + a + b + 1) / ((s + 1) * (s + 2))
        B = (b * b - a * a) / (s * (s + 2))
        C = 2 * (n + a) * (n + b) / (s * (s + 1))
    A[0] = 2.0 / (a + b + 2)
    B[0] = (b - a) / (a + b + 2)
    C[0] = 0.0
    return A, B, C


def recurrence_coeffs(params, n_max):
    """Entries of the finite section of ``J`` (multiplication by x).

    Returns ``(a, b, c)``: ``a`` (length ``n_max``) is the diagonal, ``b`` the
    super-diagonal ``J[n, n+1]`` and ``c`` the sub-diagonal ``J[n+1, n]`` (both
    length ``n_max - 1``).  With these, ``x P~_n = b_{n-1} P~_{n-1} + a_n P~_n
    + c_n P~_{n+1}``.
    """
    p = as_params(params)
    if n_max < 1:
        raise ParameterError("n_max must be at least 1")
    A, B, C = _classical_recurrence(p.alpha, p.beta, n_max + 1)
    a = (B[:n_max] + 1) / 2
    c = A[: n_max - 1] / 2
    b = C[1:n_max] / 2
    return a, b, c


def jacobi_matrix(params, N) -> BandedOp:
    """N x N section of the Jacobi operator, bandwidths (1, 1)."""
    a, b, c = recurrence_coeffs(params, N)
    return BandedOp.tridiag(c, a, b)


def norms_squared(params, n_max):
    """``int_0^1 (1-x)^a x^b P~_n(x)^2 dx`` for n = 0..n_max-1."""
    p = as_params(params)
    a, b = p.alpha, p.beta
    n = np.arange(n_max, dtype=float)
    h = np.empty(n_max)
    h[0] = np.exp(betaln(a + 1, b + 1))
    if n_max > 1:
        m = n[1:]
        h[1:] = np.exp(
            gammaln(m + a + 1) + gammaln(m + b + 1) - gammaln(m + a + b + 1) - gammaln(m + 1)
        ) / (2 * m + a + b + 1)
    return h


# ---------------------------------------------------------------------------
# evaluation


def _check_interval(x, extrapolate):
    x = np.asarray(x, dtype=float)
    if not extrapolate and (np.any(x < 0.0) or np.any(x > 1.0)):
        raise DomainError("evaluation point outside [0, 1]; pass extrapolate=True to allow")
    return x


def vandermonde(params, n, x, extrapolate=True):
    """Matrix ``V[i, m] = P~_m(x_i)`` by forward recurrence."""
    x = _check_interval(x, extrapolate)
    a, b, c = recurrence_coeffs(params, max(n, 2))
    V = np.zeros(x.shape + (n,))
    if n == 0:
        return V
    V[..., 0] = 1.0
    if n > 1:
        V[..., 1] = (x - a[0]) / c[0]
    for m in range(1, n - 1):
        V[..., m + 1] = ((x - a[m]) * V[..., m] - b[m - 1] * V[..., m - 1]) / c[m]
    return V


def orthonormal_vandermonde(params, n, x):
    """``Q[i, m] = P~_m(x_i) / sqrt(h_m)`` via the symmetric recurrence."""
    p = as_params(params)
    x = np.asarray(x, dtype=float)
    a, b, c = recurrence_coeffs(p, max(n, 2))
    off = np.sqrt(b * c)
    Q = np.zeros(x.shape + (n,))
    if n == 0:
        return Q
    Q[..., 0] = np.exp(-0.5 * betaln(p.alpha + 1, p.beta + 1))
    if n > 1:
        Q[..., 1] = (x - a[0]) * Q[..., 0] / off[0]
    for m in range(1, n - 1):
        Q[..., m + 1] = ((x - a[m]) * Q[..., m] - off[m - 1] * Q[..., m - 1]) / off[m]
    return Q


def eval_clenshaw_1d(v: CoeffVec1D, x, extrapolate=False):
    """``sum_n c_n P~_n(x)`` by backward recurrence; vectorised over ``x``."""
    x = _check_interval(x, extrapolate)
    f = v.coeffs
    n = f.size
    if n == 0:
        return np.zeros_like(x)[()]
    a, b, c = recurrence_coeffs(v.params, n + 1)
    # P_{m+1} = (x - a_m)/c_m P_m - b_{m-1}/c_m P_{m-1}
    y1 = np.zeros_like(x)
    y2 = np.zeros_like(x)
    for m in range(n - 1, -1, -1):
        alpha_m = (x - a[m]) / c[m]
        beta_next = -b[m] / c[m + 1] if m + 1 < n else 0.0
        y1, y2 = f[m] + alpha_m * y1 + beta_next * y2, y1
    return y1[()] if np.ndim(y1) == 0 else y1


# ---------------------------------------------------------------------------
# quadrature and transforms


def gauss_nodes_weights(params, N):
    """N-point Gauss rule on [0, 1] for the weight ``(1-x)^a x^b``.

    Nodes are eigenvalues of the symmetric (orthonormal) Jacobi matrix; the
    weights come from the Christoffel function of the same recurrence, which
    keeps full relative accuracy near the endpoints.
    """
    p = as_params(params)
    if N < 1:
        raise ParameterError("N must be at least 1")
    a, b, c = recurrence_coeffs(p, N + 1)
    off = np.sqrt(b * c)
    try:
        nodes = eigh_tridiagonal(a[:N], off[: N - 1], eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Golub-Welsch eigensolver failed for N={N}, params={p}: {exc}")
    q0 = np.exp(-0.5 * betaln(p.alpha + 1, p.beta + 1))

    def sweep(x):
        # orthonormal recurrence: x q_n = off_{n-1} q_{n-1} + a_n q_n + off_n q_{n+1}
        q_prev, dq_prev = np.zeros_like(x), np.zeros_like(x)
        q, dq = np.full_like(x, q0), np.zeros_like(x)
        total = q * q
        for m in range(N):
            prev = off[m - 1] if m > 0 else 0.0
            q_next = ((x - a[m]) * q - prev * q_prev) / off[m]
            dq_next = (q + (x - a[m]) * dq - prev * dq_prev) / off[m]
            q_prev, q, dq_prev, dq = q, q_next, dq, dq_next
            if m < N - 1:
                total += q * q
        return q, dq, total

    # Newton polish: eigenvalues are only accurate to eps absolute, which
    # spoils discrete orthogonality at high degree near the endpoints
    for _ in range(2):
        qN, dqN, _ = sweep(nodes)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dqN != 0, qN / dqN, 0.0)
        nodes = nodes - np.where(np.isfinite(step), step, 0.0)
    _, _, total = sweep(nodes)
    weights = 1.0 / total
    if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
        raise NumericalError(f"non-finite Gauss rule for N={N}, params={p}")
    return nodes, weights


def transform_1d(f, params, N, oversample=2):
    """Expansion coefficients of degree ``N - 1`` by Gauss projection.

    ``f`` is a vectorised callable, or an array of samples at the nodes of the
    ``oversample * N``-point rule returned by :func:`gauss_nodes_weights`.
    """
    p = as_params(params)
    M = max(N, int(np.ceil(oversample * N)))
    x, w = gauss_nodes_weights(p, M)
    vals = np.asarray(f(x) if callable(f) else f, dtype=float)
    if vals.shape != x.shape:
        vals = np.broadcast_to(vals, x.shape)
    if not np.all(np.isfinite(vals)):
        raise InputError("function samples contain NaN or Inf")
    # orthonormal recurrence keeps the high-degree columns well scaled
    Q = orthonormal_vandermonde(p, N, x)
    c = (w * vals) @ Q / np.sqrt(norms_squared(p, N))
    return CoeffVec1D(p, c)


# ---------------------------------------------------------------------------
# conversion operators


def raising_S(params, which, N) -> BandedOp:
    """Connection matrix from ``P~^(a, b)`` to ``P~^(a+1, b)`` or ``P~^(a, b+1)``.

    Bandwidths (0, 1).
    """
    p = as_params(params)
    a, b = p.alpha, p.beta
    n = np.arange(N, dtype=float)
    s = 2 * n + a + b + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (n + a + b + 1) / s
        if which == "alpha":
            sup = -(n + b) / s
        elif which == "beta":
            sup = (n + a) / s
        else:
            raise ValueError("which must be 'alpha' or 'beta'")
    diag[0] = 1.0
    data = np.zeros((N, 2))
    data[:, 0] = diag
    data[:-1, 1] = sup[1:]
    return BandedOp(data, 0, 1)


def weighted_lowering_L(params, which, N) -> BandedOp:
    """Weighted lowering from ``params`` with (N+1) x N shape, bandwidths (1, 0).

    Lowering ``alpha`` multiplies by ``(1 - x)``; lowering ``beta`` multiplies
    by ``x``.  The extra row makes the map exact on degrees below ``N``.
    """
    p = as_params(params)
    a, b = p.alpha, p.beta
    if which == "alpha":
        if not a - 1 > -1:
            raise ParameterError(f"cannot lower alpha={a} below the legal range")
    elif which == "beta":
        if not b - 1 > -1:
            raise ParameterError(f"cannot lower beta={b} below the legal range")
    else:
        raise ValueError("which must be 'alpha' or 'beta'")
    n = np.arange(N, dtype=float)
    s = 2 * n + a + b + 1
    if which == "alpha":
        diag, sub = (n + a) / s, -(n + 1) / s
    else:
        diag, sub = (n + b) / s, (n + 1) / s
    data = np.zeros((N + 1, 2))
    data[:N, 1] = diag
    data[1:, 0] = sub
    return BandedOp(data, 1, 0, N)


def lowered_params(params, which):
    p = as_params(params)
    return JacobiParams(p.alpha - 1, p.beta) if which == "alpha" else JacobiParams(p.alpha, p.beta - 1)


def reflection_R(v: CoeffVec1D) -> CoeffVec1D:
    """``f(x) -> f(1 - x)``: swap parameters and flip odd coefficients."""
    signs = np.where(np.arange(len(v)) % 2 == 0, 1.0, -1.0)
    return CoeffVec1D(v.params.swapped(), v.coeffs * signs)


def reflection_matrix(N) -> BandedOp:
    return BandedOp.diag(np.where(np.arange(N) % 2 == 0, 1.0, -1.0))
