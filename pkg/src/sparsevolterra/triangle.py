"""Jacobi polynomials on the triangle ``T = {x >= 0, y >= 0, x + y <= 1}``.

    P_{k,n}(x, y) = (1-x)^k  P~_{n-k}^(2k+b+g+1, a)(x)  P~_k^(g, b)(y / (1-x))

orthogonal under ``x^a y^b (1-x-y)^g``.  Coefficient vectors are stored flat,
degree-major and ``k``-minor: entry ``n(n+1)/2 + k`` multiplies ``P_{k,n}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, IllConditionedWarning, InputError, ParameterError
from .jacobi import (
    JacobiParams,
    gauss_nodes_weights,
    jacobi_matrix,
    norms_squared,
    raising_S,
    recurrence_coeffs,
    vandermonde,
    weighted_lowering_L,
)

DEFAULT_MAX_DEGREE = 64
DOMAIN_SLACK = 1e-14


@dataclass(frozen=True)
class TriParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1 and self.gamma > -1):
            raise ParameterError(f"triangle parameters must exceed -1, got {self}")

    def x_family(self, k):
        """Parameters of the univariate factor in ``x`` for column ``k``."""
        return JacobiParams(2 * k + self.beta + self.gamma + 1, self.alpha)

    @property
    def s_family(self):
        return JacobiParams(self.gamma, self.beta)


def as_tri_params(params) -> TriParams:
    if isinstance(params, TriParams):
        return params
    return TriParams(*(float(p) for p in params))


def ncoeffs(max_degree):
    return (max_degree + 1) * (max_degree + 2) // 2


def index(n, k):
    return n * (n + 1) // 2 + k


def degree_for_length(length):
    d = int(round((np.sqrt(8 * length + 1) - 3) / 2))
    if ncoeffs(d) != length:
        raise InputError(f"{length} is not a triangular number of coefficients")
    return d


@dataclass(frozen=True)
class CoeffVecTri:
    params: TriParams
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "params", as_tri_params(self.params))
        c = np.array(self.coeffs, dtype=float).ravel()
        degree_for_length(c.size)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_blocks(cls, params, blocks):
        return cls(params, np.concatenate([np.asarray(b, dtype=float) for b in blocks]))

    @classmethod
    def unit(cls, params, max_degree, n, k):
        c = np.zeros(ncoeffs(max_degree))
        c[index(n, k)] = 1.0
        return cls(params, c)

    @property
    def max_degree(self):
        return degree_for_length(self.coeffs.size)

    def block(self, n):
        return self.coeffs[index(n, 0) : index(n, 0) + n + 1]

    @property
    def blocks(self):
        return [self.block(n) for n in range(self.max_degree + 1)]

    def truncated(self, max_degree):
        c = np.zeros(ncoeffs(max_degree))
        m = min(c.size, self.coeffs.size)
        c[:m] = self.coeffs[:m]
        return CoeffVecTri(self.params, c)

    def __call__(self, x, y, extrapolate=False):
        return clenshaw_eval_triangle(self, x, y, extrapolate=extrapolate)


def _check_triangle(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if (
        np.any(x < -DOMAIN_SLACK)
        or np.any(y < -DOMAIN_SLACK)
        or np.any(x + y > 1 + DOMAIN_SLACK)
    ):
        raise DomainError("point outside the unit triangle")
    return np.broadcast_arrays(x, y)


# ---------------------------------------------------------------------------
# direct evaluation


def _homogeneous_s_values(params: TriParams, kmax, x, y):
    """``r_k = (1-x)^k P~_k^(g,b)(y/(1-x))`` for k = 0..kmax, without dividing by 1-x."""
    a_s, b_s, c_s = recurrence_coeffs(params.s_family, kmax + 2)
    w = 1.0 - x
    r = np.zeros(x.shape + (kmax + 1,))
    r[..., 0] = 1.0
    if kmax >= 1:
        r[..., 1] = (y - a_s[0] * w) / c_s[0]
    for k in range(1, kmax):
        r[..., k + 1] = (
            (y - a_s[k] * w) * r[..., k] - b_s[k - 1] * w * w * r[..., k - 1]
        ) / c_s[k]
    return r


def triangle_vandermonde(params, max_degree, x, y):
    """``V[..., index(n, k)] = P_{k,n}(x, y)`` for all n <= max_degree."""
    p = as_tri_params(params)
    x, y = _check_triangle(x, y)
    r = _homogeneous_s_values(p, max_degree, x, y)
    V = np.zeros(x.shape + (ncoeffs(max_degree),))
    for k in range(max_degree + 1):
        px = vandermonde(p.x_family(k), max_degree - k + 1, x)
        for n in range(k, max_degree + 1):
            V[..., index(n, k)] = r[..., k] * px[..., n - k]
    return V


def eval_triangle_direct(n, k, params, x, y):
    """Value of ``P_{k,n}`` by composing the two univariate factors.

    On the edge ``x = 1`` (where ``y = 0``) the ``y``-factor is taken as its
    limit: 1 for ``k = 0`` and 0 otherwise.
    """
    if not 0 <= k <= n:
        raise ParameterError(f"need 0 <= k <= n, got n={n}, k={k}")
    p = as_tri_params(params)
    x, y = _check_triangle(x, y)
    w = 1.0 - x
    px = vandermonde(p.x_family(k), n - k + 1, x)[..., n - k]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(w > 0, y / np.where(w > 0, w, 1.0), 0.0)
    qs = vandermonde(p.s_family, k + 1, s, extrapolate=True)[..., k]
    factor = np.where(w > 0, w**k * qs, 1.0 if k == 0 else 0.0)
    out = factor * px
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# block Jacobi operators


@dataclass(frozen=True)
class BlockBandedOp:
    """Block-tridiagonal coefficient-space operator.

    ``diag[n]`` is block ``(n, n)``, ``sup[n]`` block ``(n, n+1)`` of shape
    ``(n+1, n+2)`` and ``sub[n]`` block ``(n+1, n)`` of shape ``(n+2, n+1)``.
    """

    max_degree: int
    diag: tuple
    sup: tuple
    sub: tuple

    def todense(self):
        d = self.max_degree
        out = np.zeros((ncoeffs(d), ncoeffs(d)))
        for n in range(d + 1):
            r = index(n, 0)
            out[r : r + n + 1, r : r + n + 1] = self.diag[n]
            if n < d:
                r1 = index(n + 1, 0)
                out[r : r + n + 1, r1 : r1 + n + 2] = self.sup[n]
                out[r1 : r1 + n + 2, r : r + n + 1] = self.sub[n]
        return out

    def __matmul__(self, v):
        if isinstance(v, CoeffVecTri):
            return CoeffVecTri(v.params, self.todense() @ v.coeffs)
        return self.todense() @ np.asarray(v, dtype=float)


def _dense_J(params, n):
    return jacobi_matrix(params, n).todense()


def _raise_alpha_twice(p: JacobiParams, n):
    s1 = raising_S(p, "alpha", n).todense()
    s2 = raising_S(JacobiParams(p.alpha + 1, p.beta), "alpha", n).todense()
    return s2 @ s1


def _lower_alpha_twice(p: JacobiParams, n):
    """(1-x)^2 multiplication from ``p`` to alpha-2; shape (n+2, n)."""
    l1 = weighted_lowering_L(p, "alpha", n).todense()
    l2 = weighted_lowering_L(JacobiParams(p.alpha - 1, p.beta), "alpha", n + 1).todense()
    return l2 @ l1


@lru_cache(maxsize=32)
def _block_jacobi_cached(params: TriParams, max_degree: int):
    d = max_degree
    size = ncoeffs(d + 1)
    Jx = np.zeros((size, size))
    Jy = np.zeros((size, size))
    a_s, b_s, c_s = recurrence_coeffs(params.s_family, d + 3)
    for k in range(d + 2):
        m_len = d + 2 - k  # x-degrees needed in column k, plus one spare
        pk = params.x_family(k)
        Jk = _dense_J(pk, m_len + 2)
        S2 = _raise_alpha_twice(pk, m_len + 2)
        L2 = _lower_alpha_twice(pk, m_len + 2) if k > 0 else None
        for n in range(k, d + 1):
            m = n - k
            col = index(n, k)
            for mp in (m - 1, m, m + 1):
                if mp < 0 or mp + k > d + 1:
                    continue
                row = index(mp + k, k)
                Jx[row, col] += Jk[mp, m]
                Jy[row, col] += a_s[k] * ((mp == m) - Jk[mp, m])
            for r in (m - 2, m - 1, m):
                if r < 0 or r + k + 1 > d + 1:
                    continue
                Jy[index(r + k + 1, k + 1), col] += c_s[k] * S2[r, m]
            if k > 0:
                for r in (m, m + 1, m + 2):
                    if r + k - 1 > d + 1:
                        continue
                    Jy[index(r + k - 1, k - 1), col] += b_s[k - 1] * L2[r, m]

    def split(J):
        diag, sup, sub = [], [], []
        for n in range(d + 1):
            r = index(n, 0)
            r1 = index(n + 1, 0)
            diag.append(J[r : r + n + 1, r : r + n + 1].copy())
            sup.append(J[r : r + n + 1, r1 : r1 + n + 2].copy())
            sub.append(J[r1 : r1 + n + 2, r : r + n + 1].copy())
        for blocks in (diag, sup, sub):
            for b in blocks:
                b.flags.writeable = False
        return BlockBandedOp(d, tuple(diag), tuple(sup[:d]), tuple(sub[:d])), tuple(sub)

    return split(Jx), split(Jy)


def block_jacobi(params, which, max_degree) -> BlockBandedOp:
    """Finite section of ``J_x`` or ``J_y`` up to total degree ``max_degree``."""
    p = as_tri_params(params)
    if max_degree < 0:
        raise ParameterError("max_degree must be non-negative")
    (jx, _), (jy, _) = _block_jacobi_cached(p, int(max_degree))
    if which == "x":
        return jx
    if which == "y":
        return jy
    raise ValueError("which must be 'x' or 'y'")


# ---------------------------------------------------------------------------
# Clenshaw


@dataclass(frozen=True)
class RecurrenceStep:
    """Data for ``P_{n+1} = (x Px + y Py - M) P_n + H P_{n-1}`` in function form."""

    Px: np.ndarray
    Py: np.ndarray
    M: np.ndarray
    H: np.ndarray
    cond: float


@lru_cache(maxsize=32)
def clenshaw_steps(params: TriParams, max_degree: int):
    """Preconditioned recurrence blocks for n = 0..max_degree-1.

    ``B_n^+`` is the pseudo-inverse of the stacked ``[B_n^x; B_n^y]`` (SVD based),
    so ``B_n^+ B_n = I`` up to roundoff.
    """
    (jx, jx_sub), (jy, jy_sub) = _block_jacobi_cached(params, max(max_degree, 1))
    steps = []
    for n in range(max_degree):
        Ax, Ay = jx.diag[n].T, jy.diag[n].T
        B = np.vstack([jx_sub[n].T, jy_sub[n].T])
        U, s, Vt = np.linalg.svd(B, full_matrices=False)
        Bplus = (Vt.T / s) @ U.T
        cond = float(s[0] / s[-1])
        Px, Py = Bplus[:, : n + 1], Bplus[:, n + 1 :]
        M = Px @ Ax + Py @ Ay
        if n > 0:
            Cx, Cy = jx.sup[n - 1].T, jy.sup[n - 1].T
            H = -(Px @ Cx + Py @ Cy)
        else:
            H = np.zeros((n + 2, 0))
        for arr in (Px, Py, M, H):
            arr.flags.writeable = False
        steps.append(RecurrenceStep(Px, Py, M, H, cond))
    return tuple(steps)


CONDITION_WARN = 1e12


def _warn_conditioning(steps):
    worst = max((s.cond for s in steps), default=1.0)
    if worst > CONDITION_WARN:
        warnings.warn(
            f"preconditioner blocks are ill-conditioned (cond ~ {worst:.2e})",
            IllConditionedWarning,
            stacklevel=3,
        )


def clenshaw_eval_triangle(v: CoeffVecTri, x, y, extrapolate=False):
    """Evaluate ``sum f_{n,k} P_{k,n}(x, y)`` by the block backward recurrence.

    With ``extrapolate=True`` the polynomial is evaluated outside the triangle too.
    """
    if extrapolate:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    else:
        x, y = _check_triangle(x, y)
    d = v.max_degree
    steps = clenshaw_steps(v.params, d)
    _warn_conditioning(steps)
    xs = x.reshape(-1, 1)
    ys = y.reshape(-1, 1)
    npts = xs.shape[0]
    b1 = np.zeros((npts, d + 2))  # beta_{n+1}
    b2 = np.zeros((npts, d + 3))  # beta_{n+2}
    for n in range(d, -1, -1):
        bn = np.broadcast_to(v.block(n), (npts, n + 1)).copy()
        if n < d:
            st = steps[n]
            bn += xs * (b1 @ st.Px) + ys * (b1 @ st.Py) - b1 @ st.M
            if n + 1 < d:
                bn += b2 @ steps[n + 1].H
        b1, b2 = bn, b1
    out = b1[:, 0].reshape(x.shape)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# quadrature and transform


def triangle_quadrature(params, n_x, n_s=None):
    """Tensor rule on T via ``y = (1 - x) s`` for the weight ``x^a y^b (1-x-y)^g``."""
    p = as_tri_params(params)
    n_s = n_x if n_s is None else n_s
    xq, wx = gauss_nodes_weights(JacobiParams(p.beta + p.gamma + 1, p.alpha), n_x)
    sq, ws = gauss_nodes_weights(p.s_family, n_s)
    X = np.repeat(xq, n_s)
    S = np.tile(sq, n_x)
    W = np.repeat(wx, n_s) * np.tile(ws, n_x)
    return X, (1 - X) * S, W


def triangle_norms(params, max_degree):
    p = as_tri_params(params)
    h = np.zeros(ncoeffs(max_degree))
    hs = norms_squared(p.s_family, max_degree + 1)
    for k in range(max_degree + 1):
        hx = norms_squared(p.x_family(k), max_degree - k + 1)
        for n in range(k, max_degree + 1):
            h[index(n, k)] = hx[n - k] * hs[k]
    return h


def transform_triangle(f, params, max_degree, oversample=2) -> CoeffVecTri:
    """Orthogonal projection onto degree ``max_degree`` by separable quadrature.

    Exact up to roundoff for polynomial ``f`` of total degree <= ``max_degree``.
    """
    p = as_tri_params(params)
    d = int(max_degree)
    nq = max(d + 1, int(np.ceil(oversample * (d + 1))))
    xq, wx = gauss_nodes_weights(JacobiParams(p.beta + p.gamma + 1, p.alpha), nq)
    sq, ws = gauss_nodes_weights(p.s_family, nq)
    X = xq[:, None]
    Y = (1 - X) * sq[None, :]
    F = np.asarray(f(np.broadcast_to(X, Y.shape), Y), dtype=float)
    F = np.broadcast_to(F, Y.shape)
    if not np.all(np.isfinite(F)):
        raise InputError("kernel samples contain NaN or Inf")
    Q = vandermonde(p.s_family, d + 1, sq)  # (nq, d+1)
    G = F @ (ws[:, None] * Q)  # G[i, k] = sum_j ws_j F_ij q_k(s_j)
    hs = norms_squared(p.s_family, d + 1)
    out = np.zeros(ncoeffs(d))
    w1 = 1.0 - xq
    for k in range(d + 1):
        pk = p.x_family(k)
        V = vandermonde(pk, d - k + 1, xq)
        proj = (wx * w1**k * G[:, k]) @ V
        proj /= norms_squared(pk, d - k + 1) * hs[k]
        for n in range(k, d + 1):
            out[index(n, k)] = proj[n - k]
    return CoeffVecTri(p, out)
