"""Banded matrices for Volterra integral operators.

Functions live in the ``P~^(1,0)`` basis.  For a kernel ``K`` the operator
``u -> int_0^{1-x} K(x, y) u(y) dy`` factors as ``(1 - x) * C[K] u`` where the
core ``C[K] = Q_y M_K E_y`` maps ``P~^(1,0)`` coefficients to ``P~^(1,0)``
coefficients: ``E_y`` lifts ``u(y)`` to the triangle, ``M_K`` multiplies by
the kernel and ``Q_y`` integrates out ``y``.  Because multiplication by ``x``
commutes with ``Q_y`` and multiplication by ``y`` commutes with ``E_y``, a
kernel monomial ``x^i y^j`` turns into ``J^i D J^j`` with ``D = Q_y E_y``
diagonal and ``J`` the Jacobi matrix of ``P~^(1,0)``.

The ``0 -> x`` limits reduce to the same machinery after the substitution
``x -> 1 - t`` on the output variable, which replaces the left ``J`` by
``I - J`` and the final ``(1 - t)`` weight by the chain ``S R L``.

Every product is formed on a padded square section and then cropped, so the
returned ``N x N`` matrix equals the ``N x N`` section of the infinite operator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .banded import BandedOp, pad_width, right_coefficients, tri_left, tri_right
from .errors import InputError, NumericalError, ParameterError
from .jacobi import (
    JacobiParams,
    raising_S,
    recurrence_coeffs,
    reflection_matrix,
    weighted_lowering_L,
)
from .triangle import CoeffVecTri, TriParams, _warn_conditioning, clenshaw_steps, index, ncoeffs

BASIS = JacobiParams(1.0, 0.0)
OVERFLOW_LIMIT = 1e300


class Limits(str, enum.Enum):
    ZERO_TO_X = "x"
    ZERO_TO_ONE_MINUS_X = "1-x"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace(" ", ""))
        except ValueError:
            raise InputError(f"unknown limits {value!r}; expected 'x' or '1-x'") from None


# ---------------------------------------------------------------------------
# elementary pieces


def build_D(N) -> BandedOp:
    """``Q_y E_y``: diagonal with entries ``(-1)^n / (n + 1)``."""
    n = np.arange(N)
    return BandedOp.diag(np.where(n % 2 == 0, 1.0, -1.0) / (n + 1))


def _ey_block(n):
    N = n + 1
    j = np.arange(1, N + 1)
    return np.where((j + N) % 2 == 0, 1.0, -1.0) * (2 * j - 1) / N


def build_Ey(max_degree):
    """Lift ``u(y)`` in ``P~^(1,0)`` to triangle coefficients; sparse, ``ncoeffs x (d+1)``."""
    rows, cols, vals = [], [], []
    for n in range(max_degree + 1):
        block = _ey_block(n)
        rows.extend(index(n, 0) + np.arange(n + 1))
        cols.extend([n] * (n + 1))
        vals.extend(block)
    return sparse.csr_array((vals, (rows, cols)), shape=(ncoeffs(max_degree), max_degree + 1))


def build_Qy(max_degree):
    """Integrate out ``y`` over ``[0, 1-x]``, dropping the ``(1 - x)`` factor.

    Picks the ``k = 0`` entry of each block; sparse, ``(d+1) x ncoeffs``.
    """
    n = np.arange(max_degree + 1)
    cols = n * (n + 1) // 2
    return sparse.csr_array(
        (np.ones(n.size), (n, cols)), shape=(max_degree + 1, ncoeffs(max_degree))
    )


def _J_coeffs(N):
    a, b, c = recurrence_coeffs(BASIS, N)
    return c, a, b  # sub, diag, sup


def _left_coeffs(limits, N):
    sub, diag, sup = _J_coeffs(N)
    if limits is Limits.ZERO_TO_X:
        return -sub, 1.0 - diag, -sup
    return sub, diag, sup


# ---------------------------------------------------------------------------
# result type


@dataclass(frozen=True)
class VolterraOperator:
    """Unweighted core of a Volterra operator in the ``P~^(1,0)`` basis.

    ``matrix`` is the exact ``N x N`` section; ``padded`` is a larger section
    whose leading block is exact, kept so the weight can be applied without
    truncation error.
    """

    matrix: BandedOp
    padded: BandedOp
    limits: Limits
    N: int
    kernel_degree: int
    kernel_fingerprint: str = ""

    def __matmul__(self, v):
        return self.matrix @ v

    def todense(self):
        return self.matrix.todense()

    def weighted(self) -> BandedOp:
        """Full operator ``V_K`` as an ``N x N`` section."""
        return apply_weight_and_reflection(self)


def padded_size(N, degree):
    return int(N) + int(degree) + 4


def _finish(core_band, limits, N, degree, fingerprint):
    if not np.all(np.isfinite(core_band)) or np.max(np.abs(core_band), initial=0.0) > OVERFLOW_LIMIT:
        raise NumericalError("overflow while assembling the Volterra operator")
    padded = BandedOp.from_stack(core_band).trimmed()
    return VolterraOperator(padded.crop(N).trimmed(), padded, limits, int(N), int(degree), fingerprint)


def weight_operator(limits, n) -> BandedOp:
    """The ``n x n`` section of the factor applied after the core.

    ``(I - J)`` for ``0 -> 1-x``; ``S R L`` for ``0 -> x``.  Only the leading
    ``(n - 1) x (n - 1)`` block is exact.
    """
    limits = Limits.parse(limits)
    if limits is Limits.ZERO_TO_ONE_MINUS_X:
        sub, diag, sup = _J_coeffs(n)
        return BandedOp.tridiag(-sub, 1.0 - diag, -sup)
    L = weighted_lowering_L(BASIS, "alpha", n).crop(n, n)
    S = raising_S(JacobiParams(0.0, 0.0), "alpha", n)
    return S @ (reflection_matrix(n) @ L)


def apply_weight_and_reflection(op: VolterraOperator) -> BandedOp:
    """Weighted operator ``V_K`` (``N x N``), built from the padded core."""
    W = weight_operator(op.limits, op.padded.nrows)
    return (W @ op.padded).crop(op.N).trimmed()


# ---------------------------------------------------------------------------
# monomial path


def monomial_exponents(table):
    """``{(n, j): k_nj}`` to ``{(x power, y power): coeff}``, dropping zeros."""
    out = {}
    for (n, j), c in dict(table).items():
        n, j = int(n), int(j)
        if not 0 <= j <= n:
            raise InputError(f"monomial index needs 0 <= j <= n, got ({n}, {j})")
        if c != 0.0:
            out[(n - j, j)] = out.get((n - j, j), 0.0) + float(c)
    return out


def _check_N(N):
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N}")
    return int(N)


def build_volterra_monomial(table, limits, N, fingerprint="") -> VolterraOperator:
    """Operator for ``K(x, y) = sum k_nj x^(n-j) y^j`` given as ``{(n, j): k_nj}``.

    Assembled as ``sum_j (sum_i c_ij L^i) D J^j`` with Horner in ``L``, where
    ``L = J`` for ``0 -> 1-x`` and ``L = I - J`` for ``0 -> x``.
    """
    limits = Limits.parse(limits)
    N = _check_N(N)
    table = monomial_exponents(table)
    degree = max((i + j for i, j in table), default=0)
    Nb = padded_size(N, degree)
    lsub, ldiag, lsup = _left_coeffs(limits, Nb)
    jsub, jdiag, jsup = _J_coeffs(Nb)
    total = np.zeros((Nb, 2 * degree + 1))
    base = build_D(Nb).data.copy()  # (Nb, 1): D J^j for j = 0
    max_j = max((j for _, j in table), default=0)
    for j in range(max_j + 1):
        if j > 0:
            base = tri_right(base, jsub, jdiag, jsup)
        powers = [i for (i, jj) in table if jj == j]
        if not powers:
            continue
        top = max(powers)
        acc = table.get((top, j), 0.0) * base
        for i in range(top - 1, -1, -1):
            acc = tri_left(acc, lsub, ldiag, lsup)
            acc = acc + pad_width(table.get((i, j), 0.0) * base, (acc.shape[-1] - 1) // 2)
        total += pad_width(acc, degree)
    return _finish(total, limits, N, degree, fingerprint)


# ---------------------------------------------------------------------------
# Clenshaw path


def build_volterra_clenshaw(
    kernel: CoeffVecTri, limits, N, reflected_input=False, fingerprint=""
) -> VolterraOperator:
    """Operator for a kernel given by ``P^(0,0,0)`` triangle coefficients.

    Runs the triangle Clenshaw recurrence with operator-valued unknowns: the
    scalar ``x`` becomes left multiplication (by ``J`` or ``I - J``), ``y``
    becomes right multiplication by ``J`` and a coefficient ``f`` becomes
    ``f * D``.

    For ``0 -> x`` with ``reflected_input=True`` the coefficients are taken to
    describe ``K(1 - t, y)`` already, so the left factor is plain ``J``.
    """
    limits = Limits.parse(limits)
    N = _check_N(N)
    if kernel.params != TriParams(0.0, 0.0, 0.0):
        raise ParameterError("kernel coefficients must be in the P^(0,0,0) basis")
    d = kernel.max_degree
    Nb = padded_size(N, d)
    if limits is Limits.ZERO_TO_X and not reflected_input:
        lsub, ldiag, lsup = _left_coeffs(limits, Nb)
    else:
        lsub, ldiag, lsup = _J_coeffs(Nb)
    jsub, jdiag, jsup = _J_coeffs(Nb)
    Dvals = build_D(Nb).data[:, 0]
    steps = clenshaw_steps(TriParams(0.0, 0.0, 0.0), d)
    _warn_conditioning(steps)

    def coeff_term(n):
        return np.asarray(kernel.block(n))[:, None, None] * Dvals[None, :, None]

    b1 = coeff_term(d)  # width 0
    b2 = None
    for n in range(d - 1, -1, -1):
        st = steps[n]
        w = (b1.shape[-1] - 1) // 2 + 1
        U = np.tensordot(st.Px, b1, axes=([0], [0]))
        V = np.tensordot(st.Py, b1, axes=([0], [0]))
        out = tri_left(U, lsub, ldiag, lsup)
        out += tri_right(V, jsub, jdiag, jsup, right_coefficients(Nb, w, jsub, jdiag, jsup))
        out -= pad_width(np.tensordot(st.M, b1, axes=([0], [0])), w)
        if b2 is not None:
            out += pad_width(np.tensordot(steps[n + 1].H, b2, axes=([0], [0])), w)
        out += pad_width(coeff_term(n), w)
        if np.max(np.abs(out), initial=0.0) > OVERFLOW_LIMIT or not np.all(np.isfinite(out)):
            raise NumericalError(f"overflow in operator Clenshaw at degree {n}")
        b1, b2 = out, b1
    return _finish(b1[0], limits, N, d, fingerprint)


# ---------------------------------------------------------------------------
# tensor Chebyshev path


def _chebyshev_powers(sub, diag, sup, degree, Nb):
    """Stack of ``T_j(2J - 1)`` for ``j = 0..degree``, all at width ``degree``."""
    xs, xd, xp = 2 * sub, 2 * diag - 1.0, 2 * sup
    out = np.zeros((degree + 1, Nb, 2 * degree + 1))
    prev = np.ones((Nb, 1))
    out[0] = pad_width(prev, degree)
    if degree == 0:
        return out
    cur = tri_left(prev, xs, xd, xp)
    out[1] = pad_width(cur, degree)
    for j in range(1, degree):
        nxt = 2 * tri_left(cur, xs, xd, xp) - pad_width(prev, j + 1)
        prev, cur = cur, nxt
        out[j + 1] = pad_width(cur, degree)
    return out


def build_volterra_chebyshev(
    coeffs, limits, N, reflected_input=False, fingerprint=""
) -> VolterraOperator:
    """Operator for ``K(x, y) = sum_ij a_ij T_i(2x - 1) T_j(2y - 1)``.

    ``coeffs[i, j] = a_ij``.  Left and right multiplication range over the
    whole unit square, where Chebyshev polynomials stay bounded, so unlike
    the triangle recurrence this is backward stable at any degree.  The
    right factor is formed explicitly and contracted with the coefficients;
    the left factor uses the 1D Clenshaw recurrence.
    """
    limits = Limits.parse(limits)
    N = _check_N(N)
    A = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if not np.all(np.isfinite(A)):
        raise InputError("Chebyshev coefficients must be finite")
    dx, dy = A.shape[0] - 1, A.shape[1] - 1
    Nb = padded_size(N, dx + dy)
    if limits is Limits.ZERO_TO_X and not reflected_input:
        lsub, ldiag, lsup = _left_coeffs(limits, Nb)
    else:
        lsub, ldiag, lsup = _J_coeffs(Nb)
    jsub, jdiag, jsup = _J_coeffs(Nb)
    Tj = _chebyshev_powers(jsub, jdiag, jsup, dy, Nb)
    C = np.tensordot(A, Tj, axes=([1], [0])) * build_D(Nb).data[:, 0][None, :, None]
    ys, yd, yp = 2 * lsub, 2 * ldiag - 1.0, 2 * lsup
    b1 = np.zeros((Nb, 1))
    b2 = np.zeros((Nb, 1))
    for i in range(dx, 0, -1):
        w = dy + dx - i + 1
        nxt = 2 * tri_left(b1, ys, yd, yp)
        nxt = pad_width(nxt, w) - pad_width(b2, w) + pad_width(C[i], w)
        b1, b2 = nxt, b1
    w = (b1.shape[-1] - 1) // 2 + 1
    out = pad_width(tri_left(b1, ys, yd, yp), w) - pad_width(b2, w) + pad_width(C[0], w)
    return _finish(out, limits, N, dx + dy, fingerprint)
