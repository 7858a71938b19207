"""Banded matrices stored by rows.

``BandedOp.data[i, lower + k]`` holds ``A[i, i + k]`` for ``-lower <= k <= upper``.
Entries whose column falls outside ``[0, ncols)`` are kept at zero.

The module also carries the two kernels used by the operator-valued Clenshaw
recurrence: left and right multiplication of a *stack* of square banded
matrices by a tridiagonal matrix.  Stacks use a symmetric width ``w`` and have
shape ``(..., n, 2w + 1)``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack
from scipy.sparse import coo_array
from scipy.sparse.linalg import LinearOperator, onenormest

from .errors import SolverError


class BandedOp:
    """Real banded matrix with explicit lower and upper bandwidths."""

    __slots__ = ("nrows", "ncols", "lower", "upper", "data")

    def __init__(self, data, lower, upper, ncols=None):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != lower + upper + 1:
            raise ValueError(
                f"band data must have shape (nrows, {lower + upper + 1}), got {data.shape}"
            )
        self.nrows = data.shape[0]
        self.ncols = self.nrows if ncols is None else int(ncols)
        self.lower = int(lower)
        self.upper = int(upper)
        data = data.copy()
        data[~self._valid_mask()] = 0.0
        data.flags.writeable = False
        self.data = data

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, nrows, ncols=None, lower=0, upper=0):
        return cls(np.zeros((nrows, lower + upper + 1)), lower, upper, ncols)

    @classmethod
    def identity(cls, n):
        return cls(np.ones((n, 1)), 0, 0)

    @classmethod
    def diag(cls, values):
        return cls(np.asarray(values, dtype=float)[:, None], 0, 0)

    @classmethod
    def tridiag(cls, sub, diag, sup):
        """Square tridiagonal matrix; ``sub[i] = A[i+1, i]``, ``sup[i] = A[i, i+1]``."""
        diag = np.asarray(diag, dtype=float)
        n = diag.size
        data = np.zeros((n, 3))
        data[1:, 0] = sub[: n - 1]
        data[:, 1] = diag
        data[:-1, 2] = sup[: n - 1]
        return cls(data, 1, 1)

    @classmethod
    def from_dense(cls, a, lower=None, upper=None, tol=0.0):
        a = np.asarray(a, dtype=float)
        m, n = a.shape
        rows, cols = np.nonzero(np.abs(a) > tol)
        offsets = cols - rows
        if lower is None:
            lower = max(0, -int(offsets.min())) if offsets.size else 0
        if upper is None:
            upper = max(0, int(offsets.max())) if offsets.size else 0
        data = np.zeros((m, lower + upper + 1))
        i = np.arange(m)
        for k in range(-lower, upper + 1):
            j = i + k
            ok = (j >= 0) & (j < n)
            data[i[ok], lower + k] = a[i[ok], j[ok]]
        return cls(data, lower, upper, n)

    @classmethod
    def from_stack(cls, band):
        """Wrap a symmetric-width square band array ``(n, 2w + 1)``."""
        w = (band.shape[-1] - 1) // 2
        return cls(band, w, w)

    # basic access -------------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def bandwidths(self):
        return (self.lower, self.upper)

    def _columns(self):
        return np.arange(self.nrows)[:, None] + np.arange(-self.lower, self.upper + 1)[None, :]

    def _valid_mask(self):
        j = self._columns()
        return (j >= 0) & (j < self.ncols)

    def entry(self, i, j):
        k = j - i
        if not (0 <= i < self.nrows and 0 <= j < self.ncols):
            raise IndexError((i, j))
        if k < -self.lower or k > self.upper:
            return 0.0
        return float(self.data[i, self.lower + k])

    def diagonal(self, k=0):
        if k < -self.lower or k > self.upper:
            return np.zeros(0)
        i = np.arange(self.nrows)
        j = i + k
        ok = (j >= 0) & (j < self.ncols)
        return self.data[i[ok], self.lower + k].copy()

    def todense(self):
        out = np.zeros((self.nrows, self.ncols))
        j = self._columns()
        ok = self._valid_mask()
        i = np.broadcast_to(np.arange(self.nrows)[:, None], j.shape)
        out[i[ok], j[ok]] = self.data[ok]
        return out

    def tocoo(self):
        j = self._columns()
        ok = self._valid_mask() & (self.data != 0.0)
        i = np.broadcast_to(np.arange(self.nrows)[:, None], j.shape)
        return coo_array((self.data[ok], (i[ok], j[ok])), shape=self.shape)

    def triplets(self):
        """Nonzero entries as ``(i, j, value)`` in row-major order."""
        j = self._columns()
        ok = self._valid_mask() & (self.data != 0.0)
        i = np.broadcast_to(np.arange(self.nrows)[:, None], j.shape)
        return list(zip(i[ok].tolist(), j[ok].tolist(), self.data[ok].tolist()))

    def crop(self, nrows, ncols=None):
        ncols = nrows if ncols is None else ncols
        return BandedOp(self.data[:nrows], self.lower, self.upper, ncols)

    def with_bandwidths(self, lower, upper):
        """Re-store with different widths; entries outside the new band are dropped."""
        data = np.zeros((self.nrows, lower + upper + 1))
        for k in range(-min(lower, self.lower), min(upper, self.upper) + 1):
            data[:, lower + k] = self.data[:, self.lower + k]
        return BandedOp(data, lower, upper, self.ncols)

    def trimmed(self, tol=0.0):
        """Shrink the stored band to the outermost diagonals above ``tol``."""
        lower, upper = self.lower, self.upper
        while lower > 0 and np.all(np.abs(self.data[:, self.lower - lower]) <= tol):
            lower -= 1
        while upper > 0 and np.all(np.abs(self.data[:, self.lower + upper]) <= tol):
            upper -= 1
        return self.with_bandwidths(lower, upper)

    def max_offband(self, lower, upper):
        """Largest magnitude stored outside the band ``(lower, upper)``."""
        worst = 0.0
        for k in range(-self.lower, self.upper + 1):
            if k < -lower or k > upper:
                worst = max(worst, float(np.max(np.abs(self.data[:, self.lower + k]), initial=0.0)))
        return worst

    # arithmetic ---------------------------------------------------------

    def __neg__(self):
        return BandedOp(-self.data, self.lower, self.upper, self.ncols)

    def __mul__(self, scalar):
        return BandedOp(self.data * float(scalar), self.lower, self.upper, self.ncols)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, BandedOp):
            return NotImplemented
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        lower, upper = max(self.lower, other.lower), max(self.upper, other.upper)
        a = self.with_bandwidths(lower, upper).data
        b = other.with_bandwidths(lower, upper).data
        return BandedOp(a + b, lower, upper, self.ncols)

    def __sub__(self, other):
        if not isinstance(other, BandedOp):
            return NotImplemented
        return self + (-other)

    def __matmul__(self, other):
        if isinstance(other, BandedOp):
            return self._matmul_banded(other)
        x = np.asarray(other, dtype=float)
        if x.shape[0] != self.ncols:
            raise ValueError(f"cannot apply {self.shape} operator to length {x.shape[0]}")
        out = np.zeros((self.nrows,) + x.shape[1:])
        i = np.arange(self.nrows)
        for k in range(-self.lower, self.upper + 1):
            j = i + k
            ok = (j >= 0) & (j < self.ncols)
            coef = self.data[i[ok], self.lower + k]
            out[i[ok]] += coef.reshape((-1,) + (1,) * (x.ndim - 1)) * x[j[ok]]
        return out

    def _matmul_banded(self, other):
        if self.ncols != other.nrows:
            raise ValueError(f"cannot compose {self.shape} with {other.shape}")
        lower = min(self.lower + other.lower, max(self.nrows - 1, 0))
        upper = min(self.upper + other.upper, max(other.ncols - 1, 0))
        data = np.zeros((self.nrows, lower + upper + 1))
        i = np.arange(self.nrows)
        for ka in range(-self.lower, self.upper + 1):
            m = i + ka
            ok = (m >= 0) & (m < self.ncols)
            if not ok.any():
                continue
            a = self.data[i[ok], self.lower + ka]
            for kb in range(-other.lower, other.upper + 1):
                k = ka + kb
                if k < -lower or k > upper:
                    continue
                data[i[ok], lower + k] += a * other.data[m[ok], other.lower + kb]
        return BandedOp(data, lower, upper, other.ncols)

    @property
    def T(self):
        data = np.zeros((self.ncols, self.lower + self.upper + 1))
        for k in range(-self.lower, self.upper + 1):
            i = np.arange(self.nrows)
            j = i + k
            ok = (j >= 0) & (j < self.ncols)
            # A[i, i+k] becomes At[j, j-k]
            data[j[ok], self.upper - k] = self.data[i[ok], self.lower + k]
        return BandedOp(data, self.upper, self.lower, self.nrows)

    def norm1(self):
        return float(np.max(np.abs(self.todense()).sum(axis=0), initial=0.0))

    def __repr__(self):
        return (
            f"BandedOp(shape={self.shape}, bandwidths=({self.lower}, {self.upper}))"
        )

    # solving ------------------------------------------------------------

    def factorize(self):
        return BandedLU(self)

    def solve(self, rhs):
        return self.factorize().solve(rhs)


class BandedLU:
    """LU factorisation with partial pivoting of a square banded matrix (LAPACK gbtrf)."""

    def __init__(self, op: BandedOp):
        if op.nrows != op.ncols:
            raise ValueError("banded LU requires a square matrix")
        n, kl, ku = op.nrows, op.lower, op.upper
        ab = np.zeros((2 * kl + ku + 1, n))
        i = np.arange(n)
        for k in range(-kl, ku + 1):
            j = i + k
            ok = (j >= 0) & (j < n)
            ab[kl + ku - k, j[ok]] = op.data[i[ok], kl + k]
        lu, piv, info = lapack.dgbtrf(ab, kl, ku)
        if info < 0:
            raise SolverError(f"gbtrf rejected argument {-info}")
        self.singular = info > 0
        self.op = op
        self._lu, self._piv, self._kl, self._ku = lu, piv, kl, ku

    def _solve(self, b, trans=0):
        if self.singular:
            raise SolverError("finite section is exactly singular")
        x, info = lapack.dgbtrs(self._lu, self._kl, self._ku, b, self._piv, trans=trans)
        if info != 0:
            raise SolverError(f"gbtrs failed with info={info}")
        return x

    def solve(self, rhs):
        return self._solve(np.asarray(rhs, dtype=float))

    def condest(self):
        """1-norm condition estimate (Hager/Higham) of the factored matrix."""
        if self.singular:
            return np.inf
        n = self.op.nrows
        if n == 0:
            return 1.0
        inv = LinearOperator(
            (n, n),
            matvec=lambda v: self._solve(np.asarray(v, dtype=float).ravel()),
            rmatvec=lambda v: self._solve(np.asarray(v, dtype=float).ravel(), trans=1),
            dtype=float,
        )
        est = onenormest(inv) if n > 4 else np.abs(self._solve(np.eye(n))).sum(axis=0).max()
        return float(self.op.norm1() * est)


# ---------------------------------------------------------------------------
# stacked symmetric-width kernels


def pad_width(band, w):
    """Pad a symmetric-width stack to width ``w`` (``w`` >= current width)."""
    cur = (band.shape[-1] - 1) // 2
    if w == cur:
        return band
    extra = w - cur
    pad = [(0, 0)] * (band.ndim - 1) + [(extra, extra)]
    return np.pad(band, pad)


def _gather(values, idx):
    values = np.asarray(values, dtype=float)
    ok = (idx >= 0) & (idx < values.size)
    return np.where(ok, values[np.clip(idx, 0, max(values.size - 1, 0))], 0.0)


def tri_left(band, sub, diag, sup):
    """``T @ A`` for each ``A`` in the stack; result width grows by one.

    ``sub[i] = T[i+1, i]``, ``diag[i] = T[i, i]``, ``sup[i] = T[i, i+1]``.
    """
    n = band.shape[-2]
    w = (band.shape[-1] - 1) // 2
    bp = pad_width(band, w + 1)
    out = bp * np.asarray(diag, dtype=float)[:, None]
    out[..., 1:, :-1] += np.asarray(sub[: n - 1], dtype=float)[:, None] * bp[..., :-1, 1:]
    out[..., :-1, 1:] += np.asarray(sup[: n - 1], dtype=float)[:, None] * bp[..., 1:, :-1]
    return out


def right_coefficients(n, w, sub, diag, sup):
    """Per-entry multipliers for :func:`tri_right` at output width ``w``."""
    cols = np.arange(n)[:, None] + np.arange(-w, w + 1)[None, :]
    sup_c = np.zeros(n)
    sup_c[: n - 1] = sup[: n - 1]
    sub_c = np.zeros(n)
    sub_c[: n - 1] = sub[: n - 1]
    return _gather(sup_c, cols - 1), _gather(diag, cols), _gather(sub_c, cols)


def tri_right(band, sub, diag, sup, coefficients=None):
    """``A @ T`` for each ``A`` in the stack; result width grows by one."""
    n = band.shape[-2]
    w = (band.shape[-1] - 1) // 2 + 1
    bp = pad_width(band, w)
    if coefficients is None:
        coefficients = right_coefficients(n, w, sub, diag, sup)
    c_prev, c_diag, c_next = coefficients
    out = bp * c_diag
    out[..., :, 1:] += bp[..., :, :-1] * c_prev[:, 1:]
    out[..., :, :-1] += bp[..., :, 1:] * c_next[:, :-1]
    return out


def stack_to_dense(band):
    n = band.shape[-2]
    return BandedOp.from_stack(band).todense() if band.ndim == 2 else np.stack(
        [BandedOp.from_stack(b).todense() for b in band.reshape((-1,) + band.shape[-2:])]
    ).reshape(band.shape[:-2] + (n, n))
