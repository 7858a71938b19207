"""Kernel specifications and their resolution into monomial or triangle form."""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InputError, KernelResolutionError, UnknownProblemError, ValidationWarning
from .expr import Node, parse_expression, to_function, to_polynomial, to_text
from .operators import Limits
from .triangle import (
    DEFAULT_MAX_DEGREE,
    CoeffVecTri,
    TriParams,
    index,
    triangle_norms,
    triangle_quadrature,
    transform_triangle,
)

MONOMIAL_MAX_DEGREE = 30
TRIANGLE_TOL = 1e-14
NOISE_PLATEAU = 1e-12
_TRIANGLE_DEGREES = (8, 16, 24, 32, 48, 64)

BUILTIN_KERNELS = {
    "zero": "0",
    "one": "1",
    "exp_diff": "exp(y - x)",
    "set1a": "4*exp(y - x)",
    "set1b": "exp(-10*(x - 1/3)^2 - 10*(y - 1/3)^2)",
    "set2a": "1 - cos(10*pi*(x - y))",
    "set2b": "sin(10*pi*x) + cos(10*pi*y)",
    "set2c": "-2*x + y + sin(25*x^2 + 8*pi*y)",
}


def _builtin_text(name, params):
    if name == "set3":
        mu = int(dict(params).get("mu", 7))
        if mu < 1:
            raise InputError(f"set3 kernel needs mu >= 1, got {mu}")
        return f"y^{mu - 1}"
    try:
        return BUILTIN_KERNELS[name]
    except KeyError:
        raise UnknownProblemError(f"unknown builtin kernel {name!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    """A kernel ``K(x, y)`` in one of several source forms.

    Use the constructors :meth:`builtin`, :meth:`expression`, :meth:`monomial`,
    :meth:`triangle` and :meth:`from_callable`.  Triangle coefficients are a
    polynomial and so may be evaluated anywhere; for the ``0 -> x`` limits
    they may instead describe ``K(1 - t, y)`` (``reflected=True``).
    """

    kind: str
    payload: Any = field(compare=False)
    label: str = ""
    reflected: bool = False

    # constructors -------------------------------------------------------

    @classmethod
    def builtin(cls, name, **params):
        text = _builtin_text(name, params)
        return cls("expression", parse_expression(text), label=name)

    @classmethod
    def expression(cls, text_or_ast):
        node = parse_expression(text_or_ast) if isinstance(text_or_ast, str) else text_or_ast
        return cls("expression", node, label=to_text(node))

    @classmethod
    def monomial(cls, table):
        clean = {}
        for (n, j), c in dict(table).items():
            n, j = int(n), int(j)
            if not 0 <= j <= n:
                raise InputError(f"monomial index needs 0 <= j <= n, got ({n}, {j})")
            if not np.isfinite(c):
                raise InputError("monomial coefficients must be finite")
            clean[(n, j)] = clean.get((n, j), 0.0) + float(c)
        return cls("monomial", clean, label="monomial")

    @classmethod
    def triangle(cls, coeffs: CoeffVecTri, reflected=False):
        if coeffs.params != TriParams(0.0, 0.0, 0.0):
            raise InputError("triangle kernels must use the P^(0,0,0) basis")
        if not np.all(np.isfinite(coeffs.coeffs)):
            raise InputError("triangle coefficients must be finite")
        return cls("triangle", coeffs, label="triangle", reflected=bool(reflected))

    @classmethod
    def from_callable(cls, func, label=None):
        if not callable(func):
            raise InputError("kernel must be callable")
        return cls("callable", func, label=label or getattr(func, "__name__", "callable"))

    @classmethod
    def coerce(cls, value):
        """Accept a KernelSpec, builtin name, expression text, table or callable."""
        if isinstance(value, KernelSpec):
            return value
        if isinstance(value, CoeffVecTri):
            return cls.triangle(value)
        if isinstance(value, dict):
            return cls.monomial(value)
        if isinstance(value, Node.__args__):
            return cls.expression(value)
        if isinstance(value, str):
            if value in BUILTIN_KERNELS:
                return cls.builtin(value)
            return cls.expression(value)
        if isinstance(value, (int, float)):
            return cls.expression(repr(float(value)))
        if callable(value):
            return cls.from_callable(value)
        raise InputError(f"cannot interpret {value!r} as a kernel")

    # queries ------------------------------------------------------------

    def polynomial(self):
        """Exact ``{(n, j): k_nj}`` table when the kernel is a known polynomial."""
        if self.kind == "monomial":
            return {k: v for k, v in self.payload.items() if v != 0.0}
        if self.kind == "expression":
            poly = to_polynomial(self.payload)
            if poly is None:
                return None
            return {(i + j, j): c for (i, j), c in poly.items() if c != 0.0}
        return None

    def __call__(self, x, y):
        """Vectorised ``K(x, y)`` (for reflected triangle input, ``K`` itself)."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if self.kind == "expression":
            with np.errstate(all="ignore"):
                return to_function(self.payload)(x, y)
        if self.kind == "monomial":
            out = np.zeros(x.shape)
            for (n, j), c in self.payload.items():
                out = out + c * x ** (n - j) * y**j
            return out
        if self.kind == "triangle":
            if self.reflected:
                return self.payload(1.0 - x, y, extrapolate=True)
            return self.payload(x, y, extrapolate=True)
        out = np.asarray(self.payload(x, y), dtype=float)
        return np.broadcast_to(out, x.shape).copy()

    @property
    def fingerprint(self):
        h = hashlib.sha256(self.kind.encode())
        if self.kind == "expression":
            h.update(to_text(self.payload).encode())
        elif self.kind == "monomial":
            h.update(repr(sorted(self.payload.items())).encode())
        elif self.kind == "triangle":
            h.update(self.payload.coeffs.tobytes())
            h.update(b"R" if self.reflected else b"-")
        else:
            h.update(f"{self.label}:{id(self.payload)}".encode())
        return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# resolution


def region_points(limits, n=40):
    """Quadrature points covering the integration region of ``limits``."""
    limits = Limits.parse(limits)
    X, Y, _ = triangle_quadrature(TriParams(0.0, 0.0, 0.0), n)
    if limits is Limits.ZERO_TO_X:
        # {0 <= y <= x <= 1} is the image of T under (t, y) -> (1 - t, y)
        return 1.0 - X, Y
    return X, Y


def _monomial_matrix(x, y, M):
    cols, keys = [], []
    for n in range(M + 1):
        for j in range(n + 1):
            cols.append(x ** (n - j) * y**j)
            keys.append((n, j))
    return np.stack(cols, axis=-1), keys


def kernel_to_monomial(k, M=None, tol=1e-12, limits=Limits.ZERO_TO_ONE_MINUS_X):
    """Monomial table ``{(n, j): k_nj}`` of total degree at most ``M``.

    Polynomial input is read off exactly.  Anything else is fitted by least
    squares on a quadrature grid of the integration region; if the sup
    residual on a separate check grid exceeds ``tol`` the kernel is rejected.
    """
    k = KernelSpec.coerce(k)
    if M is not None and not 0 <= int(M) <= MONOMIAL_MAX_DEGREE:
        raise KernelResolutionError(
            f"monomial degree {M} outside [0, {MONOMIAL_MAX_DEGREE}]; use the Clenshaw path"
        )
    exact = k.polynomial()
    if exact is not None:
        deg = max((n for n, _ in exact), default=0)
        if M is not None and deg > M:
            raise KernelResolutionError(
                f"kernel has degree {deg} > M={M}; raise M or use the Clenshaw path"
            )
        return exact or {(0, 0): 0.0}
    degrees = [int(M)] if M is not None else range(2, MONOMIAL_MAX_DEGREE + 1, 2)
    x, y = region_points(limits, 48)
    xc, yc = region_points(limits, 61)
    f = k(x, y)
    fc = k(xc, yc)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(fc))):
        raise InputError("kernel samples contain NaN or Inf")
    scale = max(1.0, float(np.max(np.abs(fc))))
    best = np.inf
    for m in degrees:
        A, keys = _monomial_matrix(x, y, m)
        coef, *_ = np.linalg.lstsq(A, f, rcond=None)
        Ac, _ = _monomial_matrix(xc, yc, m)
        best = float(np.max(np.abs(Ac @ coef - fc))) / scale
        if best <= tol:
            return {key: float(c) for key, c in zip(keys, coef)}
    raise KernelResolutionError(
        f"monomial fit residual {best:.2e} exceeds {tol:.1e} at degree {degrees[-1]}; "
        "use the Clenshaw path"
    )


def block_norms(v: CoeffVecTri):
    """L2 norm on the triangle contributed by each degree block."""
    h = np.sqrt(triangle_norms(v.params, v.max_degree))
    w = v.coeffs * h
    return np.array([np.linalg.norm(w[index(n, 0) : index(n, 0) + n + 1]) for n in range(v.max_degree + 1)])


def chop_degree(v: CoeffVecTri, tol=TRIANGLE_TOL):
    """Degree after which the block norms are negligible, and whether they are.

    Blocks count as negligible below ``tol`` times the largest block, or below
    the sampling noise floor when the last blocks have levelled off there.
    """
    norms = block_norms(v)
    scale = norms.max(initial=0.0)
    if scale == 0.0:
        return 0, True
    tail = norms[-4:]
    plateau = (
        norms.size >= 8 and tail.max() <= 10 * tail.min() and tail.max() < NOISE_PLATEAU * scale
    )
    thresh = max(tol * scale, 3 * tail.max() if plateau else 0.0)
    big = np.nonzero(norms > thresh)[0]
    cut = int(big[-1]) if big.size else 0
    return cut, plateau or cut < v.max_degree - 1


@dataclass(frozen=True)
class ResolvedKernel:
    coeffs: CoeffVecTri
    reflected: bool
    converged: bool


def kernel_to_triangle(
    k, limits=Limits.ZERO_TO_ONE_MINUS_X, max_degree=DEFAULT_MAX_DEGREE, tol=TRIANGLE_TOL, degree=None
) -> ResolvedKernel:
    """``P^(0,0,0)`` coefficients of the kernel for the given limits.

    The degree grows until the trailing blocks drop below ``tol`` relative to
    the largest block, capped at ``max_degree``; ``degree`` fixes it instead.
    For ``0 -> x`` kernels are sampled as ``K(1 - t, y)`` on the triangle
    (``reflected=True``): no extrapolation is needed and the operator Clenshaw
    then multiplies by ``J`` rather than ``I - J``, which loses less accuracy.
    """
    k = KernelSpec.coerce(k)
    limits = Limits.parse(limits)
    if k.kind == "triangle":
        if k.reflected and limits is not Limits.ZERO_TO_X:
            raise InputError("reflected triangle kernels only make sense for 0 -> x limits")
        v = k.payload
        if degree is not None:
            v = v.truncated(int(degree))
        return ResolvedKernel(v, k.reflected, True)
    params = TriParams(0.0, 0.0, 0.0)
    exact = k.polynomial()
    reflect = limits is Limits.ZERO_TO_X
    f = (lambda t, y: k(1.0 - t, y)) if reflect else k
    if degree is not None:
        return ResolvedKernel(transform_triangle(f, params, int(degree)), reflect, True)
    if exact is not None:
        d = max((n for n, _ in exact), default=0)
        v = transform_triangle(f, params, d)
        return ResolvedKernel(v, reflect, True)
    for d in _TRIANGLE_DEGREES:
        d = min(d, max_degree)
        v = transform_triangle(f, params, d)
        cut, converged = chop_degree(v, tol)
        if converged or d == max_degree:
            break
    if not converged:
        warnings.warn(
            f"kernel not resolved to {tol:.0e} at triangle degree {d}",
            ValidationWarning,
            stacklevel=2,
        )
    return ResolvedKernel(v.truncated(cut), reflect, converged)


_CHEBYSHEV_SIZES = (16, 32, 64, 128, 256)


def _chebyshev_grid_coeffs(f, n):
    from scipy.fft import dctn

    t = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    s = (t[::-1] + 1) / 2  # first-kind points mapped to [0, 1], increasing
    X, Y = np.meshgrid(s, s, indexing="ij")
    vals = np.asarray(f(X, Y), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InputError("kernel samples contain NaN or Inf")
    # the reversal flips the sign of odd modes
    a = dctn(vals[::-1, ::-1], type=2) / n**2
    a[0, :] /= 2
    a[:, 0] /= 2
    return a


def kernel_to_chebyshev(k, limits=Limits.ZERO_TO_ONE_MINUS_X, tol=TRIANGLE_TOL, max_size=256):
    """Tensor Chebyshev coefficients of the kernel on the unit square.

    Returns ``(A, reflected, converged)`` with ``A[i, j]`` multiplying
    ``T_i(2x - 1) T_j(2y - 1)``.  As for the triangle expansion, ``0 -> x``
    kernels are sampled as ``K(1 - t, y)``.
    """
    k = KernelSpec.coerce(k)
    limits = Limits.parse(limits)
    reflect = limits is Limits.ZERO_TO_X
    f = (lambda t, y: k(1.0 - t, y)) if reflect else k
    for n in _CHEBYSHEV_SIZES:
        if n > max_size:
            break
        a = _chebyshev_grid_coeffs(f, n)
        scale = np.abs(a).max(initial=0.0)
        if scale == 0.0:
            return np.zeros((1, 1)), reflect, True
        thresh = max(tol, 8 * n * np.finfo(float).eps) * scale
        rows = np.nonzero(np.abs(a).max(axis=1) > thresh)[0]
        cols = np.nonzero(np.abs(a).max(axis=0) > thresh)[0]
        dx, dy = int(rows[-1]), int(cols[-1])
        converged = dx < n - 4 and dy < n - 4
        if converged:
            break
    if not converged:
        warnings.warn(
            f"kernel not resolved to {tol:.0e} by {n} x {n} Chebyshev samples",
            ValidationWarning,
            stacklevel=2,
        )
    return a[: dx + 1, : dy + 1].copy(), reflect, converged
