"""Symbol of the Toeplitz part of the first-kind operator.

For ``K(x, y) = sum k_nj x^(n-j) y^j`` the Toeplitz part of the unweighted
operator has symbol ``f(theta) = sum_n s_n cos^(2n)(theta/2)`` with
``s_n = sum_j k_nj``.  Since ``cos^2(theta/2)`` sweeps ``[0, 1]`` this is
``K(c, c)`` at ``c = cos^2(theta/2)``, so the finite sections are uniformly
invertible exactly when ``K(x, x)`` has no zero on ``[0, 1]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import KernelResolutionError
from .kernels import KernelSpec, kernel_to_monomial
from .operators import Limits

GRID = 4096
THRESHOLD = 1e-10
_REFINE = 8


class Verdict(str, enum.Enum):
    INVERTIBLE = "Invertible"
    NOT_FREDHOLM = "NotFredholm"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SymbolReport:
    cos_coeffs: np.ndarray = field(repr=False)
    min_abs_on_circle: float
    winding_number: int
    kxx_min: float
    verdict: Verdict
    theta: np.ndarray = field(default=None, repr=False, compare=False)
    values: np.ndarray = field(default=None, repr=False, compare=False)

    def __str__(self):
        return (
            f"verdict: {self.verdict.value}\n"
            f"min |f| on circle: {self.min_abs_on_circle:.6e}\n"
            f"winding number: {self.winding_number}\n"
            f"min |K(x,x)|: {self.kxx_min:.6e}\n"
            f"cos coefficients: {' '.join(f'{c:.17g}' for c in self.cos_coeffs)}"
        )


def cos_coefficients(table):
    """``s_n = sum_j k_nj`` from a ``{(n, j): k_nj}`` table."""
    table = dict(table)
    M = max((int(n) for n, _ in table), default=0)
    s = np.zeros(M + 1)
    for (n, _j), c in table.items():
        s[int(n)] += c
    return s


def toeplitz_symbol(table):
    """``(s, f)`` with ``f(theta) = sum_n s_n cos^(2n)(theta/2)`` vectorised."""
    s = cos_coefficients(table)

    def f(theta):
        c = np.cos(np.asarray(theta, dtype=float) / 2) ** 2
        # Horner in c; the symbol is real by construction
        out = np.zeros_like(c)
        for sn in s[::-1]:
            out = out * c + sn
        return out

    return s, f


def weighted_symbol(table):
    """Symbol of the weighted operator, ``sin(theta/2) f(theta)``.

    It always vanishes at ``theta = 0``, which is why first-kind problems are
    posed with the unweighted core.
    """
    _, f = toeplitz_symbol(table)
    return lambda theta: np.sin(np.asarray(theta, dtype=float) / 2) * f(theta)


def winding_number(values):
    """Winding of a closed sampled curve around the origin by argument tracking."""
    z = np.asarray(values, dtype=complex)
    if z.size == 0 or np.any(z == 0):
        return 0
    arg = np.unwrap(np.angle(np.append(z, z[0])))
    return int(np.rint((arg[-1] - arg[0]) / (2 * np.pi)))


def refined_min_abs(func, grid):
    """``min |func|`` over the grid span, refined near the smallest grid values.

    A sign change between neighbours means a root, located by bisection;
    otherwise the smallest local minima are polished by bounded minimisation.
    """
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(func(grid), dtype=float)
    best = float(np.min(np.abs(v)))
    flips = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    for i in flips[:_REFINE]:
        r = brentq(lambda t: float(func(np.array([t]))[0]), grid[i], grid[i + 1], xtol=1e-15)
        best = min(best, abs(float(func(np.array([r]))[0])))
    a = np.abs(v)
    interior = np.nonzero((a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:]))[0] + 1
    for i in interior[np.argsort(a[interior])][:_REFINE]:
        res = minimize_scalar(
            lambda t: abs(float(func(np.array([t]))[0])),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-14},
        )
        best = min(best, float(res.fun))
    return best


def fredholm_check(k, limits=Limits.ZERO_TO_X, grid=GRID, threshold=THRESHOLD) -> SymbolReport:
    """Invertibility diagnostic for the first-kind operator of kernel ``k``.

    ``Invertible`` if the symbol stays away from zero with winding number 0,
    ``NotFredholm`` if ``K(x, x)`` vanishes somewhere on ``[0, 1]`` and
    ``Inconclusive`` when the two tests disagree.  Kernels without a monomial
    fit get an empty ``cos_coeffs`` and the symbol is sampled as ``K(c, c)``.
    """
    k = KernelSpec.coerce(k)
    try:
        table = kernel_to_monomial(k, limits=limits)
    except KernelResolutionError:
        table = None
    if table is not None:
        s, f = toeplitz_symbol(table)
    else:
        # no monomial table: use the identity f(theta) = K(c, c) directly
        s = np.zeros(0)

        def f(theta):
            c = np.cos(np.asarray(theta, dtype=float) / 2) ** 2
            return np.asarray(k(c, c), dtype=float)
    theta = np.linspace(0.0, 2 * np.pi, int(grid), endpoint=False)
    values = f(theta)
    min_f = refined_min_abs(f, np.append(theta, 2 * np.pi))
    wind = winding_number(values)
    xs = np.linspace(0.0, 1.0, int(grid))
    kxx_min = refined_min_abs(lambda x: np.asarray(k(x, x), dtype=float), xs)
    if min_f > threshold and wind == 0:
        verdict = Verdict.INVERTIBLE
    elif kxx_min < threshold:
        verdict = Verdict.NOT_FREDHOLM
    else:
        verdict = Verdict.INCONCLUSIVE
    return SymbolReport(s, min_f, wind, kxx_min, verdict, theta, values)
