"""Catalog of reference problems with analytic or self-reference solutions."""

from __future__ import annotations

import numpy as np
from scipy.special import shichi

from .errors import UnknownProblemError
from .kernels import KernelSpec
from .solvers import Kind, ProblemSpec, Truncation

PI = np.pi
REFERENCE_N = 1200


def _set1a_g(x):
    return np.exp(-x) + np.exp(x) * (2 * x - 1)


def _set1b_g(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(4 * PI**2 * x**2) / x
    return np.where(x == 0.0, 0.0, out)


def _set2a_g(x):
    return (
        np.exp(-10 * PI * x) * (1 + 20 * PI) - 2 + np.cos(10 * PI * x) + np.sin(10 * PI * x)
    ) / (20 * PI)


def _set3_g1(x):
    return 1 + x + x**2


def _set3_g2(x):
    x = np.asarray(x, dtype=float)
    t = 2 * PI * x
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ((1 + t**2) * np.sinh(t) - t * np.cosh(t)) / t**2
    # small-x series: (2/3) t + (2/15) t^3 + ...
    small = np.abs(t) < 1e-3
    return np.where(small, 2 * t / 3 + 2 * t**3 / 15, out)


def set3_g2_solution(mu):
    """Solution for ``g_2``; closed forms exist for ``mu = 2`` and ``mu = 3``.

    In general ``u = g + x^(1-mu) int_0^x s^(mu-2) g(s) ds``.  Only ``mu = 2``
    gives ``sinh(2 pi x)``; ``mu = 3`` brings in the hyperbolic sine integral.
    """
    a = 2 * PI
    if mu == 2:
        return lambda x: np.sinh(a * np.asarray(x, dtype=float))
    if mu == 3:
        def u(x):
            x = np.asarray(x, dtype=float)
            inner = shichi(a * x)[0] / a**2 + x * np.cosh(a * x) / a - 2 * np.sinh(a * x) / a**2
            with np.errstate(divide="ignore", invalid="ignore"):
                out = _set3_g2(x) + inner / x**2
            return np.where(x == 0.0, 0.0, out)

        return u
    return None


def set3_g1_solution(mu):
    def u(x):
        return mu / (mu - 1) + (mu + 1) / mu * x + (mu + 2) / (mu + 1) * x**2

    return u


def _problems():
    tr = Truncation(N=128, adaptive=True, tol=1e-10, N_max=1024)
    return {
        "set1a": ProblemSpec(
            Kind.FIRST, "x", KernelSpec.builtin("set1a"), _set1a_g, tr,
            exact=lambda x: x * np.exp(x), name="set1a",
        ),
        "set1b": ProblemSpec(
            Kind.FIRST, "x", KernelSpec.builtin("set1b"), _set1b_g, tr, name="set1b",
        ),
        "set2a": ProblemSpec(
            Kind.SECOND, "x", KernelSpec.builtin("set2a"), _set2a_g, tr,
            exact=lambda x: np.exp(-10 * PI * x), name="set2a",
        ),
        "set2b": ProblemSpec(
            Kind.SECOND, "x", KernelSpec.builtin("set2b"),
            lambda x: np.exp(x / 2) / PI, tr, name="set2b",
        ),
        "set2c": ProblemSpec(
            Kind.SECOND, "1-x", KernelSpec.builtin("set2c"),
            lambda x: np.exp(x**2 - 2 * x), tr, name="set2c",
        ),
        # the x^mu rewrite loses roughly a factor 10 in conditioning per extra
        # 4 coefficients at mu = 7, so these use a small fixed truncation
        "set3a": set3_problem("g1", 7, Truncation(N=16), name="set3a"),
        "set3b": set3_problem("g2", 3, Truncation(N=24), name="set3b"),
        "set3c": set3_problem("g2", 2, Truncation(N=24), name="set3c"),
    }


_CATALOG = None


def builtin_problems():
    """Name -> :class:`ProblemSpec` for every reference problem."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _problems()
    return dict(_CATALOG)


def get_problem(name) -> ProblemSpec:
    try:
        return builtin_problems()[name]
    except KeyError:
        known = ", ".join(sorted(builtin_problems()))
        raise UnknownProblemError(f"unknown problem {name!r}; known: {known}") from None


def set3_problem(g="g1", mu=7, truncation=None, name=None):
    """The separable singular problem ``x^mu u = x^mu g + int_0^x y^(mu-1) u dy``."""
    try:
        gfun = {"g1": _set3_g1, "g2": _set3_g2}[g]
    except KeyError:
        raise UnknownProblemError(f"unknown set3 right-hand side {g!r}; use 'g1' or 'g2'") from None
    exact = set3_g1_solution(mu) if g == "g1" else set3_g2_solution(mu)
    return ProblemSpec(
        Kind.SECOND, "x", KernelSpec.builtin("set3", mu=mu), gfun,
        truncation or Truncation(N=24), x_power=int(mu), exact=exact,
        name=name or f"set3-{g}-mu{mu}", params=(("mu", mu),), error_interval=(0.1, 1.0),
    )
