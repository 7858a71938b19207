"""Forward integration and first/second-kind Volterra solves.

All functions are expanded in ``P~^(1,0)`` on [0, 1].  First-kind problems
are posed in the ``q`` form, where the data is divided by the factor that
vanishes with the upper limit:

* ``0 -> x``:   ``Vt_K u = q`` with ``q(t) = g(1 - t) / (1 - t)``,
* ``0 -> 1-x``: ``Vt_K u = q`` with ``q(x) = g(x) / (1 - x)``,

``Vt_K`` being the unweighted core.  Second-kind problems use the weighted
operator: ``(I - V_K) u = g``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from .banded import BandedOp
from .errors import (
    ConvergenceError,
    IllConditionedWarning,
    InputError,
    ParameterError,
    SolverError,
    ValidationWarning,
)
from .expr import parse_expression, to_function
from .jacobi import CoeffVec1D, jacobi_matrix, transform_1d
from .kernels import (
    MONOMIAL_MAX_DEGREE,
    KernelSpec,
    kernel_to_chebyshev,
    kernel_to_monomial,
    kernel_to_triangle,
)
from .operators import (
    BASIS,
    Limits,
    VolterraOperator,
    build_volterra_chebyshev,
    build_volterra_clenshaw,
    build_volterra_monomial,
)

CONDITION_LIMIT = 1e13
DIAGONAL_TOL = 1e-10
METHODS = ("auto", "monomial", "clenshaw", "chebyshev")
ENDPOINT_TOL = 1e-8


class Kind(str, enum.Enum):
    INTEGRATE = "integrate"
    FIRST = "1"
    SECOND = "2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"first": "1", "second": "2", "1": "1", "2": "2", "integrate": "integrate"}
        try:
            return cls(aliases[str(value).strip().lower()])
        except KeyError:
            raise InputError(f"unknown equation kind {value!r}") from None


@dataclass(frozen=True)
class Truncation:
    """Fixed ``N``, or adaptive doubling from ``N_start`` up to ``N_max``."""

    N: int = 64
    adaptive: bool = False
    tol: float = 1e-10
    N_max: int = 1024
    N_start: int = 32

    def __post_init__(self):
        if self.N < 1 or self.N_start < 1 or self.N_max < self.N_start:
            raise ParameterError(f"invalid truncation {self}")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")


@dataclass(frozen=True)
class ProblemSpec:
    """A Volterra problem.

    ``rhs`` is ``g`` (or ``f`` for forward integration) as a vectorised
    callable, an expression in ``x`` or a :class:`CoeffVec1D`.  Set
    ``rhs_is_q`` to pass the first-kind ``q`` directly.  ``x_power`` = mu
    turns the second-kind equation into ``x^mu u - V_K u = x^mu g``.
    """

    kind: Kind
    limits: Limits
    kernel: KernelSpec
    rhs: Any
    truncation: Truncation = field(default_factory=Truncation)
    rhs_is_q: bool = False
    x_power: int = 0
    kernel_degree: Optional[int] = None
    method: str = "auto"
    exact: Optional[Callable] = None
    name: str = ""
    params: tuple = ()
    error_interval: tuple = (0.05, 0.95)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        object.__setattr__(self, "limits", Limits.parse(self.limits))
        object.__setattr__(self, "kernel", KernelSpec.coerce(self.kernel))
        if self.method not in METHODS:
            raise InputError(f"unknown assembly method {self.method!r}")
        if self.x_power < 0 or (self.x_power and self.kind is not Kind.SECOND):
            raise InputError("x_power applies to second-kind problems only")

    def with_truncation(self, **kw):
        return replace(self, truncation=replace(self.truncation, **kw))


@dataclass(frozen=True)
class Solution:
    coeffs: CoeffVec1D
    residual_norm: float
    truncation_used: int
    tail_ratio: float
    condition: float = float("nan")
    history: tuple = ()

    def __call__(self, x):
        return self.coeffs(x)


# ---------------------------------------------------------------------------
# helpers


def as_function(value, name="rhs"):
    """Vectorised callable of one variable from a callable, expression or coefficients."""
    if isinstance(value, CoeffVec1D):
        return value
    if isinstance(value, str):
        node = parse_expression(value, variables=("x",))
        return to_function(node, variables=("x",))
    if isinstance(value, (int, float)):
        c = float(value)
        return lambda x: np.full(np.shape(x), c)
    if callable(value):
        return value
    raise InputError(f"cannot interpret {name} {value!r}")


def coefficients(value, N) -> np.ndarray:
    """``P~^(1,0)`` coefficients of length ``N``."""
    if isinstance(value, CoeffVec1D):
        if value.params == BASIS:
            c = np.zeros(N)
            m = min(N, len(value))
            c[:m] = value.coeffs[:m]
            if not np.all(np.isfinite(c)):
                raise InputError("coefficients contain NaN or Inf")
            return c
        return transform_1d(lambda x: value(x), BASIS, N).coeffs
    return transform_1d(as_function(value), BASIS, N).coeffs


def tail_ratio(c):
    c = np.asarray(c, dtype=float)
    total = np.linalg.norm(c)
    if total == 0.0:
        return 0.0
    m = max(1, int(np.ceil(0.1 * c.size)))
    return float(np.linalg.norm(c[-m:]) / total)


def _one_sided_limit(h_func, h=1e-4):
    """``lim_{s -> 0+} h_func(s) / s`` by Richardson extrapolation."""
    return 2.0 * h_func(h) / h - h_func(2 * h) / (2 * h)


def q_function(g, limits):
    """``q`` from ``g`` for the first-kind ``q`` form (removable point by limit)."""
    limits = Limits.parse(limits)
    g = as_function(g)
    if limits is Limits.ZERO_TO_X:
        vanish_at = 0.0

        def numer(t):
            return g(1.0 - t)
    else:
        vanish_at = 1.0
        numer = g
    g0 = float(np.asarray(g(np.array([vanish_at])))[0])
    if abs(g0) > ENDPOINT_TOL:
        warnings.warn(
            f"g({vanish_at:g}) = {g0:.3e} does not vanish where the upper limit does; "
            "the first-kind equation has no smooth solution",
            ValidationWarning,
            stacklevel=3,
        )

    def q(t):
        t = np.asarray(t, dtype=float)
        s = 1.0 - t
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(numer(t), dtype=float) / s
        at_end = s == 0.0
        if np.any(at_end):
            def shifted(e):
                return float(np.asarray(numer(np.array([1.0 - e])))[0])

            out = np.where(at_end, _one_sided_limit(shifted), out)
        return out

    return q


_RESOLVED = {}
_RESOLVED_MAX = 64


def _resolved(kernel: KernelSpec, limits: Limits, method, degree=None):
    """Cached kernel expansion, keyed on the kernel fingerprint."""
    key = (kernel.fingerprint, limits, method, degree)
    if key not in _RESOLVED:
        if len(_RESOLVED) >= _RESOLVED_MAX:
            _RESOLVED.pop(next(iter(_RESOLVED)))
        if method == "chebyshev":
            _RESOLVED[key] = kernel_to_chebyshev(kernel, limits)
        else:
            _RESOLVED[key] = kernel_to_triangle(kernel, limits, degree=degree)
    return _RESOLVED[key]


def choose_method(problem: ProblemSpec):
    """Assembly path used for ``method="auto"``.

    Polynomials of modest degree go through the exact monomial formula.
    Kernels given as triangle coefficients use the triangle recurrence.
    Everything else is expanded on the unit square, because the operator
    form of the triangle recurrence loses accuracy quickly beyond degree ~30.
    """
    if problem.method != "auto":
        return problem.method
    k = problem.kernel
    poly = k.polynomial()
    if poly is not None and max((n for n, _ in poly), default=0) <= MONOMIAL_MAX_DEGREE:
        return "monomial"
    if k.kind == "triangle" or problem.kernel_degree is not None:
        return "clenshaw"
    return "chebyshev"


def assemble(problem: ProblemSpec, N) -> VolterraOperator:
    """The core operator for ``problem`` at truncation ``N``."""
    k = problem.kernel
    method = choose_method(problem)
    if method == "monomial":
        poly = k.polynomial()
        if poly is None:
            poly = kernel_to_monomial(k, limits=problem.limits)
        return build_volterra_monomial(poly or {(0, 0): 0.0}, problem.limits, N, k.fingerprint)
    if method == "chebyshev":
        if k.kind == "triangle":
            raise InputError("triangle-coefficient kernels need the clenshaw method")
        A, reflected, _ = _resolved(k, problem.limits, method)
        return build_volterra_chebyshev(
            A, problem.limits, N, reflected_input=reflected, fingerprint=k.fingerprint
        )
    r = _resolved(k, problem.limits, method, problem.kernel_degree)
    return build_volterra_clenshaw(
        r.coeffs, problem.limits, N, reflected_input=r.reflected, fingerprint=k.fingerprint
    )


def _x_power_matrix(mu, N):
    """``N x N`` section of multiplication by ``x^mu`` in ``P~^(1,0)``."""
    J = jacobi_matrix(BASIS, N + mu)
    out = BandedOp.identity(N + mu)
    for _ in range(mu):
        out = J @ out
    return out.crop(N)


def _banded_solve(A: BandedOp, b, hint):
    lu = A.factorize()
    if lu.singular:
        raise SolverError(f"finite section is singular; {hint}")
    cond = lu.condest()
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SolverError(f"finite section condition estimate {cond:.2e} exceeds 1e13; {hint}")
    u = lu.solve(b)
    return u, cond


_FIRST_KIND_HINT = "a first-kind kernel needs K(x, x) != 0 on [0, 1]"
_SECOND_KIND_HINT = "the second-kind operator is numerically singular"


# ---------------------------------------------------------------------------
# public solvers


def volterra_integrate(problem: ProblemSpec, f=None, N=None) -> Solution:
    """Coefficients of ``int_0^{l(x)} K(x, y) f(y) dy``."""
    N = N or problem.truncation.N
    f = problem.rhs if f is None else f
    fc = coefficients(f, N)
    V = assemble(problem, N).weighted()
    out = V @ fc
    return Solution(CoeffVec1D(BASIS, out), 0.0, N, tail_ratio(out))


def _rhs_vector(problem, N):
    if problem.kind is Kind.FIRST and not problem.rhs_is_q:
        return coefficients(q_function(problem.rhs, problem.limits), N)
    return coefficients(problem.rhs, N)


def _check_diagonal(kernel):
    x = np.linspace(0.0, 1.0, 257)
    kxx = np.abs(np.asarray(kernel(x, x), dtype=float))
    if np.min(kxx) < DIAGONAL_TOL * max(1.0, float(np.max(kxx))):
        warnings.warn(
            f"K(x, x) vanishes near x = {x[np.argmin(kxx)]:.4g}; first-kind finite sections "
            "are not uniformly invertible and the solution may not converge",
            IllConditionedWarning,
            stacklevel=3,
        )


def solve_first_kind(problem: ProblemSpec, N=None) -> Solution:
    N = N or problem.truncation.N
    if problem.kind is not Kind.FIRST:
        raise InputError("solve_first_kind needs a first-kind problem")
    _check_diagonal(problem.kernel)
    b = _rhs_vector(problem, N)
    A = assemble(problem, N).matrix
    u, cond = _banded_solve(A, b, _FIRST_KIND_HINT)
    res = float(np.linalg.norm(A @ u - b))
    return Solution(CoeffVec1D(BASIS, u), res, N, tail_ratio(u), cond)


def solve_second_kind(problem: ProblemSpec, N=None) -> Solution:
    N = N or problem.truncation.N
    if problem.kind is not Kind.SECOND:
        raise InputError("solve_second_kind needs a second-kind problem")
    g = _rhs_vector(problem, N)
    V = assemble(problem, N).weighted()
    if problem.x_power:
        X = _x_power_matrix(problem.x_power, N)
        A = X - V
        b = X @ g
    else:
        A = BandedOp.identity(N) - V
        b = g
    if V.bandwidths == (0, 0) and not np.any(V.data) and not problem.x_power:
        # zero kernel: the solution is g itself
        return Solution(CoeffVec1D(BASIS, g), 0.0, N, tail_ratio(g), 1.0)
    u, cond = _banded_solve(A, b, _SECOND_KIND_HINT)
    res = float(np.linalg.norm(A @ u - b))
    return Solution(CoeffVec1D(BASIS, u), res, N, tail_ratio(u), cond)


def solve_fixed(problem: ProblemSpec, N=None) -> Solution:
    if problem.kind is Kind.INTEGRATE:
        return volterra_integrate(problem, N=N)
    if problem.kind is Kind.FIRST:
        return solve_first_kind(problem, N)
    return solve_second_kind(problem, N)


def adaptive_solve(problem: ProblemSpec) -> Solution:
    """Double ``N`` until tail ratio and residual both fall below ``tol``."""
    t = problem.truncation
    N = t.N_start
    history = []
    best = None
    while True:
        sol = solve_fixed(problem, N)
        history.append((N, sol.tail_ratio, sol.residual_norm))
        if best is None or sol.tail_ratio <= best.tail_ratio:
            best = sol
        if sol.tail_ratio < t.tol and sol.residual_norm < t.tol:
            return replace(sol, history=tuple(history))
        if N >= t.N_max:
            break
        N = min(2 * N, t.N_max)
    err = ConvergenceError(
        f"no convergence to tol={t.tol:.1e} by N={t.N_max}: "
        + ", ".join(f"N={n} tail={tr:.1e} res={r:.1e}" for n, tr, r in history),
        history,
    )
    err.best = replace(best, history=tuple(history))
    raise err


def solve(problem: ProblemSpec) -> Solution:
    """Dispatch on the truncation mode and equation kind."""
    if problem.truncation.adaptive:
        return adaptive_solve(problem)
    return solve_fixed(problem)


def max_abs_error(sol, exact, a=0.05, b=0.95, count=50):
    """Largest deviation on ``count`` equispaced points of ``[a, b]``."""
    x = np.linspace(a, b, count)
    return float(np.max(np.abs(sol(x) - exact(x))))

