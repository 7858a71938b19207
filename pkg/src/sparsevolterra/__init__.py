"""Sparse spectral solver for Volterra integral equations on [0, 1]."""

from .banded import BandedLU, BandedOp
from .errors import (
    ConvergenceError,
    DomainError,
    IllConditionedWarning,
    InputError,
    KernelResolutionError,
    NumericalError,
    ParameterError,
    SolverError,
    UnknownProblemError,
    ValidationWarning,
    VolterraError,
)
from .expr import ExpressionSyntaxError, parse_expression, to_text
from .jacobi import (
    CoeffVec1D,
    JacobiParams,
    eval_clenshaw_1d,
    gauss_nodes_weights,
    jacobi_matrix,
    raising_S,
    recurrence_coeffs,
    reflection_R,
    transform_1d,
    weighted_lowering_L,
)
from .kernels import KernelSpec, kernel_to_chebyshev, kernel_to_monomial, kernel_to_triangle
from .operators import (
    Limits,
    VolterraOperator,
    apply_weight_and_reflection,
    build_D,
    build_Ey,
    build_Qy,
    build_volterra_chebyshev,
    build_volterra_clenshaw,
    build_volterra_monomial,
)
from .problems import builtin_problems, get_problem
from .solvers import (
    Kind,
    ProblemSpec,
    Solution,
    Truncation,
    adaptive_solve,
    solve,
    solve_first_kind,
    solve_second_kind,
    volterra_integrate,
)
from .symbol import SymbolReport, Verdict, fredholm_check, toeplitz_symbol
from .triangle import (
    CoeffVecTri,
    TriParams,
    block_jacobi,
    clenshaw_eval_triangle,
    eval_triangle_direct,
    transform_triangle,
    triangle_quadrature,
)

__version__ = "0.1.0"
