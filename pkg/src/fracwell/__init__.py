"""Caputo fractional initial/terminal value problems and their dependence on
the starting point, the terminal point and the classical data."""

from .bounds import (
    ShiftBoundInputs,
    d1_bound,
    d2_bound,
    example1_lower_bound,
    example2_lower_bound,
    gronwall_envelope,
    tvp_terminal_prebound,
)
from .errors import (
    BlowUpError,
    BracketError,
    ConfigError,
    ConvergenceError,
    CoverageError,
    DegenerateError,
    DomainError,
    FracwellError,
)
from .ivp_solver import SolverConfig, ml_linear_solution, residual_check, solve_ivp, volterra_rhs
from .problem import (
    FractionalIVP,
    FractionalTVP,
    RhsSpec,
    Trajectory,
    make_uniform_grid,
    rhs_eval,
    trajectory_eval,
)
from .special_functions import MLQuery, gamma_fn, mittag_leffler
from .sweep import SweepPlan, SweepReport, fit_exponent, run_sweep, sup_diff
from .tvp_solver import (
    KernelQuery,
    TvpSolution,
    green_kernel,
    solve_tvp_fredholm,
    solve_tvp_shooting,
)

__version__ = "0.1.0"
