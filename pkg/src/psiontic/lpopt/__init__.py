"""Linear programming engine and the model-fitting programs built on it."""

from ._backend import BACKEND
from .simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpError,
    LpSolution,
    dump_lp,
    primal_residual,
    solve_lp,
    verify_solution,
)
from .fitting import (
    FitInfeasible,
    ResponseTable,
    fit_preparations,
    max_overlap_fit,
    max_total_overlap_fit,
)

__all__ = [
    "BACKEND",
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "LinearProgram",
    "LpError",
    "LpSolution",
    "dump_lp",
    "primal_residual",
    "solve_lp",
    "verify_solution",
    "FitInfeasible",
    "ResponseTable",
    "fit_preparations",
    "max_overlap_fit",
    "max_total_overlap_fit",
]
