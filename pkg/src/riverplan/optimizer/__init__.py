"""Portfolio optimization: MILP assembly, branch-and-bound, oracles, audit."""

from .lp import LinearProgram, LPError, LPSolution, solve_lp
from .problem import (
    EconomicTerms,
    PlanConstraints,
    PortfolioProblem,
    ProblemError,
    build_problem,
    dump_problem,
    load_problem,
    selection_feasible,
)
from .dispatch import DispatchResult, lp_dispatch, run_of_river_dispatch
from .solution import (
    Alternative,
    SolutionPool,
    dump_pool,
    evaluate_selection,
    load_pool,
)
from .bnb import SolverOptions, WhatIfOutcome, solve, what_if
from .bruteforce import brute_force
from .audit import audit

__all__ = [
    "LinearProgram",
    "LPError",
    "LPSolution",
    "solve_lp",
    "EconomicTerms",
    "PlanConstraints",
    "PortfolioProblem",
    "ProblemError",
    "build_problem",
    "dump_problem",
    "load_problem",
    "selection_feasible",
    "DispatchResult",
    "evaluate_selection",
    "lp_dispatch",
    "run_of_river_dispatch",
    "Alternative",
    "SolutionPool",
    "SolverOptions",
    "WhatIfOutcome",
    "dump_pool",
    "load_pool",
    "solve",
    "what_if",
    "brute_force",
    "audit",
]
