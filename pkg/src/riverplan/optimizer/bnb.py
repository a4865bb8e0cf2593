"""Best-bound branch-and-bound over the selection binaries.

Only the selection columns are branched. Fragmentation indicators relax
cleanly: for an integral selection the cheapest legal assignment is the
fragmentation closure, which is already binary, so they never need their own
branches; incumbents recompute them exactly. Satisfaction scores are
continuous by construction.

Node processing is deterministic: best bound first (ties broken by creation
order), branching on the most fractional selection (ties by larger objective
coefficient, then lower column index). A rounding heuristic seeds incumbents
from fractional relaxations (every pop until one lands, sparsely after);
its repairs and thresholds are fixed, so it too is deterministic. With
``threads > 1`` the two child relaxations of a node are solved concurrently,
then pushed in fixed order, so the explored tree and the emitted pool are
identical to the serial run. Runs stopped by ``time_limit_s`` depend on the
wall clock and are the one case the determinism guarantee does not cover.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from .lp import LinearProgram, solve_lp
from .problem import PortfolioProblem, selection_feasible
from .solution import Alternative, SolutionPool, evaluate_selection

__all__ = ["SolverOptions", "solve", "what_if", "WhatIfOutcome"]

INT_TOL = 1e-7  # how far from 0/1 a relaxed selection may sit and count as integral
DOMINANCE_EPS = 1e-9  # relative; nodes this close to the incumbent are fathomed
HEURISTIC_PERIOD = 64  # pops between rounding attempts once an incumbent exists


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-6
    time_limit_s: float | None = None
    seed: int = 0  # recorded for reproducibility; the search itself is deterministic
    threads: int = 1
    on_progress: object = None  # callable(dict) or None

    def __post_init__(self):
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def _scale(obj: float) -> float:
    return max(1.0, abs(obj))


def _rounded_selections(problem: PortfolioProblem, lay, zx) -> list[frozenset]:
    """Candidate selections obtained by rounding a fractional relaxation.

    Two thresholds: the plain nearest-integer rounding, and a conservative
    one that only keeps near-certain picks (useful when impact caps make
    generous roundings infeasible).  Conflicts are repaired by dropping the
    member the relaxation liked less.  Everything here is deterministic.
    """
    forced = problem.constraints.forced
    out = []
    for threshold in (0.5, 0.9):
        picked = {lay.vids[i] for i in range(lay.n) if zx[i] >= threshold}
        picked |= set(forced)
        ok = True
        for pair in sorted(problem.conflicts, key=lambda p: (p.a, p.b)):
            a, b = pair.a, pair.b
            if a in picked and b in picked:
                ia, ib = lay.vidx[a], lay.vidx[b]
                drop = a if (zx[ia], -ia) < (zx[ib], -ib) else b
                if drop in forced:
                    drop = b if drop == a else a
                if drop in forced:
                    ok = False  # two committed plants in conflict; nothing to repair
                    break
                picked.discard(drop)
        if ok:
            out.append(frozenset(picked))
    return out


def solve(problem: PortfolioProblem, options: SolverOptions | None = None) -> SolutionPool:
    opt = options or SolverOptions()
    t0 = time.monotonic()
    cb = opt.on_progress

    if not problem.variants:
        ok, _ = selection_feasible(problem, set())
        if not ok:
            return SolutionPool((), "infeasible", None, None, 0)
        alt = evaluate_selection(problem, set())
        return SolutionPool((alt,), "optimal", 0.0, alt.objective_usd_per_yr, 0)

    lay = problem.layout()
    n = lay.n
    n_lp = 0

    def node_lp(fixed: dict):
        nonlocal n_lp
        lb = lay.base_lb.copy()
        ub = lay.base_ub.copy()
        for i, val in fixed.items():
            if val < lb[i] - 0.5 or val > ub[i] + 0.5:
                return None  # contradicts a forced/forbidden bound
            lb[i] = ub[i] = float(val)
        n_lp += 1
        sol = solve_lp(
            LinearProgram(lay.c, lay.A_ub, lay.b_ub, lay.A_eq, lay.b_eq, lb, ub), maximize=True
        )
        return sol if sol.status == "optimal" else None

    pool: list[Alternative] = []
    inc_obj = -np.inf
    tried_roundings: set[frozenset] = set()

    def out_of_time() -> bool:
        return opt.time_limit_s is not None and time.monotonic() - t0 > opt.time_limit_s

    def try_rounding(zx, bound) -> bool:
        """Round the relaxation into a feasible selection; True if it improved."""
        nonlocal inc_obj
        improved = False
        for sel in _rounded_selections(problem, lay, zx):
            if sel in tried_roundings:
                continue
            tried_roundings.add(sel)
            ok, _ = selection_feasible(problem, sel)
            if not ok:
                continue
            alt = evaluate_selection(problem, set(sel))
            if alt.objective_usd_per_yr > inc_obj:
                pool.append(alt)
                inc_obj = alt.objective_usd_per_yr
                improved = True
                if cb:
                    cb(
                        {
                            "event": "incumbent",
                            "objective": inc_obj,
                            "bound": bound,
                            "gap": max(0.0, (bound - inc_obj) / _scale(inc_obj)),
                            "pool_size": len(pool),
                            "lp_solves": n_lp,
                        }
                    )
        return improved

    root = node_lp({})
    if root is None:
        return SolutionPool((), "infeasible", None, None, n_lp)
    heap = []
    seq = 0
    pops = 0
    heappush(heap, (-root.objective, seq, {}, root.z[:n].copy()))
    executor = ThreadPoolExecutor(max_workers=opt.threads) if opt.threads > 1 else None
    status = None
    best_bound = root.objective
    try:
        while heap:
            if out_of_time():
                status = "time-limit"
                best_bound = -heap[0][0]
                break
            neg_bound, _, fixed, zx = heappop(heap)
            bound = -neg_bound
            pops += 1
            if pool and bound <= inc_obj + DOMINANCE_EPS * _scale(inc_obj):
                continue
            best_bound = bound
            if pool and (bound - inc_obj) <= opt.gap_tol * _scale(inc_obj):
                status = "gap-limit"
                break

            frac = np.minimum(zx, 1.0 - zx)
            if frac.max() > INT_TOL and (not pool or pops % HEURISTIC_PERIOD == 0):
                # Primal heuristic: without an incumbent nothing fathoms, so
                # try until one lands, then only now and then.
                if try_rounding(zx, bound):
                    if bound <= inc_obj + DOMINANCE_EPS * _scale(inc_obj):
                        continue
                    if (bound - inc_obj) <= opt.gap_tol * _scale(inc_obj):
                        status = "gap-limit"
                        break

            branch_var = None
            if frac.max() <= INT_TOL:
                sel = {lay.vids[i] for i in range(n) if zx[i] > 0.5}
                ok, _ = selection_feasible(problem, sel)
                if ok:
                    alt = evaluate_selection(problem, sel)
                    if alt.objective_usd_per_yr > inc_obj:
                        pool.append(alt)
                        inc_obj = alt.objective_usd_per_yr
                        if cb:
                            cb(
                                {
                                    "event": "incumbent",
                                    "objective": inc_obj,
                                    "bound": bound,
                                    "gap": max(0.0, (bound - inc_obj) / _scale(inc_obj)),
                                    "pool_size": len(pool),
                                    "lp_solves": n_lp,
                                }
                            )
                    continue
                # the relaxation looks integral but exact rounding fails a
                # plan constraint: force a decision on the least settled
                # still-free selection
                free = [i for i in range(n) if i not in fixed]
                if not free:
                    continue
                branch_var = max(free, key=lambda i: (frac[i], lay.c[i], -i))
            else:
                branch_var = int(max(range(n), key=lambda i: (frac[i], lay.c[i], -i)))

            children = [dict(fixed) for _ in (0, 1)]
            children[0][branch_var] = 0
            children[1][branch_var] = 1
            if executor is not None:
                sols = list(executor.map(node_lp, children))
            else:
                sols = [node_lp(c) for c in children]
            for child_fixed, sol in zip(children, sols):
                if sol is None:
                    continue
                seq += 1
                heappush(heap, (-sol.objective, seq, child_fixed, sol.z[:n].copy()))
            if cb and seq % 50 == 0:
                cb(
                    {
                        "event": "bound",
                        "objective": None if not pool else inc_obj,
                        "bound": best_bound,
                        "gap": None
                        if not pool
                        else max(0.0, (best_bound - inc_obj) / _scale(inc_obj)),
                        "pool_size": len(pool),
                        "lp_solves": n_lp,
                    }
                )
        else:
            status = "optimal" if pool else "infeasible"
            best_bound = inc_obj if pool else None
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    gap = None if not pool else max(0.0, (best_bound - inc_obj) / _scale(inc_obj))
    result = SolutionPool(tuple(pool), status, gap, best_bound, n_lp)
    if cb:
        cb(
            {
                "event": "done",
                "status": status,
                "objective": None if not pool else inc_obj,
                "bound": best_bound,
                "gap": gap,
                "pool_size": len(pool),
                "lp_solves": n_lp,
            }
        )
    return result


@dataclass
class WhatIfOutcome:
    """Re-solve under amended controls, with the revenue consequence."""

    pool: SolutionPool
    baseline_objective_usd_per_yr: float | None
    revenue_delta_usd_per_yr: float | None  # baseline minus new incumbent; positive = loss
    problem: PortfolioProblem | None = None


def what_if(
    problem: PortfolioProblem,
    baseline: SolutionPool | Alternative | float | None = None,
    options: SolverOptions | None = None,
    **overrides,
) -> WhatIfOutcome:
    """Amend the problem (prices, connectivity floor, metric bounds,
    force/forbid), re-solve, and report the revenue delta against the
    baseline incumbent."""
    amended = problem.with_overrides(**overrides)
    pool = solve(amended, options)
    if isinstance(baseline, SolutionPool):
        base_obj = (
            baseline.incumbent().objective_usd_per_yr if baseline.incumbent() else None
        )
    elif isinstance(baseline, Alternative):
        base_obj = baseline.objective_usd_per_yr
    else:
        base_obj = baseline
    inc = pool.incumbent()
    delta = None
    if base_obj is not None and inc is not None:
        delta = base_obj - inc.objective_usd_per_yr
    return WhatIfOutcome(pool, base_obj, delta, problem=amended)
