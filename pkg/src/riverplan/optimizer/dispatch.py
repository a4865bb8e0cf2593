"""Dispatch of a fixed selection: LP and closed-form water routing.

``lp_dispatch`` pins the selection columns of the shared relaxation and
solves the remaining monthly dispatch. ``run_of_river_dispatch`` is the
closed-form route for selections without storage: each site turbines what it
can and spills the rest, month by month, independent of any LP machinery. It
exists so the LP has something exact to be checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .lp import LinearProgram, solve_lp
from .problem import PortfolioProblem, ProblemError

__all__ = ["DispatchResult", "lp_dispatch", "run_of_river_dispatch"]


@dataclass
class DispatchResult:
    objective_usd_per_yr: float  # full plan objective, fixed-charge terms included
    energy_kwh: dict  # expected annual energy per selected variant
    turbine_m3s: dict  # scenario label -> variant id -> 12 monthly flows
    storage_m3: dict  # scenario label -> variant id -> 12 start-of-month volumes
    spill_m3s: dict  # scenario label -> hosting segment id -> 12 monthly flows


def _expected_energy(problem: PortfolioProblem, u: np.ndarray) -> dict:
    """u has shape (S, T, n); returns expected kWh/yr per variant id."""
    d = np.asarray(problem.inflows.month_durations_h)
    prob = np.asarray(problem.inflows.probabilities)
    rho = np.array([v.production_factor_kw_per_m3s for v in problem.variants])
    e = np.einsum("s,t,stn->n", prob, d, u) * rho
    return {v.id: float(e[i]) for i, v in enumerate(problem.variants)}


def lp_dispatch(problem: PortfolioProblem, selected: Iterable[str]) -> DispatchResult:
    """Optimal monthly dispatch for one integral selection.

    The caller is responsible for selection-level feasibility (conflicts,
    metrics, connectivity); water itself always balances because spill is
    unbounded. An infeasible LP therefore points at a violated
    selection-level constraint and raises.
    """
    lay = problem.layout()
    sel = set(selected)
    unknown = sel - set(lay.vids)
    if unknown:
        raise ProblemError(f"unknown variants in selection: {sorted(unknown)}")
    lb = lay.base_lb.copy()
    ub = lay.base_ub.copy()
    for i, vid in enumerate(lay.vids):
        val = 1.0 if vid in sel else 0.0
        lb[i] = ub[i] = val
    sol = solve_lp(LinearProgram(lay.c, lay.A_ub, lay.b_ub, lay.A_eq, lay.b_eq, lb, ub), maximize=True)
    if sol.status != "optimal":
        raise ProblemError("dispatch infeasible; the selection violates a plan constraint")
    z = sol.z
    S, T, n = lay.S, lay.T, lay.n
    u = np.zeros((S, T, n))
    for s in range(S):
        for t in range(T):
            for i in range(n):
                u[s, t, i] = z[lay.u_col(i, t, s)]
    turbine, storage, spill = {}, {}, {}
    for s, label in enumerate(problem.inflows.labels):
        turbine[label] = {
            vid: tuple(float(u[s, t, i]) for t in range(T))
            for i, vid in enumerate(lay.vids)
            if vid in sel
        }
        storage[label] = {
            lay.vids[i]: tuple(float(z[lay.v_col(i, t, s)]) for t in range(T))
            for i in lay.storage
            if lay.vids[i] in sel
        }
        spill[label] = {
            g: tuple(float(z[lay.w_col(g, t, s)]) for t in range(T)) for g in lay.hosts
        }
    energy = {vid: e for vid, e in _expected_energy(problem, u).items() if vid in sel}
    return DispatchResult(
        objective_usd_per_yr=float(sol.objective),
        energy_kwh=energy,
        turbine_m3s=turbine,
        storage_m3=storage,
        spill_m3s=spill,
    )


def run_of_river_dispatch(problem: PortfolioProblem, selected: Iterable[str]) -> DispatchResult:
    """Closed-form dispatch for storage-free selections.

    Sites are visited headwaters-first; each selected variant turbines
    min(capacity, available flow) and the remainder spills downstream. Raises
    if the selection contains a storage variant, whose dispatch is a real
    optimization.
    """
    lay = problem.layout()
    sel = set(selected)
    for vid in sel:
        if problem.variant(vid).max_storage_m3 > 0:
            raise ProblemError(f"variant {vid} has storage; use lp_dispatch")
    S, T, n = lay.S, lay.T, lay.n
    u = np.zeros((S, T, n))
    w = {g: np.zeros((S, T)) for g in lay.hosts}
    order = [sid for sid in problem.net.topological_order() if sid in lay.hidx]
    for g in order:
        avail = lay.site_inflow[g].copy()
        for h in lay.up_hosts[g]:
            avail += w[h]
            for i in lay.site_vars[h]:
                avail += u[:, :, i]
        take = [
            i
            for i in sorted(
                lay.site_vars[g],
                key=lambda i: (-problem.variants[i].production_factor_kw_per_m3s, lay.vids[i]),
            )
            if lay.vids[i] in sel
        ]
        for i in take:
            cap = problem.variants[i].max_turbine_flow_m3s
            got = np.minimum(avail, cap)
            u[:, :, i] = got
            avail = avail - got
        w[g] = avail
    energy = {vid: e for vid, e in _expected_energy(problem, u).items() if vid in sel}
    pi1 = problem.econ.energy_price_usd_per_kwh
    pi2 = problem.econ.capacity_price_usd_per_kw_yr
    fixed = sum(
        pi2 * problem.variant(vid).installed_kw - problem.variant(vid).annuity_usd_per_yr
        for vid in sel
    )
    obj = fixed + pi1 * sum(energy.values())
    turbine, spill = {}, {}
    for s, label in enumerate(problem.inflows.labels):
        turbine[label] = {
            vid: tuple(float(u[s, t, i]) for t in range(T))
            for i, vid in enumerate(lay.vids)
            if vid in sel
        }
        spill[label] = {g: tuple(float(w[g][s, t]) for t in range(T)) for g in lay.hosts}
    return DispatchResult(
        objective_usd_per_yr=float(obj),
        energy_kwh=energy,
        turbine_m3s=turbine,
        storage_m3={label: {} for label in problem.inflows.labels},
        spill_m3s=spill,
    )
