"""Exhaustive enumeration oracle for small instances.

Walks every selection in lexicographic order of the selection vector,
discards infeasible ones, prices the rest, and keeps the first maximum,
which makes ties resolve to the lexicographically smallest vector.

Dispatch values are computed per hydraulically connected group of selected
sites and memoized: a group's optimal dispatch only depends on its own
members, because water leaving the group is never worth anything to it and
unselected sites in between pass flow through unchanged. Groups without
storage use the closed-form routing; the rest solve a small LP built here
from scratch, independent of the main relaxation's matrices.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..basin import upstream_set
from .lp import LinearProgram, solve_lp
from .problem import PortfolioProblem, ProblemError, selection_feasible
from .solution import Alternative, evaluate_selection

__all__ = ["brute_force"]

MAX_BINARIES = 20
SECONDS_PER_HOUR = 3600.0


class _GroupEvaluator:
    """Energy value of one connected group of selected sites, memoized."""

    def __init__(self, problem: PortfolioProblem):
        self.p = problem
        self.lay = problem.layout()
        net = problem.net
        # total natural inflow at-or-above each hosting segment, (S, 12)
        self.total_above = {}
        for g in self.lay.hosts:
            acc = problem.inflows.flows[g].copy()
            for sid in upstream_set(net, g):
                acc = acc + problem.inflows.flows[sid]
            self.total_above[g] = acc
        self.memo: dict[frozenset, float] = {}

    def value(self, group: frozenset) -> float:
        """Expected annual energy revenue of the group's dispatch."""
        got = self.memo.get(group)
        if got is None:
            got = self._solve(group)
            self.memo[group] = got
        return got

    def _structure(self, group: frozenset):
        p, lay, net = self.p, self.lay, self.p.net
        sites = sorted({p.variant(vid).segment_id for vid in group})
        site_set = set(sites)
        up = {g: [] for g in sites}
        for g in sites:
            cur = net[g].downstream_id
            while cur is not None and cur not in site_set:
                cur = net[cur].downstream_id
            if cur is not None:
                up[cur].append(g)
        local = {}
        for g in sites:
            a = self.total_above[g].copy()
            for h in up[g]:
                a = a - self.total_above[h]
            local[g] = a
        members = {g: sorted(v for v in group if p.variant(v).segment_id == g) for g in sites}
        return sites, up, local, members

    def _solve(self, group: frozenset) -> float:
        p = self.p
        d = np.asarray(p.inflows.month_durations_h)
        prob = np.asarray(p.inflows.probabilities)
        pi1 = p.econ.energy_price_usd_per_kwh
        sites, up, local, members = self._structure(group)
        S, T = len(prob), 12
        has_storage = any(p.variant(v).max_storage_m3 > 0 for v in group)
        if not has_storage:
            # closed form: full through-flow at every site, competition only
            # between co-sited variants
            order = [g for g in p.net.topological_order() if g in set(sites)]
            u = {v: np.zeros((S, T)) for v in group}
            w = {}
            for g in order:
                avail = local[g].copy()
                for h in up[g]:
                    avail = avail + w[h]
                    for v in members[h]:
                        avail = avail + u[v]
                for v in sorted(
                    members[g], key=lambda v: (-p.variant(v).production_factor_kw_per_m3s, v)
                ):
                    got = np.minimum(avail, p.variant(v).max_turbine_flow_m3s)
                    u[v] = got
                    avail = avail - got
                w[g] = avail
            total = 0.0
            for v in group:
                rho = p.variant(v).production_factor_kw_per_m3s
                total += pi1 * rho * float(np.einsum("s,t,st->", prob, d, u[v]))
            return total

        # small LP: u per variant, v per storage variant, w per site
        vids = sorted(group)
        vloc = {v: i for i, v in enumerate(vids)}
        sto = [v for v in vids if p.variant(v).max_storage_m3 > 0]
        sloc = {v: i for i, v in enumerate(sto)}
        gloc = {g: i for i, g in enumerate(sites)}
        nu, ns, ng = len(vids), len(sto), len(sites)
        blk = S * T

        def ucol(v, t, s):
            return (s * T + t) * nu + vloc[v]

        def vcol(v, t, s):
            return nu * blk + (s * T + t) * ns + sloc[v]

        def wcol(g, t, s):
            return (nu + ns) * blk + (s * T + t) * ng + gloc[g]

        ncol = (nu + ns + ng) * blk
        c = np.zeros(ncol)
        lb = np.zeros(ncol)
        ub = np.full(ncol, np.inf)
        for v in vids:
            var = p.variant(v)
            ub[[ucol(v, t, s) for s in range(S) for t in range(T)]] = var.max_turbine_flow_m3s
            for s in range(S):
                for t in range(T):
                    c[ucol(v, t, s)] = pi1 * prob[s] * d[t] * var.production_factor_kw_per_m3s
        for v in sto:
            ub[[vcol(v, t, s) for s in range(S) for t in range(T)]] = p.variant(v).max_storage_m3
        rows, cols, vals, rhs = [], [], [], []
        r = 0
        for s in range(S):
            for t in range(T):
                sec = SECONDS_PER_HOUR * d[t]
                for g in sites:
                    for v in members[g]:
                        if v in sloc:
                            rows += [r, r]
                            cols += [vcol(v, (t + 1) % T, s), vcol(v, t, s)]
                            vals += [1.0, -1.0]
                        rows.append(r)
                        cols.append(ucol(v, t, s))
                        vals.append(sec)
                    rows.append(r)
                    cols.append(wcol(g, t, s))
                    vals.append(sec)
                    for h in up[g]:
                        for v in members[h]:
                            rows.append(r)
                            cols.append(ucol(v, t, s))
                            vals.append(-sec)
                        rows.append(r)
                        cols.append(wcol(h, t, s))
                        vals.append(-sec)
                    rhs.append(sec * local[g][s, t])
                    r += 1
        A_eq = sp.coo_matrix((vals, (rows, cols)), shape=(r, ncol)).tocsr()
        sol = solve_lp(
            LinearProgram(c, None, None, A_eq, np.asarray(rhs), lb, ub), maximize=True
        )
        if sol.status != "optimal":
            raise ProblemError("group dispatch infeasible")  # water always balances
        return float(sol.objective)


def brute_force(problem: PortfolioProblem) -> Alternative | None:
    """Enumerate, check, price; the proven best plan or None if nothing is
    feasible."""
    lay = problem.layout()
    n = lay.n
    if n > MAX_BINARIES:
        raise ProblemError(f"instance too large for enumeration: {n} > {MAX_BINARIES} binaries")
    if n == 0:
        ok, _ = selection_feasible(problem, set())
        return evaluate_selection(problem, set()) if ok else None

    p = problem
    pi2 = p.econ.capacity_price_usd_per_kw_yr
    fixed_term = np.array(
        [pi2 * v.installed_kw - v.annuity_usd_per_yr for v in p.variants]
    )
    bit = {vid: 1 << i for i, vid in enumerate(lay.vids)}
    forced_mask = sum(bit[vid] for vid in p.constraints.forced)
    forbidden_mask = sum(bit[vid] for vid in p.constraints.forbidden)
    pair_masks = [bit[q.a] | bit[q.b] for q in p.conflicts]
    groups = _GroupEvaluator(p)

    best_obj = None
    best_sel = None
    for k in range(1 << n):
        # bit (n-1-i) carries x_i so that increasing k walks selection
        # vectors in lexicographic order
        mask = 0
        for i in range(n):
            if (k >> (n - 1 - i)) & 1:
                mask |= 1 << i
        if mask & forbidden_mask:
            continue
        if (mask & forced_mask) != forced_mask:
            continue
        if any((mask & pm) == pm for pm in pair_masks):
            continue
        sel = {lay.vids[i] for i in range(n) if (mask >> i) & 1}
        ok, _ = selection_feasible(p, sel)
        if not ok:
            continue
        obj = float(sum(fixed_term[i] for i in range(n) if (mask >> i) & 1))
        for comp in _components(p, lay, sel):
            obj += groups.value(comp)
        if best_obj is None or obj > best_obj:
            best_obj = obj
            best_sel = sel
    if best_sel is None:
        return None
    return evaluate_selection(problem, best_sel)


def _components(problem, lay, sel: set) -> list[frozenset]:
    """Connected groups of selected variants along the river."""
    if not sel:
        return []
    net = problem.net
    sites = sorted({problem.variant(v).segment_id for v in sel})
    site_set = set(sites)
    parent = {}
    for g in sites:
        cur = net[g].downstream_id
        while cur is not None and cur not in site_set:
            cur = net[cur].downstream_id
        parent[g] = cur

    def find(g):
        while parent.get(g) is not None:
            g = parent[g]
        return g

    comp_map: dict[str, set] = {}
    for g in sites:
        comp_map.setdefault(find(g), set()).add(g)
    out = []
    for members in comp_map.values():
        out.append(
            frozenset(v for v in sel if problem.variant(v).segment_id in members)
        )
    return sorted(out, key=lambda fs: sorted(fs))
