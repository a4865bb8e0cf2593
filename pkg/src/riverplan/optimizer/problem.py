"""Portfolio problem assembly.

Couples designed project variants, their mutual exclusions, scenario inflows
and planning constraints into one mixed-integer program:

    max  sum_i (pi1*e_i + pi2*E_i*x_i - c_i*x_i)

over binary selections x, monthly dispatch (turbine flow u, storage v, spill
w) per scenario, fragmentation indicators y and satisfaction scores S. The
continuous relaxation is assembled once as sparse matrices; branch-and-bound
and fixed-selection dispatch both reuse it by pinning x bounds.

Hydraulics are condensed to the segments that actually host a variant: the
incremental inflow of every other segment is credited to the first hosting
segment downstream of it, and each hosting segment carries one spill column
that routes water through even when nothing is built there. Storage columns
exist only for variants with reservoir volume; monthly storage is cyclic
(December feeds January).

Satisfaction scores are affine in the metric value and capped at one. A
constrained metric whose value leaves the scoring band on the zero side
renders the alternative infeasible rather than scoring zero, which keeps the
exact check aligned with the linear constraints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from ..basin import RiverNetwork, fragmentation, free_flowing_length, load_network, dump_network
from ..engineering import ProjectVariant, dump_variants, load_variants
from ..hydrology import IncrementalInflows
from ..metrics import (
    CUMULATIVE_METRICS,
    FLOODED_KM2,
    FREE_FLOWING_KM,
    ImpactDensities,
    ImpactTable,
    MetricDef,
    SatisfactionConfig,
    combined_satisfaction,
    contributions_for_area,
)
from ..screening import ConflictPair

__all__ = [
    "ProblemError",
    "EconomicTerms",
    "PlanConstraints",
    "PortfolioProblem",
    "build_problem",
    "selection_feasible",
    "selection_metrics",
    "fragmented_under",
    "dump_problem",
    "load_problem",
]

SECONDS_PER_HOUR = 3600.0
CHECK_SLACK = 1e-9  # relative slack for exact feasibility re-checks


class ProblemError(ValueError):
    """Problem inputs are inconsistent."""


@dataclass(frozen=True)
class EconomicTerms:
    energy_price_usd_per_kwh: float
    capacity_price_usd_per_kw_yr: float = 0.0

    def __post_init__(self):
        if self.energy_price_usd_per_kwh < 0 or self.capacity_price_usd_per_kw_yr < 0:
            raise ProblemError("prices must be >= 0")


@dataclass(frozen=True)
class PlanConstraints:
    metric_bounds: tuple[MetricDef, ...] = ()
    min_free_flowing_km: float | None = None
    satisfaction: SatisfactionConfig | None = None
    forced: frozenset = frozenset()
    forbidden: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "metric_bounds", tuple(self.metric_bounds))
        object.__setattr__(self, "forced", frozenset(self.forced))
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))

    def metric(self, metric_id: str) -> MetricDef:
        for m in self.metric_bounds:
            if m.id == metric_id:
                return m
        raise ProblemError(f"no metric definition for {metric_id}")


@dataclass
class PortfolioProblem:
    """Validated, assembly-ready instance. Treat as immutable."""

    net: RiverNetwork
    variants: tuple[ProjectVariant, ...]
    conflicts: frozenset
    inflows: IncrementalInflows
    econ: EconomicTerms
    constraints: PlanConstraints
    impacts: ImpactTable | None = None
    contributions: dict = field(default_factory=dict, repr=False)
    baseline_fragmented: frozenset = frozenset()
    baseline_free_flowing_km: float = 0.0
    _layout: object = field(default=None, repr=False, compare=False)

    def variant(self, vid: str) -> ProjectVariant:
        for v in self.variants:
            if v.id == vid:
                return v
        raise ProblemError(f"unknown variant {vid}")

    def layout(self) -> "_Layout":
        if self._layout is None:
            self._layout = _Layout(self)
        return self._layout

    def needs_y(self) -> bool:
        c = self.constraints
        if c.min_free_flowing_km is not None:
            return True
        if any(m.id == FREE_FLOWING_KM and m.bound is not None for m in c.metric_bounds):
            return True
        return bool(c.satisfaction and FREE_FLOWING_KM in c.satisfaction.metric_ids)

    def with_overrides(
        self,
        energy_price=None,
        capacity_price=None,
        min_free_flowing_km=None,
        metric_bounds=None,
        force=(),
        forbid=(),
        satisfaction=None,
    ) -> "PortfolioProblem":
        """Amended copy, re-validated from scratch."""
        econ = EconomicTerms(
            self.econ.energy_price_usd_per_kwh if energy_price is None else energy_price,
            self.econ.capacity_price_usd_per_kw_yr if capacity_price is None else capacity_price,
        )
        cons = self.constraints
        bounds = {m.id: m for m in cons.metric_bounds}
        for m in metric_bounds or ():
            bounds[m.id] = m
        cons = replace(
            cons,
            metric_bounds=tuple(bounds[k] for k in sorted(bounds)),
            min_free_flowing_km=(
                cons.min_free_flowing_km if min_free_flowing_km is None else min_free_flowing_km
            ),
            satisfaction=cons.satisfaction if satisfaction is None else satisfaction,
            forced=cons.forced | frozenset(force),
            forbidden=cons.forbidden | frozenset(forbid),
        )
        return build_problem(
            self.variants, self.conflicts, self.inflows, self.net, econ, cons, self.impacts
        )


def build_problem(
    variants: Iterable[ProjectVariant],
    conflicts: Iterable,
    inflows: IncrementalInflows,
    net: RiverNetwork,
    econ: EconomicTerms,
    constraints: PlanConstraints = PlanConstraints(),
    impacts: ImpactTable | None = None,
) -> PortfolioProblem:
    """Validate the pieces and freeze them into a PortfolioProblem."""
    vs = tuple(sorted(variants, key=lambda v: v.id))
    ids = [v.id for v in vs]
    if len(set(ids)) != len(ids):
        raise ProblemError("duplicate variant ids")
    known = set(ids)
    for v in vs:
        if v.segment_id not in net:
            raise ProblemError(f"variant {v.id}: segment {v.segment_id} not in network")
    pairs = frozenset(conflicts)
    for p in pairs:
        if p.a not in known or p.b not in known:
            raise ProblemError(f"conflict ({p.a}, {p.b}) references unknown variant")

    missing = [sid for sid in net.ids() if sid not in inflows.flows]
    if missing:
        raise ProblemError(f"no incremental inflow for segments {missing}")
    if abs(sum(inflows.probabilities) - 1.0) > 1e-9:
        raise ProblemError("scenario probabilities must sum to 1")
    if len(inflows.month_durations_h) != 12 or min(inflows.month_durations_h) <= 0:
        raise ProblemError("need 12 positive month durations")

    cons = constraints
    bad = cons.forced & cons.forbidden
    if bad:
        raise ProblemError(f"variants both forced and forbidden: {sorted(bad)}")
    for vid in cons.forced | cons.forbidden:
        if vid not in known:
            raise ProblemError(f"force/forbid references unknown variant {vid}")
    for p in pairs:
        if p.a in cons.forced and p.b in cons.forced:
            raise ProblemError(f"forced variants {p.a} and {p.b} conflict ({p.reason})")

    seen = set()
    needs_contrib = False
    for m in cons.metric_bounds:
        if m.id in seen:
            raise ProblemError(f"metric {m.id} bounded twice")
        seen.add(m.id)
        if m.id == FREE_FLOWING_KM:
            if m.bound is not None and m.bound_kind != "min":
                raise ProblemError("free-flowing length only takes a min bound")
        elif m.id in CUMULATIVE_METRICS or m.id == FLOODED_KM2:
            if m.id != FLOODED_KM2 and (m.bound is not None or _in_satisfaction(cons, m.id)):
                needs_contrib = True
        else:
            raise ProblemError(f"metric {m.id} cannot be constrained")
    if cons.satisfaction:
        if not cons.satisfaction.metric_ids:
            raise ProblemError("satisfaction enabled with no metrics")
        for mid in cons.satisfaction.metric_ids:
            m = cons.metric(mid)  # raises if absent
            if m.satisfaction_bounds is None:
                raise ProblemError(f"metric {mid} has no satisfaction band")
    if needs_contrib and impacts is None:
        raise ProblemError("cumulative metric constraints need an impact table")

    baseline = frozenset(fragmentation(net, {}).fragmented_ids())
    baseline_ff = net.total_length_km() - sum(net[s].length_km for s in baseline)
    L = cons.min_free_flowing_km
    if L is not None:
        if L < 0:
            raise ProblemError("min free-flowing length must be >= 0")
        if L > baseline_ff + 1e-9:
            raise ProblemError(
                f"min free-flowing length {L} km exceeds the baseline {baseline_ff:.6g} km"
            )
    for m in cons.metric_bounds:
        if m.id == FREE_FLOWING_KM and m.bound is not None and m.bound > baseline_ff + 1e-9:
            raise ProblemError(
                f"free-flowing bound {m.bound} km exceeds the baseline {baseline_ff:.6g} km"
            )

    contrib = {}
    if impacts is not None:
        for v in vs:
            contrib[v.id] = contributions_for_area(v.segment_id, v.flooded_area_km2, impacts)

    return PortfolioProblem(
        net=net,
        variants=vs,
        conflicts=pairs,
        inflows=inflows,
        econ=econ,
        constraints=cons,
        impacts=impacts,
        contributions=contrib,
        baseline_fragmented=baseline,
        baseline_free_flowing_km=baseline_ff,
    )


def _in_satisfaction(cons: PlanConstraints, mid: str) -> bool:
    return bool(cons.satisfaction and mid in cons.satisfaction.metric_ids)


def _contrib(p: PortfolioProblem, v: ProjectVariant, mid: str) -> float:
    """Per-variant contribution to a cumulative metric; flooded area needs no
    impact table."""
    if mid == FLOODED_KM2:
        return v.flooded_area_km2
    return p.contributions[v.id][mid]


class _Layout:
    """Column layout and sparse matrices of the continuous relaxation."""

    def __init__(self, p: PortfolioProblem):
        self.p = p
        net = p.net
        self.vids = [v.id for v in p.variants]
        self.vidx = {vid: i for i, vid in enumerate(self.vids)}
        self.n = len(self.vids)
        self.hosts = sorted({v.segment_id for v in p.variants})
        self.hidx = {g: k for k, g in enumerate(self.hosts)}
        self.site_vars = {g: [] for g in self.hosts}
        for i, v in enumerate(p.variants):
            self.site_vars[v.segment_id].append(i)
        self.storage = [i for i, v in enumerate(p.variants) if v.max_storage_m3 > 0]
        self.sidx = {i: j for j, i in enumerate(self.storage)}
        self.S = len(p.inflows.labels)
        self.T = 12
        self.needs_y = p.needs_y()
        self.y_ids = list(net.ids()) if self.needs_y else []
        self.yidx = {sid: k for k, sid in enumerate(self.y_ids)}
        sat = p.constraints.satisfaction
        self.sat_ids = sorted(sat.metric_ids) if sat else []

        n_block = self.T * self.S
        self.ofs_u = self.n
        self.ofs_v = self.ofs_u + self.n * n_block
        self.ofs_w = self.ofs_v + len(self.storage) * n_block
        self.ofs_y = self.ofs_w + len(self.hosts) * n_block
        self.ofs_sat = self.ofs_y + len(self.y_ids)
        self.ncol = self.ofs_sat + (len(self.sat_ids) + 1 if self.sat_ids else 0)

        hostset = set(self.hosts)
        drain = {}
        for sid in net.ids():
            cur = sid
            while cur is not None and cur not in hostset:
                cur = net[cur].downstream_id
            drain[sid] = cur
        self.site_inflow = {g: np.zeros((self.S, self.T)) for g in self.hosts}
        for sid, g in drain.items():
            if g is not None:
                self.site_inflow[g] = self.site_inflow[g] + p.inflows.flows[sid]
        self.up_hosts = {g: [] for g in self.hosts}
        for h in self.hosts:
            cur = net[h].downstream_id
            while cur is not None and cur not in hostset:
                cur = net[cur].downstream_id
            if cur is not None:
                self.up_hosts[cur].append(h)

        self._assemble()

    # column indexing -----------------------------------------------------
    def u_col(self, i, t, s) -> int:
        return self.ofs_u + (s * self.T + t) * self.n + i

    def v_col(self, i, t, s) -> int:
        return self.ofs_v + (s * self.T + t) * len(self.storage) + self.sidx[i]

    def w_col(self, g, t, s) -> int:
        return self.ofs_w + (s * self.T + t) * len(self.hosts) + self.hidx[g]

    def y_col(self, sid) -> int:
        return self.ofs_y + self.yidx[sid]

    def sat_col(self, j) -> int:
        return self.ofs_sat + j

    @property
    def smin_col(self) -> int:
        return self.ofs_sat + len(self.sat_ids)

    # matrices -------------------------------------------------------------
    def _assemble(self):
        p = self.p
        net = p.net
        d = np.asarray(p.inflows.month_durations_h)
        prob = np.asarray(p.inflows.probabilities)
        vlist = p.variants

        c = np.zeros(self.ncol)
        pi1 = p.econ.energy_price_usd_per_kwh
        pi2 = p.econ.capacity_price_usd_per_kw_yr
        for i, v in enumerate(vlist):
            c[i] = pi2 * v.installed_kw - v.annuity_usd_per_yr
            for s in range(self.S):
                for t in range(self.T):
                    c[self.u_col(i, t, s)] = pi1 * prob[s] * d[t] * v.production_factor_kw_per_m3s
        self.c = c

        lb = np.zeros(self.ncol)
        ub = np.full(self.ncol, np.inf)
        ub[: self.n] = 1.0
        for vid in p.constraints.forced:
            lb[self.vidx[vid]] = 1.0
        for vid in p.constraints.forbidden:
            ub[self.vidx[vid]] = 0.0
        L = p.constraints.min_free_flowing_km
        if L is not None:
            # A non-passable plant whose closure (beyond what the baseline
            # and the forced plants already fragment) eats more river length
            # than the floor leaves to spend can never be built.  Dropping the
            # column up front stops the relaxation from padding the objective
            # with fractional slices of unbuildable projects.
            known = fragmented_under(p, p.constraints.forced)
            budget = net.total_length_km() - L - sum(net[s].length_km for s in known)
            for i, v in enumerate(vlist):
                if v.passable or ub[i] == 0.0 or lb[i] == 1.0:
                    continue
                added = fragmented_under(p, set(p.constraints.forced) | {v.id}) - known
                if sum(net[s].length_km for s in added) > budget + 1e-9:
                    ub[i] = 0.0
        for sid in self.y_ids:
            k = self.y_col(sid)
            ub[k] = 1.0
            if sid in p.baseline_fragmented:
                lb[k] = 1.0
        if self.sat_ids:
            ub[self.ofs_sat : self.ncol] = 1.0
        self.base_lb, self.base_ub = lb, ub

        # water balance: storage delta + 3600*d*(u + w - upstream releases) = 3600*d*a
        eq_r, eq_c, eq_x, b_eq = [], [], [], []
        row = 0
        for s in range(self.S):
            for t in range(self.T):
                sec = SECONDS_PER_HOUR * d[t]
                for g in self.hosts:
                    for i in self.site_vars[g]:
                        if i in self.sidx:
                            eq_r += [row, row]
                            eq_c += [self.v_col(i, (t + 1) % self.T, s), self.v_col(i, t, s)]
                            eq_x += [1.0, -1.0]
                        eq_r.append(row)
                        eq_c.append(self.u_col(i, t, s))
                        eq_x.append(sec)
                    eq_r.append(row)
                    eq_c.append(self.w_col(g, t, s))
                    eq_x.append(sec)
                    for h in self.up_hosts[g]:
                        for k in self.site_vars[h]:
                            eq_r.append(row)
                            eq_c.append(self.u_col(k, t, s))
                            eq_x.append(-sec)
                        eq_r.append(row)
                        eq_c.append(self.w_col(h, t, s))
                        eq_x.append(-sec)
                    b_eq.append(sec * self.site_inflow[g][s, t])
                    row += 1
        self.A_eq = sp.coo_matrix((eq_x, (eq_r, eq_c)), shape=(row, self.ncol)).tocsr()
        self.b_eq = np.asarray(b_eq)

        ub_r, ub_c, ub_x, b_ub = [], [], [], []
        row = 0

        def add(cols, vals, rhs):
            nonlocal row
            ub_r.extend([row] * len(cols))
            ub_c.extend(cols)
            ub_x.extend(vals)
            b_ub.append(rhs)
            row += 1

        for s in range(self.S):
            for t in range(self.T):
                for i, v in enumerate(vlist):
                    add([self.u_col(i, t, s), i], [1.0, -v.max_turbine_flow_m3s], 0.0)
                for i in self.storage:
                    add([self.v_col(i, t, s), i], [1.0, -vlist[i].max_storage_m3], 0.0)
        # Annual-volume strengthening.  Over one cyclic year storage nets to
        # zero, so a plant cannot turbine more water than arrives above it:
        # sum_t sec_t*u_t <= A_s*x with A_s the scenario's annual inflow
        # volume.  For water-limited designs this pulls the relaxation's x up
        # from the u/u_max slivers the per-month rows tolerate; when capacity
        # is the binding side the monthly rows are already tighter, so the
        # row is skipped.
        sec_t = SECONDS_PER_HOUR * d
        annual_vol: dict[str, np.ndarray] = {}

        def _annual(g: str) -> np.ndarray:
            if g not in annual_vol:
                vol = self.site_inflow[g] @ sec_t
                for h in self.up_hosts[g]:
                    vol = vol + _annual(h)
                annual_vol[g] = vol
            return annual_vol[g]

        for i, v in enumerate(vlist):
            vol = _annual(v.segment_id)
            for s in range(self.S):
                if vol[s] < v.max_turbine_flow_m3s * sec_t.sum():
                    cols = [self.u_col(i, t, s) for t in range(self.T)] + [i]
                    add(cols, list(sec_t / vol[s]) + [-1.0], 0.0)
        # Mutual exclusions.  A segment whose variants are pairwise conflicting
        # collapses to one at-most-one row: the binary feasible set is the
        # same, but the relaxation can no longer cover a site with halves of
        # three designs.  Incomplete groups and cross-segment pairs stay
        # pairwise.
        pair_set = {(q.a, q.b) for q in p.conflicts}
        by_seg: dict[str, list[str]] = {}
        for v in vlist:
            by_seg.setdefault(v.segment_id, []).append(v.id)
        cliqued: set[tuple[str, str]] = set()
        for sid in sorted(by_seg):
            members = sorted(by_seg[sid])
            if len(members) < 2:
                continue
            pairs = [(a, b) for i, a in enumerate(members) for b in members[i + 1 :]]
            if all(pr in pair_set for pr in pairs):
                add([self.vidx[m] for m in members], [1.0] * len(members), 1.0)
                cliqued.update(pairs)
        for pair in sorted(p.conflicts, key=lambda q: (q.a, q.b)):
            if (pair.a, pair.b) not in cliqued:
                add([self.vidx[pair.a], self.vidx[pair.b]], [1.0, 1.0], 1.0)
        for m in sorted(p.constraints.metric_bounds, key=lambda m: m.id):
            if m.bound is None:
                continue
            if m.id == FREE_FLOWING_KM:
                cols = [self.y_col(sid) for sid in self.y_ids]
                vals = [net[sid].length_km for sid in self.y_ids]
                add(cols, vals, net.total_length_km() - m.bound)
            else:
                cols = list(range(self.n))
                vals = [_contrib(p, v, m.id) for v in vlist]
                if m.bound_kind == "max":
                    add(cols, vals, m.bound)
                else:
                    add(cols, [-x for x in vals], -m.bound)
        if self.needs_y:
            for i, v in enumerate(vlist):
                if not v.passable:
                    add([i, self.y_col(v.segment_id)], [1.0, -1.0], 0.0)
            for sid in self.y_ids:
                for up in net.upstream_of(sid):
                    add([self.y_col(sid), self.y_col(up)], [1.0, -1.0], 0.0)
            L = p.constraints.min_free_flowing_km
            if L is not None:
                cols = [self.y_col(sid) for sid in self.y_ids]
                vals = [net[sid].length_km for sid in self.y_ids]
                add(cols, vals, net.total_length_km() - L)
        if self.sat_ids:
            sat = p.constraints.satisfaction
            for j, mid in enumerate(self.sat_ids):
                m = p.constraints.metric(mid)
                lo, hi = m.satisfaction_bounds
                span = hi - lo
                if mid == FREE_FLOWING_KM:
                    total = net.total_length_km()
                    ycols = [self.y_col(sid) for sid in self.y_ids]
                    lengths = [net[sid].length_km for sid in self.y_ids]
                    if m.resolved_orientation == "benefit":
                        add(
                            [self.sat_col(j)] + ycols,
                            [1.0] + [l / span for l in lengths],
                            (total - lo) / span,
                        )
                    else:
                        add(
                            [self.sat_col(j)] + ycols,
                            [1.0] + [-l / span for l in lengths],
                            (hi - total) / span,
                        )
                else:
                    coefs = [_contrib(p, v, mid) / span for v in vlist]
                    if m.resolved_orientation == "benefit":
                        add([self.sat_col(j)] + list(range(self.n)), [1.0] + [-x for x in coefs], -lo / span)
                    else:
                        add([self.sat_col(j)] + list(range(self.n)), [1.0] + coefs, hi / span)
            for j in range(len(self.sat_ids)):
                add([self.smin_col, self.sat_col(j)], [1.0, -1.0], 0.0)
            lam = sat.weight_mean
            J = len(self.sat_ids)
            cols = [self.sat_col(j) for j in range(J)] + [self.smin_col]
            vals = [-lam / J] * J + [-(1.0 - lam)]
            add(cols, vals, -sat.required)
        self.A_ub = sp.coo_matrix((ub_x, (ub_r, ub_c)), shape=(row, self.ncol)).tocsr()
        self.b_ub = np.asarray(b_ub)


# ---------------------------------------------------------------------------
# exact (non-LP) selection checks, shared by search, oracle and audit helpers


def fragmented_under(problem: PortfolioProblem, selected: Iterable[str]) -> set[str]:
    """Fragmented segment ids once the selected variants are built."""
    dams = [(problem.variant(vid).segment_id, problem.variant(vid).passable) for vid in selected]
    return fragmentation(problem.net, dams).fragmented_ids()


def selection_metrics(problem: PortfolioProblem, selected: Iterable[str]) -> dict[str, float]:
    """Whole-alternative metric values for an integral selection."""
    sel = sorted(set(selected))
    values: dict[str, float] = {}
    if problem.impacts is not None:
        for mid in CUMULATIVE_METRICS:
            values[mid] = sum(problem.contributions[vid][mid] for vid in sel)
    values[FLOODED_KM2] = sum(problem.variant(vid).flooded_area_km2 for vid in sel)
    dams = [(problem.variant(vid).segment_id, problem.variant(vid).passable) for vid in sel]
    values[FREE_FLOWING_KM] = free_flowing_length(problem.net, dams)
    return values


def selection_feasible(problem: PortfolioProblem, selected: Iterable[str]) -> tuple[bool, str]:
    """Exact check of every selection-only constraint (no dispatch needed)."""
    sel = set(selected)
    cons = problem.constraints
    if not cons.forced <= sel:
        return False, f"forced variants missing: {sorted(cons.forced - sel)}"
    hit = cons.forbidden & sel
    if hit:
        return False, f"forbidden variants selected: {sorted(hit)}"
    for p in problem.conflicts:
        if p.a in sel and p.b in sel:
            return False, f"conflict between {p.a} and {p.b} ({p.reason})"
    values = selection_metrics(problem, sel)
    for m in cons.metric_bounds:
        if m.bound is None:
            continue
        val = values[m.id]
        slack = CHECK_SLACK * max(1.0, abs(m.bound))
        if m.bound_kind == "max" and val > m.bound + slack:
            return False, f"metric {m.id} = {val:.6g} exceeds {m.bound}"
        if m.bound_kind == "min" and val < m.bound - slack:
            return False, f"metric {m.id} = {val:.6g} below {m.bound}"
    L = cons.min_free_flowing_km
    if L is not None and values[FREE_FLOWING_KM] < L - CHECK_SLACK * max(1.0, L):
        return False, f"free-flowing length {values[FREE_FLOWING_KM]:.6g} km below {L}"
    if cons.satisfaction:
        scores = satisfaction_scores(problem, values)
        if scores is None:
            return False, "a satisfaction metric left its scoring band"
        combined = combined_satisfaction(list(scores.values()), cons.satisfaction.weight_mean)
        if combined < cons.satisfaction.required - CHECK_SLACK:
            return False, f"combined satisfaction {combined:.6g} below {cons.satisfaction.required}"
    return True, ""


def satisfaction_scores(problem: PortfolioProblem, values: Mapping[str, float]) -> dict | None:
    """Per-metric scores for the enabled satisfaction metrics, or None when a
    value falls past the zero-score end of its band (infeasible by policy)."""
    cons = problem.constraints
    if not cons.satisfaction:
        return {}
    scores = {}
    for mid in sorted(cons.satisfaction.metric_ids):
        m = cons.metric(mid)
        lo, hi = m.satisfaction_bounds
        val = values[mid]
        affine = (val - lo) / (hi - lo)
        if m.resolved_orientation == "impact":
            affine = (hi - val) / (hi - lo)
        if affine < -CHECK_SLACK:
            return None
        scores[mid] = min(1.0, max(0.0, affine))
    return scores


# ---------------------------------------------------------------------------
# serialization


def _metric_to_dict(m: MetricDef) -> dict:
    return {
        "id": m.id,
        "bound_kind": m.bound_kind,
        "bound": m.bound,
        "cumulative": m.cumulative,
        "satisfaction_bounds": list(m.satisfaction_bounds) if m.satisfaction_bounds else None,
        "orientation": m.orientation,
    }


def _metric_from_dict(d: dict) -> MetricDef:
    sb = d.get("satisfaction_bounds")
    return MetricDef(
        id=d["id"],
        bound_kind=d["bound_kind"],
        bound=d.get("bound"),
        cumulative=d.get("cumulative", True),
        satisfaction_bounds=tuple(sb) if sb else None,
        orientation=d.get("orientation"),
    )


def dump_problem(problem: PortfolioProblem) -> str:
    p = problem
    cons = p.constraints
    doc = {
        "network": json.loads(dump_network(p.net))["segments"],
        "variants": json.loads(dump_variants(p.variants))["variants"],
        "conflicts": [
            {"a": q.a, "b": q.b, "reason": q.reason}
            for q in sorted(p.conflicts, key=lambda q: (q.a, q.b))
        ],
        "inflows": {
            "labels": list(p.inflows.labels),
            "probabilities": list(p.inflows.probabilities),
            "month_durations_h": list(p.inflows.month_durations_h),
            "flows": {sid: p.inflows.flows[sid].tolist() for sid in sorted(p.inflows.flows)},
        },
        "economics": {
            "energy_price_usd_per_kwh": p.econ.energy_price_usd_per_kwh,
            "capacity_price_usd_per_kw_yr": p.econ.capacity_price_usd_per_kw_yr,
        },
        "constraints": {
            "metric_bounds": [_metric_to_dict(m) for m in cons.metric_bounds],
            "min_free_flowing_km": cons.min_free_flowing_km,
            "satisfaction": (
                {
                    "weight_mean": cons.satisfaction.weight_mean,
                    "required": cons.satisfaction.required,
                    "metric_ids": sorted(cons.satisfaction.metric_ids),
                }
                if cons.satisfaction
                else None
            ),
            "forced": sorted(cons.forced),
            "forbidden": sorted(cons.forbidden),
        },
        "impacts": (
            {
                sid: {
                    "households_per_km2": dens.households_per_km2,
                    "road_m_per_km2": dens.road_m_per_km2,
                    "railway_m_per_km2": dens.railway_m_per_km2,
                    "protected_fraction": dens.protected_fraction,
                    "biomass_Mg_per_ha": dens.biomass_Mg_per_ha,
                }
                for sid, dens in sorted(p.impacts.rows.items())
            }
            if p.impacts is not None
            else None
        ),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_problem(source) -> PortfolioProblem:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if "\n" not in text and text.endswith(".json"):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
    doc = json.loads(text)
    net = load_network(json.dumps({"segments": doc["network"]}))
    variants = load_variants(json.dumps({"variants": doc["variants"]}))
    conflicts = {ConflictPair(d["a"], d["b"], d["reason"]) for d in doc["conflicts"]}
    inf = doc["inflows"]
    inflows = IncrementalInflows(
        labels=tuple(inf["labels"]),
        probabilities=tuple(inf["probabilities"]),
        month_durations_h=tuple(inf["month_durations_h"]),
        flows={sid: np.asarray(arr) for sid, arr in inf["flows"].items()},
    )
    eco = doc["economics"]
    econ = EconomicTerms(eco["energy_price_usd_per_kwh"], eco["capacity_price_usd_per_kw_yr"])
    cd = doc["constraints"]
    sat = cd.get("satisfaction")
    cons = PlanConstraints(
        metric_bounds=tuple(_metric_from_dict(d) for d in cd["metric_bounds"]),
        min_free_flowing_km=cd.get("min_free_flowing_km"),
        satisfaction=(
            SatisfactionConfig(sat["weight_mean"], sat["required"], tuple(sat["metric_ids"]))
            if sat
            else None
        ),
        forced=frozenset(cd.get("forced", ())),
        forbidden=frozenset(cd.get("forbidden", ())),
    )
    impacts = None
    if doc.get("impacts") is not None:
        impacts = ImpactTable(
            {sid: ImpactDensities(**dens) for sid, dens in doc["impacts"].items()}
        )
    return build_problem(variants, conflicts, inflows, net, econ, cons, impacts)
