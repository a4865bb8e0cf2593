"""Independent feasibility audit of a finished alternative.

Everything is re-derived from the problem's raw inputs: the network, the
variant parameters, the inflow scenarios and the constraint settings. No
solver matrices, layouts or cached aggregates are consulted, so a bug in the
assembly cannot vouch for itself. The water-routing aggregation is repeated
here on purpose.

``audit`` returns a list of violation strings; an empty list is a pass.
"""

from __future__ import annotations

import numpy as np

from ..metrics import (
    CUMULATIVE_METRICS,
    FLOODED_KM2,
    FREE_FLOWING_KM,
    combined_satisfaction,
    contributions_for_area,
)
from .problem import PortfolioProblem
from .solution import Alternative

__all__ = ["audit"]

SECONDS_PER_HOUR = 3600.0


def _series(block: dict, key: str, n: int = 12):
    vals = block.get(key)
    if vals is None:
        return np.zeros(n)
    return np.asarray(vals, dtype=float)


def audit(problem: PortfolioProblem, alt: Alternative, tol: float = 1e-6) -> list[str]:
    bad: list[str] = []
    p = problem
    net = p.net
    cons = p.constraints

    # selection sanity -----------------------------------------------------
    vids = {v.id for v in p.variants}
    if set(alt.x) != vids:
        bad.append("selection vector does not cover the variant set")
        return bad
    if any(val not in (0, 1) for val in alt.x.values()):
        bad.append("selection vector is not binary")
        return bad
    sel = {vid for vid, val in alt.x.items() if val == 1}
    for q in p.conflicts:
        if q.a in sel and q.b in sel:
            bad.append(f"conflicting variants {q.a} and {q.b} both selected ({q.reason})")
    missing = cons.forced - sel
    if missing:
        bad.append(f"forced variants not selected: {sorted(missing)}")
    hit = cons.forbidden & sel
    if hit:
        bad.append(f"forbidden variants selected: {sorted(hit)}")

    # water accounting, re-derived from scratch ---------------------------
    by_id = {v.id: v for v in p.variants}
    hosts = sorted({v.segment_id for v in p.variants})
    hostset = set(hosts)
    drain = {}
    for sid in net.ids():
        cur = sid
        while cur is not None and cur not in hostset:
            cur = net[cur].downstream_id
        drain[sid] = cur
    inflow = {g: np.zeros((len(p.inflows.labels), 12)) for g in hosts}
    for sid, g in drain.items():
        if g is not None:
            inflow[g] = inflow[g] + p.inflows.flows[sid]
    up_hosts = {g: [] for g in hosts}
    for h in hosts:
        cur = net[h].downstream_id
        while cur is not None and cur not in hostset:
            cur = net[cur].downstream_id
        if cur is not None:
            up_hosts[cur].append(h)
    site_vars = {g: sorted(v.id for v in p.variants if v.segment_id == g) for g in hosts}

    d = np.asarray(p.inflows.month_durations_h)
    for s, label in enumerate(p.inflows.labels):
        block = alt.dispatch.get(label)
        if block is None:
            bad.append(f"scenario {label}: no dispatch")
            continue
        turbine = block.get("turbine_m3s", {})
        storage = block.get("storage_m3", {})
        spill = block.get("spill_m3s", {})
        for vid in set(turbine) | set(storage):
            if vid not in vids:
                bad.append(f"scenario {label}: dispatch for unknown variant {vid}")
        for vid in vids:
            v = by_id[vid]
            x = alt.x[vid]
            u = _series(turbine, vid)
            vv = _series(storage, vid)
            cap_u = v.max_turbine_flow_m3s * x
            cap_v = v.max_storage_m3 * x
            if np.any(u < -tol) or np.any(vv < -tol):
                bad.append(f"scenario {label}: negative flow or storage at {vid}")
            if np.any(u > cap_u + tol * max(1.0, v.max_turbine_flow_m3s)):
                bad.append(f"scenario {label}: turbine flow at {vid} exceeds its selected cap")
            if np.any(vv > cap_v + tol * max(1.0, v.max_storage_m3)):
                bad.append(f"scenario {label}: storage at {vid} exceeds its selected cap")
        for g in hosts:
            w = _series(spill, g)
            if np.any(w < -tol):
                bad.append(f"scenario {label}: negative spill at {g}")
            for t in range(12):
                sec = SECONDS_PER_HOUR * d[t]
                dv = 0.0
                for vid in site_vars[g]:
                    vv = _series(storage, vid)
                    dv += vv[(t + 1) % 12] - vv[t]
                out = w[t] + sum(_series(turbine, vid)[t] for vid in site_vars[g])
                inn = inflow[g][s, t] + sum(
                    _series(spill, h)[t] + sum(_series(turbine, vid)[t] for vid in site_vars[h])
                    for h in up_hosts[g]
                )
                resid = dv + sec * (out - inn)
                scale = max(1.0, abs(dv) + sec * (abs(out) + abs(inn)))
                if abs(resid) > tol * scale:
                    bad.append(
                        f"scenario {label}: water balance off at {g} month {t + 1} "
                        f"(residual {resid:.3e} m3)"
                    )

    # energy and objective -------------------------------------------------
    prob = np.asarray(p.inflows.probabilities)
    pi1 = p.econ.energy_price_usd_per_kwh
    pi2 = p.econ.capacity_price_usd_per_kw_yr
    energy = {}
    for vid in sorted(sel):
        v = by_id[vid]
        e = 0.0
        for s, label in enumerate(p.inflows.labels):
            block = alt.dispatch.get(label, {})
            u = _series(block.get("turbine_m3s", {}), vid)
            e += prob[s] * float(np.dot(d, u)) * v.production_factor_kw_per_m3s
        energy[vid] = e
        reported = alt.expected_energy_kwh.get(vid)
        if reported is None:
            bad.append(f"no expected energy reported for selected variant {vid}")
        elif abs(reported - e) > tol * max(1.0, abs(e)):
            bad.append(f"expected energy of {vid} reported {reported:.6g}, recomputed {e:.6g}")
    obj = pi1 * sum(energy.values()) + sum(
        pi2 * by_id[vid].installed_kw - by_id[vid].annuity_usd_per_yr for vid in sel
    )
    if abs(obj - alt.objective_usd_per_yr) > tol * max(1.0, abs(obj)):
        bad.append(
            f"objective reported {alt.objective_usd_per_yr:.6g}, recomputed {obj:.6g}"
        )

    # fragmentation indicators as constraints -------------------------------
    y = alt.y
    if set(y) != set(net.ids()):
        bad.append("fragmentation vector does not cover the network")
        return bad
    if any(val not in (0, 1) for val in y.values()):
        bad.append("fragmentation vector is not binary")
        return bad
    for sid in net.ids():
        if net[sid].natural_barrier and y[sid] != 1:
            bad.append(f"natural barrier at {sid} not marked fragmented")
        for ups in net.upstream_of(sid):
            if y[sid] == 1 and y[ups] == 0:
                bad.append(f"{sid} fragmented but upstream {ups} is not")
    for vid in sorted(sel):
        v = by_id[vid]
        if not v.passable and y[v.segment_id] != 1:
            bad.append(f"dam {vid} built but segment {v.segment_id} not marked fragmented")
    free_flow = sum(net[sid].length_km for sid in net.ids() if y[sid] == 0)
    L = cons.min_free_flowing_km
    if L is not None and free_flow < L - tol * max(1.0, L):
        bad.append(f"free-flowing length {free_flow:.6g} km below the floor {L}")

    # metrics, bounds and satisfaction --------------------------------------
    values = {}
    if p.impacts is not None:
        totals = {mid: 0.0 for mid in CUMULATIVE_METRICS}
        for vid in sorted(sel):
            v = by_id[vid]
            for mid, x in contributions_for_area(v.segment_id, v.flooded_area_km2, p.impacts).items():
                totals[mid] += x
        values.update(totals)
    values[FLOODED_KM2] = sum(by_id[vid].flooded_area_km2 for vid in sel)
    values[FREE_FLOWING_KM] = free_flow
    for mid, val in values.items():
        reported = alt.metrics.get(mid)
        if reported is None:
            bad.append(f"metric {mid} missing from the report")
        elif abs(reported - val) > tol * max(1.0, abs(val)):
            bad.append(f"metric {mid} reported {reported:.6g}, recomputed {val:.6g}")
    for m in cons.metric_bounds:
        if m.bound is None or m.id not in values:
            continue
        val = values[m.id]
        slack = tol * max(1.0, abs(m.bound))
        if m.bound_kind == "max" and val > m.bound + slack:
            bad.append(f"metric {m.id} = {val:.6g} exceeds its cap {m.bound}")
        if m.bound_kind == "min" and val < m.bound - slack:
            bad.append(f"metric {m.id} = {val:.6g} below its floor {m.bound}")
    if cons.satisfaction:
        scores = []
        for mid in sorted(cons.satisfaction.metric_ids):
            m = cons.metric(mid)
            lo, hi = m.satisfaction_bounds
            val = values[mid]
            affine = (val - lo) / (hi - lo)
            if m.resolved_orientation == "impact":
                affine = (hi - val) / (hi - lo)
            if affine < -tol:
                bad.append(f"satisfaction metric {mid} left its scoring band")
            score = min(1.0, max(0.0, affine))
            scores.append(score)
            reported = alt.satisfaction.get(mid)
            if reported is None or abs(reported - score) > tol:
                bad.append(f"satisfaction of {mid} reported {reported}, recomputed {score:.6g}")
        combined = combined_satisfaction(scores, cons.satisfaction.weight_mean)
        if combined < cons.satisfaction.required - tol:
            bad.append(
                f"combined satisfaction {combined:.6g} below the requirement "
                f"{cons.satisfaction.required}"
            )
    return bad
