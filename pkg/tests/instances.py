"""Seeded random problem instances for solver cross-checks.

Instances are drawn small enough for exhaustive enumeration, with enough
variety (storage, conflicts, metric bounds, satisfaction, forced and
forbidden projects) that agreement between the search and the enumeration is
meaningful. Same seed, same instance, bit for bit.
"""

import numpy as np

from riverplan.basin import RiverNetwork, Segment
from riverplan.engineering import CostBreakdown, CostLine, ProjectVariant
from riverplan.hydrology import MONTH_HOURS, IncrementalInflows
from riverplan.metrics import (
    FLOODED_KM2,
    FREE_FLOWING_KM,
    HOUSEHOLDS,
    ImpactDensities,
    ImpactTable,
    MetricDef,
    SatisfactionConfig,
)
from riverplan.optimizer import EconomicTerms, PlanConstraints, build_problem
from riverplan.screening import ConflictPair

ENERGY_PRICE = 0.05  # USD/kWh


def random_network(rng, n_segments: int) -> RiverNetwork:
    """Random tree, mouth first; every non-mouth segment drains to an
    earlier one, so indices are already a topological order."""
    feet = [100.0]
    downs = [None]
    for i in range(1, n_segments):
        j = int(rng.integers(0, i))
        downs.append(j)
        feet.append(feet[j] + float(rng.uniform(8.0, 45.0)))
    local = rng.uniform(80.0, 400.0, size=n_segments)
    area = local.copy()
    for i in range(n_segments - 1, 0, -1):
        area[downs[i]] += area[i]
    segs = []
    for i in range(n_segments):
        segs.append(
            Segment(
                id=f"S{i}",
                downstream_id=None if downs[i] is None else f"S{downs[i]}",
                length_km=float(rng.uniform(3.0, 20.0)),
                foot_elevation_m=feet[i],
                drainage_area_km2=float(area[i]),
                mean_slope=float(rng.uniform(0.002, 0.03)),
                valley_half_width_slope=float(rng.uniform(1.5, 3.5)),
                natural_barrier=bool(i > 0 and rng.random() < 0.1),
            )
        )
    return RiverNetwork(segs)


def random_inflows(rng, net: RiverNetwork) -> IncrementalInflows:
    labels = ("wet", "dry")
    month = np.arange(12)
    flows = {}
    for sid in net.ids():
        base = float(rng.uniform(2.0, 15.0))
        season = 1.0 + 0.6 * np.sin(2 * np.pi * (month + rng.integers(0, 12)) / 12.0)
        wet = base * season * float(rng.uniform(1.0, 1.6))
        dry = wet * float(rng.uniform(0.3, 0.7))
        flows[sid] = np.vstack([wet, dry])
    return IncrementalInflows(
        labels=labels,
        probabilities=(0.6, 0.4),
        month_durations_h=MONTH_HOURS,
        flows=flows,
    )


def _variant(rng, vid: str, sid: str, seg, mean_flow: float) -> ProjectVariant:
    head = float(rng.uniform(10.0, 50.0))
    rho = 9.81 * 0.9 * head
    max_flow = float(rng.uniform(0.3, 1.2)) * mean_flow
    kw = rho * max_flow
    energy_guess = rho * max_flow * 6000.0
    annuity = ENERGY_PRICE * energy_guess * float(rng.uniform(0.5, 1.4))
    storage = 0.0
    if rng.random() < 0.25:
        storage = float(rng.uniform(0.5, 3.0)) * 3600.0 * 730.0 * max_flow
    capex = annuity * 10.0
    return ProjectVariant(
        id=vid,
        segment_id=sid,
        scheme="dam-toe" if storage > 0 else "run-of-river",
        template="concrete-gravity",
        gross_head_m=head,
        foot_elevation_m=seg.foot_elevation_m,
        production_factor_kw_per_m3s=rho,
        installed_kw=kw,
        max_turbine_flow_m3s=max_flow,
        max_storage_m3=storage,
        flooded_area_km2=float(rng.uniform(0.0, 3.0)),
        capex_usd=capex,
        breakdown=CostBreakdown((CostLine("civil", "lump", 1.0, "lump", capex, capex),)),
        annuity_usd_per_yr=annuity,
        annual_energy_kwh=energy_guess,
        passable=bool(rng.random() < 0.15),
    )


def random_instance(seed: int, n_variants: int = 8, n_segments: int | None = None):
    """One random portfolio problem with n_variants selection binaries."""
    rng = np.random.default_rng(seed)
    if n_segments is None:
        n_segments = int(rng.integers(3, 8))
    net = random_network(rng, n_segments)
    inflows = random_inflows(rng, net)
    ids = list(net.ids())
    variants = []
    for i in range(n_variants):
        sid = ids[int(rng.integers(0, len(ids)))]
        mean_flow = float(np.mean(inflows.flows[sid]))
        variants.append(_variant(rng, f"P{i:02d}", sid, net[sid], max(0.5, mean_flow)))

    conflicts = set()
    by_site = {}
    for v in variants:
        by_site.setdefault(v.segment_id, []).append(v.id)
    for vids in by_site.values():
        for a, b in zip(vids, vids[1:]):
            conflicts.add(ConflictPair(a, b, "site"))
    extra = int(rng.integers(0, 3))
    for _ in range(extra):
        a, b = rng.choice([v.id for v in variants], size=2, replace=False)
        if a != b:
            conflicts.add(ConflictPair(str(a), str(b), "inundation"))

    impacts = ImpactTable(
        {
            sid: ImpactDensities(
                households_per_km2=float(rng.uniform(0.0, 120.0)),
                road_m_per_km2=float(rng.uniform(0.0, 800.0)),
                railway_m_per_km2=float(rng.uniform(0.0, 50.0)),
                protected_fraction=float(rng.uniform(0.0, 0.4)),
                biomass_Mg_per_ha=float(rng.uniform(20.0, 300.0)),
            )
            for sid in net.ids()
        }
    )

    bounds = []
    total_flooded = sum(v.flooded_area_km2 for v in variants)
    if rng.random() < 0.5 and total_flooded > 0:
        bounds.append(MetricDef(FLOODED_KM2, "max", bound=float(rng.uniform(0.3, 0.9)) * total_flooded))
    satisfaction = None
    if rng.random() < 0.3:
        hh_cap = sum(
            impacts[v.segment_id].households_per_km2 * v.flooded_area_km2 for v in variants
        )
        bounds.append(
            MetricDef(HOUSEHOLDS, "max", satisfaction_bounds=(0.0, max(1.0, 0.8 * hh_cap)))
        )
        satisfaction = SatisfactionConfig(0.6, float(rng.uniform(0.1, 0.5)), (HOUSEHOLDS,))
    min_ff = None
    if rng.random() < 0.4:
        baseline = build_problem(
            (), (), inflows, net, EconomicTerms(ENERGY_PRICE)
        ).baseline_free_flowing_km
        min_ff = float(rng.uniform(0.3, 0.8)) * baseline
    forced = frozenset()
    forbidden = frozenset()
    if rng.random() < 0.25:
        forced = frozenset({variants[int(rng.integers(0, len(variants)))].id})
    if rng.random() < 0.25:
        pick = variants[int(rng.integers(0, len(variants)))].id
        if pick not in forced:
            forbidden = frozenset({pick})

    cons = PlanConstraints(
        metric_bounds=tuple(bounds),
        min_free_flowing_km=min_ff,
        satisfaction=satisfaction,
        forced=forced,
        forbidden=forbidden,
    )
    econ = EconomicTerms(ENERGY_PRICE, 20.0 if rng.random() < 0.5 else 0.0)
    return build_problem(variants, conflicts, inflows, net, econ, cons, impacts)
