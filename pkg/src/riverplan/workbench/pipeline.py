"""The planning pipeline as plain functions.

Each stage takes loaded objects and returns results; file handling, exit
codes and HTTP live elsewhere.  The CLI and the API both call these, so a
portfolio produced over HTTP is the same portfolio the CLI would write.

Stages: screen (geometry candidates) -> design (sized variants) -> filter
(ex-ante economics + conflict pairs) -> optimize (portfolio search).  A
what-if applies overrides to a finished problem and prices the change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from ..basin import RiverNetwork, load_network
from ..engineering import (
    ProjectVariant,
    UnitPriceBook,
    default_price_book,
    load_price_book,
    optimize_capacity,
)
from ..hydrology import (
    DailySeries,
    IncrementalInflows,
    ScenarioSet,
    incremental_inflows,
    load_gauge,
    monthly_scenarios,
    q7_10,
    transfer_flow,
)
from ..metrics import ImpactTable, MetricDef, SatisfactionConfig, load_impact_table
from ..optimizer import (
    EconomicTerms,
    PlanConstraints,
    PortfolioProblem,
    SolutionPool,
    WhatIfOutcome,
    build_problem,
    solve,
    what_if,
)
from ..screening import ConflictPair, SiteGeometry, conflict_pairs, exante_filter, screen_sites
from .config import ConfigError, PlanningConfig

__all__ = [
    "PlanningInputs",
    "load_inputs",
    "screen_step",
    "design_step",
    "filter_step",
    "optimize_step",
    "whatif_step",
    "parse_plan_overrides",
    "OVERRIDE_KEYS",
]


@dataclass(frozen=True)
class PlanningInputs:
    """Input files loaded once, plus the per-segment hydrology derived from them."""

    net: RiverNetwork
    gauge: DailySeries
    impacts: ImpactTable | None
    prices: UnitPriceBook
    scenarios: dict[str, ScenarioSet]  # total flow at each segment outlet
    low_flow_m3s: dict[str, float]  # 7Q10 at each segment outlet


def load_inputs(cfg: PlanningConfig) -> PlanningInputs:
    net = load_network(cfg.network_file)
    gauge = load_gauge(cfg.gauge_file)
    impacts = load_impact_table(cfg.impact_file) if cfg.impact_file else None
    prices = load_price_book(cfg.price_file) if cfg.price_file else default_price_book()

    scenarios: dict[str, ScenarioSet] = {}
    low_flow: dict[str, float] = {}
    for seg in net.segments.values():
        series = transfer_flow(gauge, seg.drainage_area_km2)
        scenarios[seg.id] = monthly_scenarios(series, cfg.scenario_years)
        low_flow[seg.id] = q7_10(series)
    return PlanningInputs(
        net=net,
        gauge=gauge,
        impacts=impacts,
        prices=prices,
        scenarios=scenarios,
        low_flow_m3s=low_flow,
    )


def screen_step(cfg: PlanningConfig, inputs: PlanningInputs) -> list[SiteGeometry]:
    """Geometric screening of every segment against the config criteria."""
    flows = {sid: s.expected_mean_flow() for sid, s in inputs.scenarios.items()}
    return screen_sites(inputs.net, flows, cfg.screening, head_ladder=cfg.head_ladder)


def design_step(
    cfg: PlanningConfig, inputs: PlanningInputs, sites: list[SiteGeometry]
) -> list[ProjectVariant]:
    """Size one variant per site, head and scheme; drop the unbuildable ones.

    Sizing uses the unadjusted energy price: the risk adjustment is a
    portfolio-level haircut, not a different machine.
    """
    rules = cfg.design_rules()
    variants: list[ProjectVariant] = []
    for site in sorted(sites, key=lambda s: s.segment_id):
        scen = inputs.scenarios[site.segment_id]
        release = cfg.ecological_release_fraction * inputs.low_flow_m3s[site.segment_id]
        for head in site.available_heads_m:
            for scheme in cfg.schemes:
                if scheme == "diversion" and head < rules.min_diversion_head_m:
                    continue  # no room for a tunnel drop; not a candidate
                vid = f"{site.segment_id}-h{head:g}-{scheme}"
                variant = optimize_capacity(
                    site,
                    head,
                    scen,
                    cfg.energy_price_usd_per_kwh,
                    inputs.prices,
                    scheme=scheme,
                    template=cfg.template,
                    finance=cfg.finance(),
                    rules=rules,
                    ecological_release_m3s=release,
                    impacts=inputs.impacts,
                    variant_id=vid,
                    passable=scheme in cfg.passable_schemes,
                )
                if variant is not None:
                    variants.append(variant)
    return variants


def filter_step(
    cfg: PlanningConfig, net: RiverNetwork, designs: list[ProjectVariant]
) -> tuple[list[ProjectVariant], set[ConflictPair]]:
    """Ex-ante economic filter, then conflict pairs among the survivors."""
    candidates = exante_filter(
        designs,
        max_unit_cost=cfg.max_unit_cost_usd_per_kw,
        min_power_density=cfg.min_power_density_mw_per_km2,
    )
    return candidates, conflict_pairs(candidates, net)


def build_portfolio_problem(
    cfg: PlanningConfig,
    inputs: PlanningInputs,
    candidates: list[ProjectVariant],
    conflicts,
) -> PortfolioProblem:
    inflows: IncrementalInflows = incremental_inflows(inputs.net, inputs.scenarios)
    econ = EconomicTerms(
        energy_price_usd_per_kwh=cfg.effective_energy_price(),
        capacity_price_usd_per_kw_yr=cfg.capacity_price_usd_per_kw_yr,
    )
    constraints = PlanConstraints(
        metric_bounds=cfg.metric_bounds,
        min_free_flowing_km=cfg.min_free_flowing_km,
        satisfaction=cfg.satisfaction,
        forced=frozenset(cfg.forced),
        forbidden=frozenset(cfg.forbidden),
    )
    return build_problem(
        candidates,
        conflicts,
        inflows,
        inputs.net,
        econ,
        constraints,
        impacts=inputs.impacts,
    )


def optimize_step(
    cfg: PlanningConfig,
    inputs: PlanningInputs,
    candidates: list[ProjectVariant],
    conflicts,
    on_progress: Callable[[dict], None] | None = None,
) -> tuple[PortfolioProblem, SolutionPool]:
    """Assemble the portfolio problem and run the search."""
    problem = build_portfolio_problem(cfg, inputs, candidates, conflicts)
    pool = solve(problem, cfg.solver_options(on_progress=on_progress))
    return problem, pool


# Override keys accepted by what-if requests, mapped to the problem
# override vocabulary.  Keys match the config document where both exist.
OVERRIDE_KEYS = {
    "energy_price_usd_per_kwh": "energy_price",
    "capacity_price_usd_per_kw_yr": "capacity_price",
    "min_free_flowing_km": "min_free_flowing_km",
    "metric_bounds": "metric_bounds",
    "force": "force",
    "forbid": "forbid",
    "satisfaction": "satisfaction",
}


def parse_plan_overrides(doc: Mapping[str, Any]) -> dict[str, Any]:
    """Validate a raw override document into ``what_if`` keyword form."""
    unknown = set(doc) - set(OVERRIDE_KEYS)
    if unknown:
        raise ConfigError(
            f"unknown override keys: {sorted(unknown)}; expected a subset of {sorted(OVERRIDE_KEYS)}"
        )
    out: dict[str, Any] = {}
    for key, value in doc.items():
        kw = OVERRIDE_KEYS[key]
        if key == "metric_bounds" and value is not None:
            defs = []
            for item in value:
                if isinstance(item, MetricDef):
                    defs.append(item)
                    continue
                kwargs = dict(item)
                if kwargs.get("satisfaction_bounds") is not None:
                    kwargs["satisfaction_bounds"] = tuple(kwargs["satisfaction_bounds"])
                defs.append(MetricDef(**kwargs))
            value = defs
        elif key == "satisfaction" and value is not None and not isinstance(value, SatisfactionConfig):
            value = SatisfactionConfig(
                weight_mean=float(value["weight_mean"]),
                required=float(value["required"]),
                metric_ids=tuple(value["metric_ids"]),
            )
        elif key in ("force", "forbid"):
            value = tuple(value)
        elif value is not None:
            value = float(value)
        out[kw] = value
    return out


def whatif_step(
    problem: PortfolioProblem,
    baseline,
    options,
    overrides: Mapping[str, Any],
) -> WhatIfOutcome:
    """Apply overrides to a finished problem and price the change."""
    return what_if(problem, baseline=baseline, options=options, **parse_plan_overrides(overrides))
