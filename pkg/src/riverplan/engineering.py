"""Parametric project design and costing.

Takes a candidate site plus a gross head and produces a fully costed project
variant: reservoir geometry, structure quantities, a priced bill of
quantities with percentage overheads, the capital-recovery annuity, a
run-of-river energy estimate, and marginal-analysis capacity selection.

Two dam templates (concrete-gravity, earthfill) by two scheme types (dam-toe,
diversion) stand in for a full template catalogue; the costing pipeline
(quantities -> unit prices -> percentage overheads -> indirect costs) is the
part that matters downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .hydrology import ScenarioSet
from .metrics import HOUSEHOLDS, RAILWAY_M, ROAD_M, ImpactTable, contributions_for_area

__all__ = [
    "EngineeringError",
    "SCHEME_DAM_TOE",
    "SCHEME_DIVERSION",
    "TEMPLATE_GRAVITY",
    "TEMPLATE_EARTHFILL",
    "FinanceTerms",
    "DesignRules",
    "SiteGeometry",
    "ReservoirGeometry",
    "CostLine",
    "CostBreakdown",
    "UnitPriceBook",
    "ProjectVariant",
    "production_factor",
    "reservoir_geometry",
    "design_structures",
    "annuity",
    "simulate_energy",
    "expected_energy",
    "optimize_capacity",
    "default_price_book",
    "load_price_book",
    "dump_price_book",
    "dump_variants",
    "load_variants",
]

GRAVITY_M_PER_S2 = 9.81

SCHEME_DAM_TOE = "dam-toe"
SCHEME_DIVERSION = "diversion"
TEMPLATE_GRAVITY = "concrete-gravity"
TEMPLATE_EARTHFILL = "earthfill"

# Civil works unit prices, USD per unit.
CIVIL_PRICES = {
    "common_excavation": 9.0,  # m3
    "surface_rock_excavation": 24.0,  # m3
    "underground_rock_excavation": 139.0,  # m3
    "borrow_soil": 12.0,  # m3
    "quarry_rock": 34.0,  # m3
    "foundation_cleaning_earthworks": 8.0,  # m2
    "foundation_cleaning_concrete": 37.0,  # m2
    "cofferdam_removal": 10.0,  # m3
    "cofferdam_first_phase": 9.0,  # m3
    "cofferdam_second_phase": 9.0,  # m3
    "compacted_earth_fill": 8.0,  # m3
    "clay_core": 11.0,  # m3
    "rockfill": 11.0,  # m3
    "filters_and_transitions": 31.0,  # m3
    "riprap_protection": 24.0,  # m3
    "grass_protection": 15.0,  # m2
    "cement": 180.0,  # t
    "structural_concrete": 220.0,  # m3
    "mass_concrete": 120.0,  # m3, roller-compacted or mass
    "shotcrete": 300.0,  # m3
    "reinforcement_steel": 2800.0,  # t
    "penstock_steel": 8000.0,  # t
}

# Social / environmental unit prices, USD per unit.
SOCIAL_PRICES = {
    "road_relocation": 750.0,  # m
    "railway_relocation": 3000.0,  # m
    "bridge_relocation": 71500.0,  # m
    "resettlement_rural": 15000.0,  # household
    "resettlement_urban": 15000.0,  # household
}

# Percentage overheads. Within an account, "other" applies on the direct
# subtotal and "miscellaneous" on the result; indirect percentages apply on
# the built-up direct total, with their own miscellaneous on top.
PERCENTAGES = {
    "other_civil": 2.0,
    "other_social_environmental": 30.0,
    "misc_civil": 20.0,
    "misc_equipment": 20.0,
    "misc_social_environmental": 20.0,
    "misc_indirect": 10.0,
    "indirect_site_installation": 2.0,
    "indirect_site_operation": 2.0,
    "indirect_basic_engineering": 4.0,
    "indirect_special_services": 1.0,
    "indirect_environmental_studies": 1.5,
    "indirect_owner_administration": 1.5,
}

INDIRECT_KEYS = tuple(k for k in PERCENTAGES if k.startswith("indirect_"))

UNITS = {
    **{k: "m3" for k in CIVIL_PRICES},
    "foundation_cleaning_earthworks": "m2",
    "foundation_cleaning_concrete": "m2",
    "grass_protection": "m2",
    "cement": "t",
    "reinforcement_steel": "t",
    "penstock_steel": "t",
    "road_relocation": "m",
    "railway_relocation": "m",
    "bridge_relocation": "m",
    "resettlement_rural": "household",
    "resettlement_urban": "household",
    "electromechanical": "kW",
}


class EngineeringError(ValueError):
    """Design input violates a precondition."""


@dataclass(frozen=True)
class FinanceTerms:
    discount_rate: float = 0.10  # real, per year
    lifetime_yr: int = 40

    def __post_init__(self):
        if self.discount_rate <= 0:
            raise EngineeringError(f"discount rate must be > 0, got {self.discount_rate}")
        if self.lifetime_yr < 1:
            raise EngineeringError(f"lifetime must be >= 1 year, got {self.lifetime_yr}")


@dataclass(frozen=True)
class DesignRules:
    """Parametric pre-dimensioning knobs shared by all variants of a run."""

    efficiency: float = 0.9
    availability: float = 0.95
    step_mw: float = 1.0
    max_steps: int = 400
    storage_fraction: float = 0.5  # share of backwater volume usable as active storage
    diversion_weir_m: float = 8.0  # weir height of diversion schemes
    min_diversion_head_m: float = 15.0
    tunnel_length_per_head: float = 8.0  # m of headrace per m of gross head
    tunnel_section_m2: float = 6.0
    shotcrete_m3_per_m: float = 0.5
    powerhouse_concrete_m3_per_kw: float = 0.15
    penstock_t_per_kw: float = 0.015
    rebar_t_per_m3: float = 0.008  # reinforcement per m3 of structural concrete

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise EngineeringError(f"efficiency must be in (0,1], got {self.efficiency}")
        if not 0 < self.availability <= 1:
            raise EngineeringError(f"availability must be in (0,1], got {self.availability}")
        if self.step_mw <= 0:
            raise EngineeringError("capacity step must be > 0")


@dataclass(frozen=True)
class SiteGeometry:
    """A candidate dam site with the geometry the designer needs."""

    segment_id: str
    river_width_m: float
    upstream_slope: float  # longitudinal, m/m
    valley_half_width_slope: float  # lateral, m horizontal per m vertical
    foot_elevation_m: float
    available_heads_m: tuple[float, ...]
    max_head_m: float | None = None  # elevation budget to the nearest upstream site
    mean_flow_m3s: float = 0.0

    def __post_init__(self):
        if self.river_width_m <= 0:
            raise EngineeringError(f"site {self.segment_id}: river width must be > 0")
        if self.upstream_slope <= 0:
            raise EngineeringError(f"site {self.segment_id}: upstream slope must be > 0")
        for h in self.available_heads_m:
            if h <= 0:
                raise EngineeringError(f"site {self.segment_id}: head must be > 0, got {h}")
            if self.max_head_m is not None and h > self.max_head_m + 1e-9:
                raise EngineeringError(
                    f"site {self.segment_id}: head {h} m exceeds elevation budget {self.max_head_m} m"
                )


@dataclass(frozen=True)
class ReservoirGeometry:
    flooded_area_km2: float
    volume_m3: float
    backwater_length_m: float


def production_factor(head_m: float, efficiency: float) -> float:
    """kW generated per m³/s turbined at a given gross head.

    P = g·η·h with water density 1000 kg/m³ folded into the units
    (1 m³/s · 1000 kg/m³ · 9.81 m/s² · h m = 9810·η·h W).
    """
    if head_m <= 0:
        raise EngineeringError(f"head must be > 0, got {head_m}")
    if not 0 < efficiency <= 1:
        raise EngineeringError(f"efficiency must be in (0,1], got {efficiency}")
    return GRAVITY_M_PER_S2 * efficiency * head_m


def reservoir_geometry(site: SiteGeometry, head_m: float) -> ReservoirGeometry:
    """Backwater wedge geometry behind a dam of height ``head_m``.

    The water surface is level; the bed rises at the upstream slope s, so the
    wedge ends at L_b = h/s. The valley cross-section is the river bed of
    width b plus side slopes z (horizontal per vertical). Closed forms:

        depth at distance xi upstream:  h(xi) = h - s·xi
        surface width:                  W = b + 2·z·h(xi)
        plan area   = ∫ W dxi          = b·h/s + z·h²/s
        volume      = ∫ (b·h + z·h²)dxi = b·h²/(2s) + z·h³/(3s)
    """
    if head_m < 0:
        raise EngineeringError(f"head must be >= 0, got {head_m}")
    s = site.upstream_slope
    if s <= 0:
        raise EngineeringError("upstream slope must be > 0")
    b = site.river_width_m
    z = site.valley_half_width_slope
    h = head_m
    area_m2 = b * h / s + z * h**2 / s
    volume = b * h**2 / (2 * s) + z * h**3 / (3 * s)
    return ReservoirGeometry(
        flooded_area_km2=area_m2 / 1e6,
        volume_m3=volume,
        backwater_length_m=h / s,
    )


@dataclass(frozen=True)
class CostLine:
    account: str  # civil | social_environmental | equipment | indirect
    item: str
    quantity: float
    unit: str
    unit_price: float  # USD per unit; for % lines the base amount in USD
    cost: float

    def __post_init__(self):
        if abs(self.cost - self.quantity * self.unit_price) > 1e-6 * max(1.0, abs(self.cost)):
            raise EngineeringError(f"cost line {self.item}: cost != quantity x unit price")


@dataclass(frozen=True)
class CostBreakdown:
    lines: tuple[CostLine, ...]

    def total(self) -> float:
        return float(sum(ln.cost for ln in self.lines))

    def account_total(self, account: str) -> float:
        return float(sum(ln.cost for ln in self.lines if ln.account == account))

    def direct_total(self) -> float:
        return self.total() - self.account_total("indirect")


@dataclass(frozen=True)
class UnitPriceBook:
    civil: dict[str, float] = field(default_factory=lambda: dict(CIVIL_PRICES))
    social: dict[str, float] = field(default_factory=lambda: dict(SOCIAL_PRICES))
    percentages: dict[str, float] = field(default_factory=lambda: dict(PERCENTAGES))
    k_em_usd_per_kw: float = 1200.0
    head_exponent: float = 0.3

    def __post_init__(self):
        for table in (self.civil, self.social):
            for item, price in table.items():
                if price < 0:
                    raise EngineeringError(f"negative unit price for {item}")
        for name, pct in self.percentages.items():
            if not 0 <= pct <= 100:
                raise EngineeringError(f"percentage {name} must be in [0,100], got {pct}")
        if self.k_em_usd_per_kw < 0:
            raise EngineeringError("electromechanical coefficient must be >= 0")

    def civil_price(self, item: str) -> float:
        if item not in self.civil:
            raise EngineeringError(f"missing civil unit price: {item}")
        return self.civil[item]

    def social_price(self, item: str) -> float:
        if item not in self.social:
            raise EngineeringError(f"missing social unit price: {item}")
        return self.social[item]

    def percent(self, name: str) -> float:
        if name not in self.percentages:
            raise EngineeringError(f"missing percentage entry: {name}")
        return self.percentages[name]


def default_price_book() -> UnitPriceBook:
    return UnitPriceBook()


def _quantities(
    site: SiteGeometry,
    head_m: float,
    scheme: str,
    template: str,
    installed_kw: float,
    rules: DesignRules,
) -> list[tuple[str, str, float]]:
    """Structure quantity takeoff: (account, item, quantity) triples.

    Every quantity scales with head or capacity so a degenerate zero design
    prices to zero.
    """
    if scheme not in (SCHEME_DAM_TOE, SCHEME_DIVERSION):
        raise EngineeringError(f"unknown scheme {scheme!r}")
    if template not in (TEMPLATE_GRAVITY, TEMPLATE_EARTHFILL):
        raise EngineeringError(f"unknown template {template!r}")
    if scheme == SCHEME_DIVERSION and 0 < head_m < rules.min_diversion_head_m:
        raise EngineeringError(
            f"diversion scheme needs head >= {rules.min_diversion_head_m} m, got {head_m}"
        )
    # Diversion schemes impound only a low weir; the head is developed in the
    # headrace. Dam-toe schemes impound the full head.
    dam_h = head_m if scheme == SCHEME_DAM_TOE else min(head_m, rules.diversion_weir_m)
    crest = site.river_width_m + 2.0 * site.valley_half_width_slope * dam_h

    q: list[tuple[str, str, float]] = []
    structural_concrete = rules.powerhouse_concrete_m3_per_kw * installed_kw

    if template == TEMPLATE_GRAVITY:
        section = 0.8 * dam_h**2  # triangular profile, base 1.6·H
        body = section * crest
        footprint = 1.6 * dam_h * crest
        q.append(("civil", "mass_concrete", body))
        structural_concrete += 0.05 * body  # spillway crest, intake
        q.append(("civil", "common_excavation", footprint * 1.0))
        q.append(("civil", "surface_rock_excavation", footprint * 0.5))
        q.append(("civil", "foundation_cleaning_concrete", footprint))
    else:
        section = (6.0 + 2.5 * dam_h) * dam_h  # 6 m crest, 2.5H:1V faces
        body = section * crest
        footprint = (6.0 + 5.0 * dam_h) * crest
        q.append(("civil", "compacted_earth_fill", 0.75 * body))
        q.append(("civil", "clay_core", 0.10 * body))
        q.append(("civil", "filters_and_transitions", 0.07 * body))
        q.append(("civil", "riprap_protection", 0.08 * body))
        q.append(("civil", "grass_protection", crest * dam_h * math.sqrt(1 + 2.5**2)))
        structural_concrete += 0.02 * body  # concrete spillway
        q.append(("civil", "common_excavation", footprint * 1.0))
        q.append(("civil", "foundation_cleaning_earthworks", footprint))

    q.append(("civil", "cofferdam_first_phase", 0.04 * body))
    q.append(("civil", "cofferdam_second_phase", 0.02 * body))
    q.append(("civil", "cofferdam_removal", 0.06 * body))

    if scheme == SCHEME_DIVERSION:
        tunnel = rules.tunnel_length_per_head * head_m
        q.append(("civil", "underground_rock_excavation", rules.tunnel_section_m2 * tunnel))
        q.append(("civil", "shotcrete", rules.shotcrete_m3_per_m * tunnel))
        q.append(("civil", "penstock_steel", rules.penstock_t_per_kw * installed_kw))

    q.append(("civil", "structural_concrete", structural_concrete))
    q.append(("civil", "reinforcement_steel", rules.rebar_t_per_m3 * structural_concrete))
    return [(acct, item, qty) for acct, item, qty in q if qty > 0]


def design_structures(
    site: SiteGeometry,
    head_m: float,
    scheme: str,
    template: str,
    installed_kw: float,
    prices: UnitPriceBook,
    rules: DesignRules = DesignRules(),
    social_quantities: Mapping[str, float] | None = None,
) -> CostBreakdown:
    """Quantity takeoff priced into a full capital-cost breakdown.

    ``social_quantities`` carries the metric contributions of the flooded
    area (households, road_m, railway_m). Percentage overheads: within each
    account, "other costs" on the direct subtotal, then "miscellaneous items"
    on the result; indirect percentages on the built-up direct total, then
    their own miscellaneous line.
    """
    if installed_kw < 0:
        raise EngineeringError(f"installed capacity must be >= 0, got {installed_kw}")
    lines: list[CostLine] = []

    def add(account, item, qty, unit, price):
        lines.append(CostLine(account, item, qty, unit, price, qty * price))

    for account, item, qty in _quantities(site, head_m, scheme, template, installed_kw, rules):
        add(account, item, qty, UNITS[item], prices.civil_price(item))
    civil_direct = sum(ln.cost for ln in lines if ln.account == "civil")
    civil_built = _apply_account_overheads(lines, "civil", civil_direct, prices, "other_civil", "misc_civil")

    social = dict(social_quantities or {})
    social_built = 0.0
    if any(v > 0 for v in social.values()):
        if social.get(HOUSEHOLDS, 0) > 0:
            add("social_environmental", "resettlement_rural", social[HOUSEHOLDS], "household",
                prices.social_price("resettlement_rural"))
        if social.get(ROAD_M, 0) > 0:
            add("social_environmental", "road_relocation", social[ROAD_M], "m",
                prices.social_price("road_relocation"))
        if social.get(RAILWAY_M, 0) > 0:
            add("social_environmental", "railway_relocation", social[RAILWAY_M], "m",
                prices.social_price("railway_relocation"))
        social_direct = sum(ln.cost for ln in lines if ln.account == "social_environmental")
        social_built = _apply_account_overheads(
            lines, "social_environmental", social_direct,
            prices, "other_social_environmental", "misc_social_environmental",
        )

    equip_built = 0.0
    if installed_kw > 0:
        if head_m <= 0:
            raise EngineeringError("positive capacity needs a positive head")
        em_price = prices.k_em_usd_per_kw / head_m**prices.head_exponent
        add("equipment", "electromechanical", installed_kw, "kW", em_price)
        equip_direct = installed_kw * em_price
        equip_built = _apply_account_overheads(lines, "equipment", equip_direct, prices, None, "misc_equipment")

    direct_total = civil_built + social_built + equip_built
    if direct_total > 0:
        indirect = 0.0
        for key in INDIRECT_KEYS:
            pct = prices.percent(key)
            if pct > 0:
                add("indirect", key, pct / 100.0, "%", direct_total, )
                indirect += direct_total * pct / 100.0
        misc = prices.percent("misc_indirect")
        if misc > 0 and indirect > 0:
            add("indirect", "misc_indirect", misc / 100.0, "%", indirect)
    return CostBreakdown(lines=tuple(lines))


def _apply_account_overheads(lines, account, direct, prices, other_key, misc_key) -> float:
    """Append the account's % lines; returns the built-up account total."""
    built = direct
    if direct <= 0:
        return built
    if other_key is not None:
        pct = prices.percent(other_key)
        if pct > 0:
            lines.append(CostLine(account, other_key, pct / 100.0, "%", built, built * pct / 100.0))
            built += built * pct / 100.0
    pct = prices.percent(misc_key)
    if pct > 0:
        lines.append(CostLine(account, misc_key, pct / 100.0, "%", built, built * pct / 100.0))
        built += built * pct / 100.0
    return built


def annuity(capex: float, rate: float, life_yr: int) -> float:
    """Constant yearly payment equivalent to ``capex`` over ``life_yr`` years.

    capex · r / (1 - (1+r)^-n), the capital recovery factor.
    """
    if rate <= 0:
        raise EngineeringError(f"rate must be > 0, got {rate}")
    if life_yr < 1:
        raise EngineeringError(f"life must be >= 1 year, got {life_yr}")
    if capex < 0:
        raise EngineeringError(f"capex must be >= 0, got {capex}")
    return capex * rate / (1.0 - (1.0 + rate) ** (-life_yr))


@dataclass(frozen=True)
class ProjectVariant:
    """One fully designed and costed candidate project."""

    id: str
    segment_id: str
    scheme: str
    template: str
    gross_head_m: float
    foot_elevation_m: float
    production_factor_kw_per_m3s: float
    installed_kw: float
    max_turbine_flow_m3s: float
    max_storage_m3: float
    flooded_area_km2: float
    capex_usd: float
    breakdown: CostBreakdown
    annuity_usd_per_yr: float
    annual_energy_kwh: float
    ecological_release_m3s: float = 0.0
    passable: bool = False

    def __post_init__(self):
        closure = self.production_factor_kw_per_m3s * self.max_turbine_flow_m3s
        if abs(closure - self.installed_kw) > 1e-6 * max(1.0, self.installed_kw):
            raise EngineeringError(
                f"variant {self.id}: capacity {self.installed_kw} != rho x max flow {closure}"
            )
        total = self.breakdown.total()
        if abs(total - self.capex_usd) > 1e-6 * max(1.0, self.capex_usd):
            raise EngineeringError(f"variant {self.id}: breakdown {total} != capex {self.capex_usd}")
        if self.flooded_area_km2 < 0:
            raise EngineeringError(f"variant {self.id}: negative flooded area")
        for name in ("capex_usd", "annuity_usd_per_yr", "annual_energy_kwh", "max_storage_m3"):
            if getattr(self, name) < 0:
                raise EngineeringError(f"variant {self.id}: negative {name}")


def expected_energy(
    max_flow_m3s: float,
    rho: float,
    scenarios: ScenarioSet,
    ecological_release_m3s: float = 0.0,
    availability: float = 0.95,
) -> float:
    """Probability-weighted yearly energy of a run-of-river dispatch, kWh.

    Per month: turbine min(max flow, inflow less the ecological release);
    storage is ignored, so this undervalues plants with usable storage.
    """
    d = np.asarray(scenarios.month_durations_h)
    q = scenarios.flow_matrix()
    usable = np.minimum(max_flow_m3s, np.maximum(0.0, q - ecological_release_m3s))
    per_scenario = (usable * d).sum(axis=1) * rho
    return availability * float(np.dot(per_scenario, scenarios.probabilities()))


def simulate_energy(variant: ProjectVariant, scenarios: ScenarioSet, availability: float = 0.95) -> float:
    return expected_energy(
        variant.max_turbine_flow_m3s,
        variant.production_factor_kw_per_m3s,
        scenarios,
        variant.ecological_release_m3s,
        availability,
    )


def optimize_capacity(
    site: SiteGeometry,
    head_m: float,
    scenarios: ScenarioSet,
    energy_price: float,
    prices: UnitPriceBook,
    scheme: str = SCHEME_DAM_TOE,
    template: str = TEMPLATE_GRAVITY,
    finance: FinanceTerms = FinanceTerms(),
    rules: DesignRules = DesignRules(),
    ecological_release_m3s: float = 0.0,
    impacts: ImpactTable | None = None,
    variant_id: str | None = None,
    passable: bool = False,
) -> ProjectVariant | None:
    """Marginal-analysis capacity selection; None means the site is uneconomic.

    Walks the capacity grid in ``rules.step_mw`` steps. A step is kept while
    the extra yearly energy value covers the extra annuitized cost, ties
    keeping the larger capacity. The zero-capacity dam is the cost baseline
    (sunk for the marginal rule), so "uneconomic" means not even the first
    unit of equipment pays for itself; sites whose dam makes the total
    uneconomic are left to the unit-cost filter downstream. The returned
    variant carries the full capex, dam included. Energy is valued by the
    run-of-river estimator.
    """
    if energy_price < 0:
        raise EngineeringError(f"energy price must be >= 0, got {energy_price}")
    rho = production_factor(head_m, rules.efficiency)
    dam_h = head_m if scheme == SCHEME_DAM_TOE else min(head_m, rules.diversion_weir_m)
    geom = reservoir_geometry(site, dam_h)
    eco = ecological_release_m3s if scheme == SCHEME_DIVERSION else 0.0

    social_q: dict[str, float] = {}
    if impacts is not None:
        contrib = contributions_for_area(site.segment_id, geom.flooded_area_km2, impacts)
        social_q = {k: contrib[k] for k in (HOUSEHOLDS, ROAD_M, RAILWAY_M)}

    def breakdown_at(kw: float) -> CostBreakdown:
        return design_structures(site, head_m, scheme, template, kw, prices, rules, social_q)

    best_kw = None
    best_bd = None
    prev_annuity = annuity(breakdown_at(0.0).total(), finance.discount_rate, finance.lifetime_yr)
    prev_energy = 0.0
    for step in range(1, rules.max_steps + 1):
        kw = step * rules.step_mw * 1000.0
        bd = breakdown_at(kw)
        ann = annuity(bd.total(), finance.discount_rate, finance.lifetime_yr)
        energy = expected_energy(kw / rho, rho, scenarios, eco, rules.availability)
        marginal_value = energy_price * (energy - prev_energy)
        marginal_cost = ann - prev_annuity
        if marginal_value < marginal_cost:
            break
        best_kw, best_bd = kw, bd
        prev_annuity, prev_energy = ann, energy
    if best_kw is None:
        return None

    if variant_id is None:
        s = "dt" if scheme == SCHEME_DAM_TOE else "dv"
        t = "cg" if template == TEMPLATE_GRAVITY else "ef"
        variant_id = f"{site.segment_id}-h{head_m:g}-{s}-{t}"
    capex = best_bd.total()
    return ProjectVariant(
        id=variant_id,
        segment_id=site.segment_id,
        scheme=scheme,
        template=template,
        gross_head_m=head_m,
        foot_elevation_m=site.foot_elevation_m,
        production_factor_kw_per_m3s=rho,
        installed_kw=best_kw,
        max_turbine_flow_m3s=best_kw / rho,
        max_storage_m3=rules.storage_fraction * geom.volume_m3 if scheme == SCHEME_DAM_TOE else 0.0,
        flooded_area_km2=geom.flooded_area_km2,
        capex_usd=capex,
        breakdown=best_bd,
        annuity_usd_per_yr=annuity(capex, finance.discount_rate, finance.lifetime_yr),
        annual_energy_kwh=prev_energy,
        ecological_release_m3s=eco,
        passable=passable,
    )


# ---------------------------------------------------------------------------
# Serialization

def dump_price_book(book: UnitPriceBook) -> str:
    out = ["[civil_works]", "item,unit,price_usd"]
    for item in sorted(book.civil):
        out.append(f"{item},{UNITS.get(item, '-')},{book.civil[item]!r}")
    out += ["", "[social_environmental]", "item,unit,price_usd"]
    for item in sorted(book.social):
        out.append(f"{item},{UNITS.get(item, '-')},{book.social[item]!r}")
    out += ["", "[percentages]", "name,percent"]
    for name in sorted(book.percentages):
        out.append(f"{name},{book.percentages[name]!r}")
    out += ["", "[electromechanical]"]
    out.append(f"k_em_usd_per_kw,{book.k_em_usd_per_kw!r}")
    out.append(f"head_exponent,{book.head_exponent!r}")
    return "\n".join(out) + "\n"


def load_price_book(source) -> UnitPriceBook:
    text = _read_text(source)
    section = None
    civil: dict[str, float] = {}
    social: dict[str, float] = {}
    percentages: dict[str, float] = {}
    em: dict[str, float] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        parts = [p.strip() for p in line.split(",")]
        if parts[0] in ("item", "name"):
            continue
        if section == "civil_works":
            civil[parts[0]] = float(parts[2])
        elif section == "social_environmental":
            social[parts[0]] = float(parts[2])
        elif section == "percentages":
            percentages[parts[0]] = float(parts[1])
        elif section == "electromechanical":
            em[parts[0]] = float(parts[1])
        else:
            raise EngineeringError(f"price book line outside a known section: {line!r}")
    return UnitPriceBook(
        civil=civil,
        social=social,
        percentages=percentages,
        k_em_usd_per_kw=em.get("k_em_usd_per_kw", 1200.0),
        head_exponent=em.get("head_exponent", 0.3),
    )


def _variant_to_dict(v: ProjectVariant) -> dict:
    return {
        "id": v.id,
        "segment_id": v.segment_id,
        "scheme": v.scheme,
        "template": v.template,
        "gross_head_m": v.gross_head_m,
        "foot_elevation_m": v.foot_elevation_m,
        "production_factor_kw_per_m3s": v.production_factor_kw_per_m3s,
        "installed_kw": v.installed_kw,
        "max_turbine_flow_m3s": v.max_turbine_flow_m3s,
        "max_storage_m3": v.max_storage_m3,
        "flooded_area_km2": v.flooded_area_km2,
        "capex_usd": v.capex_usd,
        "annuity_usd_per_yr": v.annuity_usd_per_yr,
        "annual_energy_kwh": v.annual_energy_kwh,
        "ecological_release_m3s": v.ecological_release_m3s,
        "passable": v.passable,
        "breakdown": [
            {
                "account": ln.account,
                "item": ln.item,
                "quantity": ln.quantity,
                "unit": ln.unit,
                "unit_price": ln.unit_price,
                "cost": ln.cost,
            }
            for ln in v.breakdown.lines
        ],
    }


def _variant_from_dict(d: dict) -> ProjectVariant:
    breakdown = CostBreakdown(
        lines=tuple(
            CostLine(ln["account"], ln["item"], ln["quantity"], ln["unit"], ln["unit_price"], ln["cost"])
            for ln in d["breakdown"]
        )
    )
    return ProjectVariant(
        id=d["id"],
        segment_id=d["segment_id"],
        scheme=d["scheme"],
        template=d["template"],
        gross_head_m=d["gross_head_m"],
        foot_elevation_m=d["foot_elevation_m"],
        production_factor_kw_per_m3s=d["production_factor_kw_per_m3s"],
        installed_kw=d["installed_kw"],
        max_turbine_flow_m3s=d["max_turbine_flow_m3s"],
        max_storage_m3=d["max_storage_m3"],
        flooded_area_km2=d["flooded_area_km2"],
        capex_usd=d["capex_usd"],
        breakdown=breakdown,
        annuity_usd_per_yr=d["annuity_usd_per_yr"],
        annual_energy_kwh=d["annual_energy_kwh"],
        ecological_release_m3s=d.get("ecological_release_m3s", 0.0),
        passable=d.get("passable", False),
    )


def dump_variants(variants) -> str:
    return json.dumps({"variants": [_variant_to_dict(v) for v in variants]}, indent=2, sort_keys=True)


def load_variants(source) -> list[ProjectVariant]:
    doc = json.loads(_read_text(source))
    return [_variant_from_dict(d) for d in doc["variants"]]


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, Path):
        return source.read_text()
    text = str(source)
    if "\n" not in text and "{" not in text:
        return Path(text).read_text()
    return text
