import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riverplan.engineering import (
    SCHEME_DAM_TOE,
    SCHEME_DIVERSION,
    TEMPLATE_EARTHFILL,
    TEMPLATE_GRAVITY,
    CostBreakdown,
    DesignRules,
    EngineeringError,
    FinanceTerms,
    ProjectVariant,
    SiteGeometry,
    UnitPriceBook,
    annuity,
    default_price_book,
    design_structures,
    dump_price_book,
    dump_variants,
    expected_energy,
    load_price_book,
    load_variants,
    optimize_capacity,
    production_factor,
    reservoir_geometry,
    simulate_energy,
)
from riverplan.hydrology import Scenario, ScenarioSet
from riverplan.metrics import HOUSEHOLDS, RAILWAY_M, ROAD_M, ImpactDensities, ImpactTable


def site(b=40.0, slope=0.005, z=2.0, heads=(30.0,), max_head=None, sid="S1", foot=100.0):
    return SiteGeometry(
        segment_id=sid,
        river_width_m=b,
        upstream_slope=slope,
        valley_half_width_slope=z,
        foot_elevation_m=foot,
        available_heads_m=tuple(heads),
        max_head_m=max_head,
    )


def flat_scenarios(flow, months_h=730.0, label="y"):
    return ScenarioSet(
        [Scenario(label, 1.0, tuple([float(flow)] * 12))],
        month_durations_h=tuple([months_h] * 12),
    )


class TestProductionFactor:
    def test_unit_efficiency(self):
        assert production_factor(100.0, 1.0) == pytest.approx(981.0)

    def test_typical(self):
        assert production_factor(30.0, 0.9) == pytest.approx(264.87)

    def test_zero_head_rejected(self):
        with pytest.raises(EngineeringError):
            production_factor(0.0, 0.9)

    def test_bad_efficiency_rejected(self):
        with pytest.raises(EngineeringError):
            production_factor(10.0, 1.5)


class TestReservoirGeometry:
    def test_backwater_length(self):
        g = reservoir_geometry(site(slope=0.01), 10.0)
        assert g.backwater_length_m == pytest.approx(1000.0)

    def test_vanishes_with_head(self):
        g = reservoir_geometry(site(), 0.0)
        assert g.flooded_area_km2 == 0.0
        assert g.volume_m3 == 0.0

    def test_against_numeric_integration(self):
        b, z, s, h = 50.0, 2.0, 0.01, 10.0
        g = reservoir_geometry(site(b=b, slope=s, z=z), h)
        xi = np.linspace(0.0, h / s, 400_001)
        depth = h - s * xi
        area = np.trapezoid(b + 2 * z * depth, xi)
        volume = np.trapezoid(b * depth + z * depth**2, xi)
        assert g.flooded_area_km2 * 1e6 == pytest.approx(area, rel=1e-9)
        assert g.volume_m3 == pytest.approx(volume, rel=1e-9)

    @given(
        b=st.floats(min_value=1.0, max_value=500.0),
        z=st.floats(min_value=0.0, max_value=10.0),
        s=st.floats(min_value=1e-4, max_value=0.05),
        h=st.floats(min_value=0.5, max_value=120.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_closed_form_matches_oracle(self, b, z, s, h):
        g = reservoir_geometry(site(b=b, slope=s, z=z), h)
        xi = np.linspace(0.0, h / s, 20_001)
        depth = h - s * xi
        assert g.flooded_area_km2 * 1e6 == pytest.approx(np.trapezoid(b + 2 * z * depth, xi), rel=1e-6)
        assert g.volume_m3 == pytest.approx(np.trapezoid(b * depth + z * depth**2, xi), rel=1e-4)


class TestDesignStructures:
    def test_mass_concrete_unit_price(self):
        bd = design_structures(site(), 30.0, SCHEME_DAM_TOE, TEMPLATE_GRAVITY, 0.0, default_price_book())
        line = next(ln for ln in bd.lines if ln.item == "mass_concrete")
        assert line.unit_price == 120.0
        assert line.cost == pytest.approx(line.quantity * 120.0)

    def test_rural_resettlement_direct_cost(self):
        bd = design_structures(
            site(), 30.0, SCHEME_DAM_TOE, TEMPLATE_GRAVITY, 0.0, default_price_book(),
            social_quantities={HOUSEHOLDS: 10.0},
        )
        line = next(ln for ln in bd.lines if ln.item == "resettlement_rural")
        assert line.cost == pytest.approx(150_000.0)

    def test_degenerate_zero_design(self):
        bd = design_structures(site(), 0.0, SCHEME_DAM_TOE, TEMPLATE_GRAVITY, 0.0, default_price_book())
        assert bd.total() == 0.0
        assert bd.lines == ()

    def test_overhead_composition(self):
        # Rebuild the documented percentage pipeline by hand and compare.
        prices = default_price_book()
        social = {HOUSEHOLDS: 10.0, ROAD_M: 100.0, RAILWAY_M: 0.0}
        bd = design_structures(site(), 30.0, SCHEME_DAM_TOE, TEMPLATE_GRAVITY, 25_000.0, prices, social_quantities=social)
        civil_direct = sum(ln.cost for ln in bd.lines if ln.account == "civil" and ln.unit != "%")
        civil_built = civil_direct * 1.02 * 1.20
        social_direct = 10.0 * 15_000.0 + 100.0 * 750.0
        social_built = social_direct * 1.30 * 1.20
        equip_direct = 25_000.0 * 1200.0 / 30.0**0.3
        equip_built = equip_direct * 1.20
        direct = civil_built + social_built + equip_built
        capex = direct + direct * 0.12 * 1.10
        assert bd.total() == pytest.approx(capex, rel=1e-9)
        assert bd.direct_total() == pytest.approx(direct, rel=1e-9)

    def test_breakdown_lines_sum_to_total(self):
        bd = design_structures(site(), 40.0, SCHEME_DIVERSION, TEMPLATE_GRAVITY, 10_000.0, default_price_book())
        assert sum(ln.quantity * ln.unit_price for ln in bd.lines) == pytest.approx(bd.total(), rel=1e-12)

    def test_capex_monotone_in_head(self):
        prices = default_price_book()
        totals = [
            design_structures(site(), h, SCHEME_DAM_TOE, TEMPLATE_GRAVITY, 5_000.0, prices).total()
            for h in (10.0, 20.0, 40.0)
        ]
        assert totals[0] < totals[1] < totals[2]

    def test_earthfill_items(self):
        bd = design_structures(site(), 20.0, SCHEME_DAM_TOE, TEMPLATE_EARTHFILL, 0.0, default_price_book())
        items = {ln.item for ln in bd.lines}
        assert {"compacted_earth_fill", "clay_core", "filters_and_transitions", "grass_protection"} <= items
        assert "mass_concrete" not in items

    def test_diversion_items(self):
        bd = design_structures(site(), 40.0, SCHEME_DIVERSION, TEMPLATE_GRAVITY, 8_000.0, default_price_book())
        items = {ln.item for ln in bd.lines}
        assert {"underground_rock_excavation", "penstock_steel", "shotcrete"} <= items

    def test_diversion_low_head_rejected(self):
        with pytest.raises(EngineeringError, match="diversion"):
            design_structures(site(), 10.0, SCHEME_DIVERSION, TEMPLATE_GRAVITY, 1_000.0, default_price_book())

    def test_unknown_template_rejected(self):
        with pytest.raises(EngineeringError, match="template"):
            design_structures(site(), 10.0, SCHEME_DAM_TOE, "arch", 0.0, default_price_book())

    def test_missing_price_entry_rejected(self):
        book = default_price_book()
        civil = dict(book.civil)
        del civil["mass_concrete"]
        broken = UnitPriceBook(civil=civil, social=book.social, percentages=book.percentages)
        with pytest.raises(EngineeringError, match="mass_concrete"):
            design_structures(site(), 30.0, SCHEME_DAM_TOE, TEMPLATE_GRAVITY, 0.0, broken)


class TestAnnuity:
    def test_reference_value(self):
        assert annuity(1.0, 0.10, 40) == pytest.approx(0.1022594, abs=1e-6)

    def test_single_year(self):
        assert annuity(100.0, 0.10, 1) == pytest.approx(110.0)

    def test_perpetuity_limit(self):
        assert annuity(1.0, 0.10, 10_000) == pytest.approx(0.10, abs=1e-9)

    def test_domain(self):
        with pytest.raises(EngineeringError):
            annuity(1.0, 0.0, 40)
        with pytest.raises(EngineeringError):
            annuity(1.0, 0.1, 0)

    @given(
        r1=st.floats(min_value=0.01, max_value=0.3),
        dr=st.floats(min_value=0.001, max_value=0.2),
        life=st.integers(min_value=1, max_value=100),
    )
    @settings(max_examples=50, deadline=None)
    def test_increasing_in_rate(self, r1, dr, life):
        assert annuity(1.0, r1 + dr, life) > annuity(1.0, r1, life)

    @given(
        rate=st.floats(min_value=0.01, max_value=0.3),
        life=st.integers(min_value=1, max_value=99),
    )
    @settings(max_examples=50, deadline=None)
    def test_decreasing_in_life(self, rate, life):
        assert annuity(1.0, rate, life + 1) < annuity(1.0, rate, life)


def bare_variant(rho=100.0, max_flow=30.0, eco=0.0):
    return ProjectVariant(
        id="v", segment_id="S1", scheme=SCHEME_DAM_TOE, template=TEMPLATE_GRAVITY,
        gross_head_m=10.0, foot_elevation_m=100.0,
        production_factor_kw_per_m3s=rho, installed_kw=rho * max_flow,
        max_turbine_flow_m3s=max_flow, max_storage_m3=0.0, flooded_area_km2=0.0,
        capex_usd=0.0, breakdown=CostBreakdown(lines=()), annuity_usd_per_yr=0.0,
        annual_energy_kwh=0.0, ecological_release_m3s=eco,
    )


class TestSimulateEnergy:
    def test_arithmetic_reference(self):
        e = simulate_energy(bare_variant(), flat_scenarios(50.0), availability=0.95)
        assert e == pytest.approx(0.95 * 12 * 730 * 100 * 30)
        assert e == pytest.approx(24_966_000.0)

    def test_zero_capacity(self):
        assert simulate_energy(bare_variant(max_flow=0.0), flat_scenarios(50.0)) == 0.0

    def test_ecological_release_exhausts_flow(self):
        assert simulate_energy(bare_variant(eco=60.0), flat_scenarios(50.0)) == 0.0

    def test_concave_nondecreasing_in_capacity(self):
        ss = ScenarioSet(
            [
                Scenario("wet", 0.4, tuple(80.0 + 10 * math.sin(m) for m in range(12))),
                Scenario("dry", 0.6, tuple(30.0 + 5 * math.cos(m) for m in range(12))),
            ]
        )
        grid = [expected_energy(u, 200.0, ss) for u in np.linspace(0, 120, 61)]
        diffs = np.diff(grid)
        assert (diffs >= -1e-9).all()
        assert (np.diff(diffs) <= 1e-6).all()

    def test_probability_weighting(self):
        ss = ScenarioSet(
            [
                Scenario("a", 0.25, tuple([40.0] * 12)),
                Scenario("b", 0.75, tuple([80.0] * 12)),
            ],
            month_durations_h=tuple([730.0] * 12),
        )
        e = expected_energy(100.0, 10.0, ss, availability=1.0)
        assert e == pytest.approx((0.25 * 40 + 0.75 * 80) * 730 * 12 * 10)


class TestOptimizeCapacity:
    def test_zero_price_uneconomic(self):
        v = optimize_capacity(site(), 30.0, flat_scenarios(100.0), 0.0, default_price_book())
        assert v is None

    def test_flat_flow_saturates_at_river_capacity(self):
        # rho = 250, flat 100 m3/s: every MW up to 25 MW is fully usable, the
        # 26th adds nothing and is dropped.
        rules = DesignRules(efficiency=250.0 / (9.81 * 50.0))
        v = optimize_capacity(
            site(b=5.0, z=0.5, slope=0.02), 50.0, flat_scenarios(100.0), 0.25,
            default_price_book(), rules=rules,
        )
        assert v is not None
        assert v.installed_kw == 25_000.0
        assert v.max_turbine_flow_m3s == pytest.approx(100.0, rel=1e-9)

    def test_price_raise_never_shrinks_capacity(self):
        ss = ScenarioSet(
            [Scenario("y", 1.0, (120, 100, 80, 60, 40, 30, 25, 30, 45, 70, 95, 115))]
        )
        lo = optimize_capacity(site(), 30.0, ss, 0.08, default_price_book())
        hi = optimize_capacity(site(), 30.0, ss, 0.16, default_price_book())
        assert hi is not None
        if lo is not None:
            assert hi.installed_kw >= lo.installed_kw

    def test_variant_is_consistent(self):
        v = optimize_capacity(site(), 30.0, flat_scenarios(100.0), 0.10, default_price_book())
        assert v is not None
        assert v.installed_kw == pytest.approx(
            v.production_factor_kw_per_m3s * v.max_turbine_flow_m3s
        )
        assert v.capex_usd == pytest.approx(v.breakdown.total())
        assert v.annuity_usd_per_yr == pytest.approx(annuity(v.capex_usd, 0.10, 40))
        assert v.max_storage_m3 > 0  # dam-toe keeps part of the backwater volume

    def test_diversion_carries_ecological_release(self):
        v = optimize_capacity(
            site(), 40.0, flat_scenarios(100.0), 0.10, default_price_book(),
            scheme=SCHEME_DIVERSION, ecological_release_m3s=5.0,
        )
        assert v is not None
        assert v.ecological_release_m3s == 5.0
        assert v.max_storage_m3 == 0.0

    def test_dam_toe_ignores_ecological_release(self):
        v = optimize_capacity(
            site(), 30.0, flat_scenarios(100.0), 0.10, default_price_book(),
            scheme=SCHEME_DAM_TOE, ecological_release_m3s=5.0,
        )
        assert v is not None
        assert v.ecological_release_m3s == 0.0

    def test_social_costs_enter_capex(self):
        impacts = ImpactTable(rows={"S1": ImpactDensities(200.0, 0.0, 0.0, 0.0, 0.0)})
        plain = optimize_capacity(site(), 30.0, flat_scenarios(100.0), 0.10, default_price_book())
        loaded = optimize_capacity(
            site(), 30.0, flat_scenarios(100.0), 0.10, default_price_book(), impacts=impacts
        )
        assert plain is not None and loaded is not None
        assert loaded.capex_usd > plain.capex_usd


class TestSiteGeometryValidation:
    def test_head_budget_enforced(self):
        with pytest.raises(EngineeringError, match="budget"):
            site(heads=(30.0,), max_head=20.0)

    def test_nonpositive_width_rejected(self):
        with pytest.raises(EngineeringError, match="width"):
            site(b=0.0)


class TestSerialization:
    def test_price_book_round_trip(self):
        book = default_price_book()
        again = load_price_book(dump_price_book(book))
        assert again == book

    def test_variant_round_trip(self):
        v = optimize_capacity(site(), 30.0, flat_scenarios(100.0), 0.10, default_price_book())
        assert v is not None
        [again] = load_variants(dump_variants([v]))
        assert again == v
