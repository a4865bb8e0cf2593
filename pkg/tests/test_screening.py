"""Tests for site screening, ex-ante filters, and conflict detection."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riverplan.basin import RiverNetwork, Segment, synth_basin
from riverplan.engineering import CostBreakdown, CostLine, ProjectVariant
from riverplan.screening import (
    ConflictPair,
    ScreeningCriteria,
    ScreeningError,
    conflict_pairs,
    exante_filter,
    screen_sites,
)


def seg(sid, down, foot, length=10.0, slope=0.01, area=100.0, half=2.0):
    return Segment(
        id=sid,
        downstream_id=down,
        length_km=length,
        foot_elevation_m=foot,
        drainage_area_km2=area,
        mean_slope=slope,
        valley_half_width_slope=half,
    )


def chain(*feet, slope=0.01, length=10.0, area_step=50.0):
    """Linear network; feet listed mouth-first."""
    segs = []
    n = len(feet)
    for idx, foot in enumerate(feet):
        down = None if idx == 0 else f"C{idx - 1}"
        segs.append(
            seg(f"C{idx}", down, foot, length=length, slope=slope, area=100.0 + area_step * (n - idx))
        )
    return RiverNetwork(segs)


def fake_variant(vid, segment, kw=10_000.0, capex=20_000_000.0, flooded=1.0, head=20.0, foot=100.0):
    """Minimal consistent variant for filter/conflict tests."""
    lines = ()
    if capex > 0:
        lines = (CostLine("civil", "lump", 1.0, "lump", capex, capex),)
    return ProjectVariant(
        id=vid,
        segment_id=segment,
        scheme="dam-toe",
        template="concrete-gravity",
        gross_head_m=head,
        foot_elevation_m=foot,
        production_factor_kw_per_m3s=float(kw),
        installed_kw=float(kw),
        max_turbine_flow_m3s=1.0,
        max_storage_m3=0.0,
        flooded_area_km2=flooded,
        capex_usd=capex,
        breakdown=CostBreakdown(lines),
        annuity_usd_per_yr=capex * 0.1,
        annual_energy_kwh=kw * 4000.0,
    )


class TestScreenSites:
    def test_zero_criteria_yield_every_segment(self):
        net = synth_basin(depth=3, branching=2, seed=7)
        flows = {sid: 5.0 for sid in net.ids()}
        sites = screen_sites(net, flows, ScreeningCriteria())
        assert [s.segment_id for s in sites] == list(net.ids())
        assert all(s.available_heads_m for s in sites)

    def test_flow_threshold_above_basin_max_empties(self):
        net = synth_basin(depth=2, branching=2, seed=7)
        flows = {sid: 5.0 for sid in net.ids()}
        sites = screen_sites(net, flows, ScreeningCriteria(min_mean_flow_m3s=5.1))
        assert sites == []

    def test_slope_threshold_keeps_exactly_matching_segments(self):
        slopes = {"A": 0.004, "B": 0.005, "C": 0.006, "D": 0.0049, "E": 0.02, "F": 0.001, "G": 0.005}
        segs = [seg("A", None, 50.0, slope=slopes["A"], area=700)]
        feet = {"A": 50.0}
        order = ["B", "C", "D", "E", "F", "G"]
        for idx, sid in enumerate(order):
            down = (["A"] + order)[idx]
            feet[sid] = feet[down] + 10.0 * 1000 * slopes[down]
            segs.append(seg(sid, down, feet[sid], slope=slopes[sid], area=650 - 100 * idx))
        net = RiverNetwork(segs)
        flows = {sid: 10.0 for sid in net.ids()}
        sites = screen_sites(net, flows, ScreeningCriteria(min_slope=0.005))
        assert {s.segment_id for s in sites} == {sid for sid, s in slopes.items() if s >= 0.005}

    def test_head_ladder_truncated_by_upstream_gain(self):
        # C0 foot 100, C1 foot 125, C2 foot 137: budgets 25 and 12.
        net = chain(100.0, 125.0, 137.0, slope=0.0025, length=10.0)
        flows = {sid: 10.0 for sid in net.ids()}
        sites = {s.segment_id: s for s in screen_sites(net, flows, ScreeningCriteria())}
        assert sites["C0"].available_heads_m == (10.0, 20.0)
        assert sites["C1"].available_heads_m == (10.0,)
        # headwater budget is its own relief: 10 km at 0.0025 = 25 m
        assert sites["C2"].available_heads_m == (10.0, 20.0)
        assert sites["C2"].max_head_m == pytest.approx(25.0)

    def test_ladder_fallback_when_budget_below_smallest_rung(self):
        net = chain(100.0, 107.0, 137.0, slope=0.003)
        flows = {sid: 10.0 for sid in net.ids()}
        sites = {s.segment_id: s for s in screen_sites(net, flows, ScreeningCriteria())}
        assert sites["C0"].available_heads_m == (7.0,)

    def test_budget_skips_non_candidate_segments(self):
        # C1 fails the flow threshold, so C0's pool may run through it.
        net = chain(100.0, 125.0, 137.0, slope=0.0025)
        flows = {"C0": 10.0, "C1": 1.0, "C2": 10.0}
        sites = {
            s.segment_id: s
            for s in screen_sites(net, flows, ScreeningCriteria(min_mean_flow_m3s=5.0))
        }
        assert set(sites) == {"C0", "C2"}
        assert sites["C0"].max_head_m == pytest.approx(37.0)
        assert sites["C0"].available_heads_m == (10.0, 20.0, 30.0)

    def test_min_head_prunes_sites_without_tall_option(self):
        net = chain(100.0, 125.0, 137.0, slope=0.0025)
        flows = {sid: 10.0 for sid in net.ids()}
        sites = screen_sites(net, flows, ScreeningCriteria(min_head_m=15.0))
        by_id = {s.segment_id: s for s in sites}
        assert set(by_id) == {"C0", "C2"}  # C1's only head is 10 m
        assert by_id["C0"].available_heads_m == (20.0,)

    def test_min_capacity_uses_largest_head(self):
        net = chain(100.0, 125.0, 137.0, slope=0.0025)
        flows = {sid: 10.0 for sid in net.ids()}
        # C0 best: 9.81*0.9*20*10 = 1765.8 kW
        sites = screen_sites(net, flows, ScreeningCriteria(min_capacity_mw=1.7))
        assert {s.segment_id for s in sites} == {"C0", "C2"}
        sites = screen_sites(net, flows, ScreeningCriteria(min_capacity_mw=1.8))
        assert sites == []

    def test_width_estimate_grows_with_drainage_area(self):
        net = chain(100.0, 125.0, slope=0.0025)
        flows = {sid: 10.0 for sid in net.ids()}
        sites = {s.segment_id: s for s in screen_sites(net, flows, ScreeningCriteria())}
        a0 = net["C0"].drainage_area_km2
        assert sites["C0"].river_width_m == pytest.approx(0.8 * math.sqrt(a0))
        assert sites["C0"].river_width_m > sites["C1"].river_width_m

    def test_missing_flow_rejected(self):
        net = chain(100.0, 125.0)
        with pytest.raises(ScreeningError, match="C1"):
            screen_sites(net, {"C0": 5.0}, ScreeningCriteria())

    def test_negative_threshold_rejected(self):
        with pytest.raises(ScreeningError):
            ScreeningCriteria(min_slope=-0.001)


class TestExanteFilter:
    def test_unit_cost_boundary_inclusive(self):
        at = fake_variant("at", "C0", kw=10_000, capex=40_000_000.0)
        above = fake_variant("above", "C0", kw=10_000, capex=40_010_000.0)
        kept = exante_filter([at, above], max_unit_cost=4000.0, min_power_density=0.0)
        assert [v.id for v in kept] == ["at"]

    def test_power_density_boundary_inclusive(self):
        at = fake_variant("at", "C0", kw=8_000, flooded=2.0, capex=1.0)
        below = fake_variant("below", "C0", kw=7_999, flooded=2.0, capex=1.0)
        kept = exante_filter([at, below], max_unit_cost=1e9, min_power_density=4.0)
        assert [v.id for v in kept] == ["at"]

    def test_zero_flooded_area_passes_density(self):
        v = fake_variant("dry", "C0", kw=100, flooded=0.0, capex=1.0)
        assert exante_filter([v], max_unit_cost=1e9, min_power_density=1e9) == [v]

    def test_zero_capacity_rejected(self):
        v = fake_variant("null", "C0", kw=0.0, capex=0.0)
        assert exante_filter([v]) == []

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=100.0, max_value=50_000.0),
                st.floats(min_value=0.0, max_value=5e8),
                st.floats(min_value=0.0, max_value=50.0),
            ),
            max_size=12,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_filter_subset_and_idempotent(self, rows):
        variants = [
            fake_variant(f"v{i}", "C0", kw=kw, capex=capex, flooded=fl)
            for i, (kw, capex, fl) in enumerate(rows)
        ]
        kept = exante_filter(variants)
        assert all(v in variants for v in kept)
        assert exante_filter(kept) == kept


class TestConflictPairs:
    def net3(self):
        return chain(100.0, 120.0, 140.0, slope=0.002)

    def test_same_site_pair(self):
        net = self.net3()
        vs = [fake_variant("a", "C0", head=10), fake_variant("b", "C0", head=20)]
        pairs = conflict_pairs(vs, net)
        assert pairs == {ConflictPair("a", "b", "same-site")}

    def test_upstream_foot_inside_pool_conflicts(self):
        net = self.net3()
        vs = [fake_variant("low", "C0", head=30.0), fake_variant("up", "C1", head=10.0)]
        pairs = conflict_pairs(vs, net)
        assert ConflictPair("low", "up", "inundation") in pairs

    def test_gain_equal_to_head_is_back_to_back_cascade(self):
        net = self.net3()
        vs = [fake_variant("low", "C0", head=20.0), fake_variant("up", "C1", head=10.0)]
        assert conflict_pairs(vs, net) == set()

    def test_pool_reaches_past_one_segment(self):
        net = self.net3()
        vs = [fake_variant("low", "C0", head=45.0), fake_variant("up", "C2", head=10.0)]
        pairs = conflict_pairs(vs, net)
        assert ConflictPair("low", "up", "inundation") in pairs

    def test_downstream_variant_never_conflicts_upward_only(self):
        # upstream variant's pool cannot flood a downstream foot
        net = self.net3()
        vs = [fake_variant("low", "C0", head=10.0), fake_variant("up", "C1", head=50.0)]
        assert conflict_pairs(vs, net) == set()

    def test_parallel_branches_do_not_conflict(self):
        segs = [
            seg("M", None, 100.0, area=500),
            seg("L", "M", 120.0, area=200),
            seg("R", "M", 121.0, area=200),
        ]
        net = RiverNetwork(segs)
        vs = [fake_variant("l", "L", head=50.0), fake_variant("r", "R", head=50.0)]
        assert conflict_pairs(vs, net) == set()

    def test_pairs_stored_once_unordered(self):
        assert ConflictPair("b", "a", "same-site") == ConflictPair("a", "b", "same-site")
        assert len({ConflictPair("b", "a", "same-site"), ConflictPair("a", "b", "same-site")}) == 1

    def test_self_pair_rejected(self):
        with pytest.raises(ScreeningError):
            ConflictPair("a", "a", "same-site")

    def test_duplicate_variant_ids_rejected(self):
        net = self.net3()
        vs = [fake_variant("a", "C0"), fake_variant("a", "C1")]
        with pytest.raises(ScreeningError, match="duplicate"):
            conflict_pairs(vs, net)

    def test_unknown_segment_rejected(self):
        net = self.net3()
        with pytest.raises(ScreeningError, match="nowhere"):
            conflict_pairs([fake_variant("a", "nowhere")], net)

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_conflicts_irreflexive_and_screened_sites_cascade_free(self, data):
        net = synth_basin(depth=3, branching=2, seed=11)
        flows = {sid: 20.0 for sid in net.ids()}
        sites = screen_sites(net, flows, ScreeningCriteria())
        variants = []
        for s in sites:
            head = data.draw(st.sampled_from(s.available_heads_m))
            variants.append(
                fake_variant(f"v-{s.segment_id}", s.segment_id, head=head, foot=s.foot_elevation_m)
            )
        pairs = conflict_pairs(variants, net)
        for p in pairs:
            assert p.a != p.b
        # ladder truncation keeps every pool below the nearest upstream site
        assert all(p.reason == "same-site" for p in pairs)
