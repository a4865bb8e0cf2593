from dataclasses import dataclass

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riverplan.basin import RiverNetwork, Segment
from riverplan.metrics import (
    BIOMASS_MG,
    FLOODED_KM2,
    FREE_FLOWING_KM,
    HOUSEHOLDS,
    PROTECTED_KM2,
    RAILWAY_M,
    ROAD_M,
    ImpactDensities,
    ImpactTable,
    MetricDef,
    MetricsError,
    SatisfactionConfig,
    alternative_metrics,
    combined_satisfaction,
    contributions_for_area,
    dump_impact_table,
    load_impact_table,
    metric_satisfaction,
    project_metrics,
    satisfaction,
)


@dataclass
class FakeVariant:
    segment_id: str
    flooded_area_km2: float
    passable: bool = False


def table(**overrides):
    base = dict(
        households_per_km2=50.0,
        road_m_per_km2=120.0,
        railway_m_per_km2=0.0,
        protected_fraction=0.0,
        biomass_Mg_per_ha=2.0,
    )
    base.update(overrides)
    d = ImpactDensities(**base)
    return ImpactTable(rows={"A": d, "B": d, "C": d})


def chain():
    def seg(sid, down, foot, area):
        return Segment(sid, down, 10.0, foot, area, 0.005, 2.0)

    return RiverNetwork([seg("A", "B", 30.0, 100.0), seg("B", "C", 20.0, 250.0), seg("C", None, 10.0, 400.0)])


class TestProjectMetrics:
    def test_zero_area_zero_contributions(self):
        out = contributions_for_area("A", 0.0, table())
        assert all(v == 0.0 for v in out.values())

    def test_household_density_times_area(self):
        out = contributions_for_area("A", 2.0, table())
        assert out[HOUSEHOLDS] == pytest.approx(100.0)

    def test_protected_overlap_is_fraction_of_area(self):
        out = contributions_for_area("A", 3.0, table(protected_fraction=1.0))
        assert out[PROTECTED_KM2] == pytest.approx(3.0)

    def test_biomass_uses_hectares(self):
        out = contributions_for_area("A", 1.5, table(biomass_Mg_per_ha=2.0))
        assert out[BIOMASS_MG] == pytest.approx(2.0 * 100.0 * 1.5)

    def test_road_and_flooded(self):
        out = contributions_for_area("A", 2.0, table())
        assert out[ROAD_M] == pytest.approx(240.0)
        assert out[RAILWAY_M] == 0.0
        assert out[FLOODED_KM2] == 2.0

    def test_missing_segment_rejected(self):
        with pytest.raises(MetricsError, match="Z"):
            contributions_for_area("Z", 1.0, table())

    def test_variant_wrapper(self):
        v = FakeVariant("A", 2.0)
        assert project_metrics(v, table())[HOUSEHOLDS] == pytest.approx(100.0)


class TestAlternativeMetrics:
    def test_empty_selection(self):
        out = alternative_metrics([], chain(), table())
        assert out[HOUSEHOLDS] == 0.0
        assert out[FLOODED_KM2] == 0.0
        assert out[FREE_FLOWING_KM] == pytest.approx(30.0)

    def test_cumulative_additivity(self):
        net = chain()
        va, vb = FakeVariant("A", 1.0), FakeVariant("B", 2.0)
        both = alternative_metrics([va, vb], net, table())
        alone = [alternative_metrics([v], net, table()) for v in (va, vb)]
        for mid in (HOUSEHOLDS, ROAD_M, BIOMASS_MG, FLOODED_KM2):
            assert both[mid] == pytest.approx(alone[0][mid] + alone[1][mid])

    def test_free_flowing_dominance_of_downstream_dam(self):
        net = chain()
        up, down = FakeVariant("A", 1.0), FakeVariant("B", 1.0)
        nested = alternative_metrics([up, down], net, table())
        down_only = alternative_metrics([down], net, table())
        assert nested[FREE_FLOWING_KM] == down_only[FREE_FLOWING_KM] == pytest.approx(10.0)

    def test_passable_dam_preserves_connectivity(self):
        out = alternative_metrics([FakeVariant("B", 1.0, passable=True)], chain(), table())
        assert out[FREE_FLOWING_KM] == pytest.approx(30.0)

    def test_same_site_selection_rejected(self):
        with pytest.raises(MetricsError, match="segment A"):
            alternative_metrics([FakeVariant("A", 1.0), FakeVariant("A", 2.0)], chain(), table())


class TestSatisfaction:
    def test_anchors(self):
        assert satisfaction(10.0, (10.0, 20.0)) == 0.0
        assert satisfaction(15.0, (10.0, 20.0)) == 0.5
        assert satisfaction(25.0, (10.0, 20.0)) == 1.0
        assert satisfaction(5.0, (10.0, 20.0)) == 0.0

    def test_bad_bounds_rejected(self):
        with pytest.raises(MetricsError):
            satisfaction(1.0, (5.0, 5.0))

    @given(
        value=st.floats(min_value=-1e6, max_value=1e6),
        lo=st.floats(min_value=-1e3, max_value=1e3),
        width=st.floats(min_value=1e-3, max_value=1e3),
        scale=st.floats(min_value=1e-3, max_value=1e3),
        shift=st.floats(min_value=-1e3, max_value=1e3),
    )
    @settings(max_examples=60, deadline=None)
    def test_affine_invariance(self, value, lo, width, scale, shift):
        hi = lo + width
        direct = satisfaction(value, (lo, hi))
        mapped = satisfaction(scale * value + shift, (scale * lo + shift, scale * hi + shift))
        assert mapped == pytest.approx(direct, abs=1e-6)

    @given(
        a=st.floats(min_value=-100, max_value=100),
        b=st.floats(min_value=-100, max_value=100),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone(self, a, b):
        lo_v, hi_v = sorted((a, b))
        assert satisfaction(lo_v, (0.0, 10.0)) <= satisfaction(hi_v, (0.0, 10.0))

    def test_impact_orientation_reflects(self):
        m = MetricDef(id=HOUSEHOLDS, bound_kind="max", satisfaction_bounds=(0.0, 100.0))
        assert m.resolved_orientation == "impact"
        assert metric_satisfaction(m, 0.0) == 1.0
        assert metric_satisfaction(m, 100.0) == 0.0
        assert metric_satisfaction(m, 25.0) == 0.75

    def test_benefit_orientation_direct(self):
        m = MetricDef(id=FREE_FLOWING_KM, bound_kind="min", cumulative=False, satisfaction_bounds=(0.0, 100.0))
        assert m.resolved_orientation == "benefit"
        assert metric_satisfaction(m, 100.0) == 1.0
        assert metric_satisfaction(m, 25.0) == 0.25


class TestCombinedSatisfaction:
    def test_pure_mean(self):
        assert combined_satisfaction([0.2, 0.8], 1.0) == pytest.approx(0.5)

    def test_pure_min(self):
        assert combined_satisfaction([0.2, 0.8], 0.0) == pytest.approx(0.2)

    def test_blend(self):
        assert combined_satisfaction([0.2, 0.8], 0.5) == pytest.approx(0.35)

    def test_empty_rejected(self):
        with pytest.raises(MetricsError):
            combined_satisfaction([], 0.5)

    @given(
        scores=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8),
        lam=st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_between_min_and_mean(self, scores, lam):
        c = combined_satisfaction(scores, lam)
        mean = sum(scores) / len(scores)
        assert min(scores) - 1e-12 <= c <= mean + 1e-12


class TestDefsAndIO:
    def test_metricdef_validation(self):
        with pytest.raises(MetricsError):
            MetricDef(id="x", bound_kind="upper")
        with pytest.raises(MetricsError):
            MetricDef(id="x", bound_kind="max", satisfaction_bounds=(5.0, 5.0))

    def test_satisfaction_config_validation(self):
        with pytest.raises(MetricsError):
            SatisfactionConfig(weight_mean=1.5, required=0.5, metric_ids=("a",))
        with pytest.raises(MetricsError):
            SatisfactionConfig(weight_mean=0.5, required=0.5, metric_ids=())

    def test_densities_validation(self):
        with pytest.raises(MetricsError):
            ImpactDensities(-1.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(MetricsError):
            ImpactDensities(0.0, 0.0, 0.0, 1.5, 0.0)

    def test_table_round_trip(self):
        t = ImpactTable(
            rows={
                "A": ImpactDensities(50.0, 120.0, 0.0, 0.1, 2.0),
                "B": ImpactDensities(0.0, 0.0, 30.0, 0.0, 5.5),
            }
        )
        again = load_impact_table(dump_impact_table(t))
        assert again.rows == t.rows

    def test_bad_header_rejected(self):
        with pytest.raises(MetricsError, match="header"):
            load_impact_table("segment,households\nA,1\n")
