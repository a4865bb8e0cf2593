import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riverplan.basin import RiverNetwork, Segment
from riverplan.hydrology import (
    MONTH_HOURS,
    DailySeries,
    HydrologyError,
    Scenario,
    ScenarioSet,
    dump_gauge,
    dump_scenarios,
    incremental_inflows,
    load_gauge,
    load_scenarios,
    monthly_scenarios,
    q7_10,
    transfer_flow,
)


def daily(start_year, n_years, flow_fn, gauge_id="G1", area=1000.0, drop=()):
    """Build a gap-free daily record; flow_fn(date) -> m3/s; drop = dates to omit."""
    dates, flows = [], []
    day = dt.date(start_year, 1, 1)
    end = dt.date(start_year + n_years, 1, 1)
    while day < end:
        if day not in drop:
            dates.append(day)
            flows.append(flow_fn(day))
        day += dt.timedelta(days=1)
    return DailySeries(gauge_id=gauge_id, drainage_area_km2=area, dates=dates, flows=np.array(flows))


def dipped_series(dip_values, base=100.0, start_year=1961):
    """One mid-year 7-day dip per year; annual 7-day minima equal dip_values."""
    dips = {}
    for k, v in enumerate(dip_values):
        year = start_year + k
        for d in range(7):
            dips[dt.date(year, 7, 1) + dt.timedelta(days=d)] = v
    return daily(start_year, len(dip_values), lambda d: dips.get(d, base))


class TestSeriesValidation:
    def test_negative_flow_rejected(self):
        with pytest.raises(HydrologyError, match="negative"):
            DailySeries("G", 10.0, [dt.date(2000, 1, 1)], np.array([-1.0]))

    def test_unsorted_dates_rejected(self):
        with pytest.raises(HydrologyError, match="increasing"):
            DailySeries(
                "G", 10.0, [dt.date(2000, 1, 2), dt.date(2000, 1, 1)], np.array([1.0, 1.0])
            )

    def test_nonpositive_area_rejected(self):
        with pytest.raises(HydrologyError, match="drainage area"):
            DailySeries("G", 0.0, [dt.date(2000, 1, 1)], np.array([1.0]))


class TestGaugeIO:
    def test_round_trip_with_gap(self):
        s = daily(2000, 1, lambda d: 5.0)
        s.flows[3] = np.nan
        again = load_gauge(dump_gauge(s))
        assert again.gauge_id == s.gauge_id
        assert again.drainage_area_km2 == s.drainage_area_km2
        assert again.dates == s.dates
        assert np.isnan(again.flows[3])
        np.testing.assert_array_equal(np.delete(again.flows, 3), np.delete(s.flows, 3))

    def test_metadata_lines_any_order(self):
        text = "drainage_area_km2,250\ngauge_id,OG-7\ndate,flow_m3s\n2001-03-04,12.5\n"
        s = load_gauge(text)
        assert s.gauge_id == "OG-7"
        assert s.drainage_area_km2 == 250.0
        assert s.flows[0] == 12.5

    def test_missing_header_rejected(self):
        with pytest.raises(HydrologyError, match="gauge file"):
            load_gauge("2001-03-04,12.5\n2001-03-05,13.0\n")

    def test_file_path(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text(dump_gauge(daily(2000, 1, lambda d: 5.0)))
        assert load_gauge(p).mean_flow() == pytest.approx(5.0)


class TestTransferFlow:
    def test_halving_area_halves_flow(self):
        s = daily(2000, 1, lambda d: 20.0, area=1000.0)
        out = transfer_flow(s, 500.0)
        assert out.drainage_area_km2 == 500.0
        assert out.flows[0] == pytest.approx(10.0)

    def test_identity(self):
        s = daily(2000, 1, lambda d: 20.0, area=1000.0)
        np.testing.assert_allclose(transfer_flow(s, 1000.0).flows, s.flows)

    def test_doubling(self):
        s = daily(2000, 1, lambda d: 20.0, area=1000.0)
        assert transfer_flow(s, 2000.0).flows[0] == pytest.approx(40.0)

    def test_nonpositive_target_rejected(self):
        s = daily(2000, 1, lambda d: 20.0)
        with pytest.raises(HydrologyError):
            transfer_flow(s, 0.0)

    @given(
        a=st.floats(min_value=0.1, max_value=1e4),
        b=st.floats(min_value=0.1, max_value=1e4),
    )
    @settings(max_examples=50, deadline=None)
    def test_composition(self, a, b):
        s = daily(2000, 1, lambda d: 37.5, area=800.0)
        once = transfer_flow(transfer_flow(s, s.drainage_area_km2 * a), s.drainage_area_km2 * a * b)
        direct = transfer_flow(s, s.drainage_area_km2 * a * b)
        np.testing.assert_allclose(once.flows, direct.flows, rtol=1e-12)


class TestMonthlyScenarios:
    def test_constant_series(self):
        s = daily(2000, 3, lambda d: 10.0)
        ss = monthly_scenarios(s, [{"label": 2001, "probability": 1.0}])
        assert ss.scenarios[0].monthly_flows == tuple([10.0] * 12)

    def test_month_durations_are_calendar_days(self):
        assert MONTH_HOURS == (744.0, 672.0, 744.0, 720.0, 744.0, 720.0, 744.0, 744.0, 720.0, 744.0, 720.0, 744.0)
        assert sum(MONTH_HOURS) == 8760.0

    def test_reference_probability_table_accepted(self):
        s = daily(1960, 25, lambda d: 10.0 + d.month)
        years = [
            {"label": 1972, "probability": 0.074},
            {"label": 1978, "probability": 0.260},
            {"label": 1979, "probability": 0.333},
            {"label": 1965, "probability": 0.222},
            {"label": 1966, "probability": 0.111},
        ]
        ss = monthly_scenarios(s, years)
        assert ss.labels() == ("1972", "1978", "1979", "1965", "1966")
        assert sum(ss.probabilities()) == pytest.approx(1.0, abs=1e-9)

    def test_probability_sum_checked(self):
        s = daily(2000, 2, lambda d: 10.0)
        with pytest.raises(HydrologyError, match="sum"):
            monthly_scenarios(s, [{"label": 2000, "probability": 0.9}])

    def test_missing_year_rejected(self):
        s = daily(2000, 2, lambda d: 10.0)
        with pytest.raises(HydrologyError, match="1990"):
            monthly_scenarios(s, [{"label": 1990, "probability": 1.0}])

    def test_means_respect_month_boundaries(self):
        s = daily(2000, 1, lambda d: float(d.month))
        ss = monthly_scenarios(s, [{"label": 2000, "probability": 1.0}])
        assert ss.scenarios[0].monthly_flows == tuple(float(m) for m in range(1, 13))


class TestScenarioSetValidation:
    def test_probability_sum_enforced(self):
        with pytest.raises(HydrologyError, match="sum"):
            ScenarioSet([Scenario("a", 0.5, tuple([1.0] * 12))])

    def test_negative_flow_rejected(self):
        with pytest.raises(HydrologyError, match="negative"):
            Scenario("a", 1.0, tuple([-1.0] + [1.0] * 11))

    def test_round_trip(self):
        ss = ScenarioSet(
            [
                Scenario("1972", 0.4, tuple(float(i) for i in range(12))),
                Scenario("1978", 0.6, tuple(float(2 * i) for i in range(12))),
            ]
        )
        again = load_scenarios(dump_scenarios(ss))
        assert again.labels() == ss.labels()
        assert again.flow_matrix().tolist() == ss.flow_matrix().tolist()
        assert again.month_durations_h == ss.month_durations_h

    def test_expected_mean_flow_weights_by_duration(self):
        ss = ScenarioSet([Scenario("y", 1.0, tuple([2.0] * 12))])
        assert ss.expected_mean_flow() == pytest.approx(2.0)


class TestQ7_10:
    def test_constant_identity(self):
        s = daily(1961, 10, lambda d: 10.0)
        assert q7_10(s) == 10.0

    def test_order_statistic_interpolation(self):
        s = dipped_series([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])
        assert q7_10(s) == pytest.approx(1.1, abs=1e-12)

    def test_dip_order_irrelevant(self):
        s = dipped_series([7.0, 2.0, 10.0, 4.0, 1.0, 6.0, 3.0, 8.0, 9.0, 5.0])
        assert q7_10(s) == pytest.approx(1.1, abs=1e-12)

    def test_short_record_rejected(self):
        s = daily(2000, 5, lambda d: 10.0)
        with pytest.raises(HydrologyError, match="complete years"):
            q7_10(s)

    def test_year_with_large_gap_dropped(self):
        # 11 years; the year with the deepest dip also misses 11 days, so it
        # is excluded and the remaining 10 minima {2..11} drive the answer.
        s = dipped_series([1.0] + [float(k) for k in range(2, 12)])
        drop = {dt.date(1961, 3, 1) + dt.timedelta(days=i) for i in range(11)}
        kept = [(d, q) for d, q in zip(s.dates, s.flows) if d not in drop]
        s2 = DailySeries("G1", 1000.0, [d for d, _ in kept], np.array([q for _, q in kept]))
        assert q7_10(s2) == pytest.approx(2.1, abs=1e-12)

    def test_small_gap_interpolated(self):
        s = daily(1961, 10, lambda d: 10.0)
        drop = {dt.date(1963, 5, 10) + dt.timedelta(days=i) for i in range(3)}
        kept = [(d, q) for d, q in zip(s.dates, s.flows) if d not in drop]
        s2 = DailySeries("G1", 1000.0, [d for d, _ in kept], np.array([q for _, q in kept]))
        assert q7_10(s2) == 10.0

    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_below_minimum_annual_mean(self, seed):
        rng = np.random.default_rng(seed)
        s = daily(1970, 12, lambda d: 0.0)
        s.flows = rng.uniform(1.0, 500.0, size=len(s.flows))
        annual_means = [
            np.mean([q for d, q in zip(s.dates, s.flows) if d.year == y]) for y in s.years()
        ]
        assert q7_10(s) <= min(annual_means) + 1e-9


class TestIncrementalInflows:
    @staticmethod
    def net3():
        def seg(sid, down, foot, area):
            return Segment(sid, down, 10.0, foot, area, 0.005, 2.0)

        return RiverNetwork(
            [seg("A", "C", 30.0, 100.0), seg("B", "C", 25.0, 200.0), seg("C", None, 10.0, 400.0)]
        )

    @staticmethod
    def flows(values):
        return {
            sid: ScenarioSet([Scenario("y", 1.0, tuple([float(v)] * 12))])
            for sid, v in values.items()
        }

    def test_headwater_keeps_total(self):
        inc = incremental_inflows(self.net3(), self.flows({"A": 60, "B": 30, "C": 100}))
        np.testing.assert_allclose(inc.flows["A"], 60.0)
        np.testing.assert_allclose(inc.flows["B"], 30.0)

    def test_confluence_subtracts_upstream(self):
        inc = incremental_inflows(self.net3(), self.flows({"A": 60, "B": 30, "C": 100}))
        np.testing.assert_allclose(inc.flows["C"], 10.0)

    def test_negative_floored_with_warning(self, caplog):
        with caplog.at_level("WARNING", logger="riverplan.hydrology"):
            inc = incremental_inflows(self.net3(), self.flows({"A": 60, "B": 50, "C": 100}))
        np.testing.assert_allclose(inc.flows["C"], 0.0)
        assert any("floored" in r.message for r in caplog.records)

    def test_label_mismatch_rejected(self):
        flows = self.flows({"A": 60, "B": 30, "C": 100})
        flows["B"] = ScenarioSet([Scenario("other", 1.0, tuple([30.0] * 12))])
        with pytest.raises(HydrologyError, match="labels"):
            incremental_inflows(self.net3(), flows)

    def test_missing_segment_rejected(self):
        flows = self.flows({"A": 60, "B": 30})
        with pytest.raises(HydrologyError, match="C"):
            incremental_inflows(self.net3(), flows)

    def test_path_sum_bounded_by_downstream_total(self):
        inc = incremental_inflows(self.net3(), self.flows({"A": 60, "B": 30, "C": 100}))
        path_sum = inc.flows["A"] + inc.flows["B"] + inc.flows["C"]
        assert (path_sum <= 100.0 + 1e-9).all()
