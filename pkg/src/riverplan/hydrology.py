"""Gauge flow handling: ingestion, drainage-area transfer, monthly scenario
construction, low-flow statistics, and per-segment incremental inflows.

Flows are always m³/s. Gaps in daily records are carried as NaN so the
low-flow routine can apply its own tolerance rules.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .basin import RiverNetwork

__all__ = [
    "HydrologyError",
    "DailySeries",
    "Scenario",
    "ScenarioSet",
    "IncrementalInflows",
    "MONTH_HOURS",
    "load_gauge",
    "dump_gauge",
    "transfer_flow",
    "monthly_scenarios",
    "q7_10",
    "incremental_inflows",
    "load_scenarios",
    "dump_scenarios",
]

log = logging.getLogger(__name__)

# Hours per calendar month, non-leap baseline year.
DAYS_PER_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
MONTH_HOURS = tuple(float(d * 24) for d in DAYS_PER_MONTH)

# A year with more missing days than this is dropped from low-flow statistics;
# smaller gaps are filled by linear interpolation.
MAX_MISSING_DAYS = 10

MIN_YEARS_FOR_Q7_10 = 10


class HydrologyError(ValueError):
    """Flow data violates a precondition."""


@dataclass
class DailySeries:
    """Daily discharge record at one gauge; NaN flow marks a gap."""

    gauge_id: str
    drainage_area_km2: float
    dates: list[dt.date]
    flows: np.ndarray

    def __post_init__(self):
        self.flows = np.asarray(self.flows, dtype=float)
        if self.drainage_area_km2 <= 0:
            raise HydrologyError(
                f"gauge {self.gauge_id}: drainage area must be > 0, got {self.drainage_area_km2}"
            )
        if len(self.dates) != len(self.flows):
            raise HydrologyError(f"gauge {self.gauge_id}: {len(self.dates)} dates vs {len(self.flows)} flows")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise HydrologyError(f"gauge {self.gauge_id}: dates not strictly increasing at {b}")
        finite = self.flows[~np.isnan(self.flows)]
        if finite.size and finite.min() < 0:
            raise HydrologyError(f"gauge {self.gauge_id}: negative flow in record")

    def mean_flow(self) -> float:
        return float(np.nanmean(self.flows))

    def years(self) -> list[int]:
        return sorted({d.year for d in self.dates})


@dataclass(frozen=True)
class Scenario:
    """One representative hydrological year with its weight."""

    label: str
    probability: float
    monthly_flows: tuple[float, ...]

    def __post_init__(self):
        if len(self.monthly_flows) != 12:
            raise HydrologyError(f"scenario {self.label}: need 12 monthly flows")
        if self.probability <= 0:
            raise HydrologyError(f"scenario {self.label}: probability must be > 0")
        if min(self.monthly_flows) < 0:
            raise HydrologyError(f"scenario {self.label}: negative monthly flow")


@dataclass
class ScenarioSet:
    """Probability-weighted monthly inflow years."""

    scenarios: list[Scenario]
    month_durations_h: tuple[float, ...] = MONTH_HOURS

    def __post_init__(self):
        if len(self.month_durations_h) != 12:
            raise HydrologyError("need 12 month durations")
        total = sum(s.probability for s in self.scenarios)
        if self.scenarios and abs(total - 1.0) > 1e-9:
            raise HydrologyError(f"scenario probabilities sum to {total!r}, expected 1")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise HydrologyError("duplicate scenario labels")

    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.scenarios)

    def probabilities(self) -> tuple[float, ...]:
        return tuple(s.probability for s in self.scenarios)

    def flow_matrix(self) -> np.ndarray:
        """Scenario-by-month array, rows in scenario order."""
        return np.array([s.monthly_flows for s in self.scenarios], dtype=float)

    def expected_mean_flow(self) -> float:
        """Probability- and duration-weighted mean flow."""
        d = np.asarray(self.month_durations_h)
        q = self.flow_matrix()
        yearly = (q * d).sum(axis=1) / d.sum()
        return float(np.dot(yearly, self.probabilities()))

    def scaled(self, factor: float) -> "ScenarioSet":
        return ScenarioSet(
            scenarios=[
                Scenario(s.label, s.probability, tuple(f * factor for f in s.monthly_flows))
                for s in self.scenarios
            ],
            month_durations_h=self.month_durations_h,
        )


@dataclass
class IncrementalInflows:
    """Local (upstream-release-free) inflow per segment, scenario and month."""

    labels: tuple[str, ...]
    probabilities: tuple[float, ...]
    month_durations_h: tuple[float, ...]
    flows: dict[str, np.ndarray]  # segment id -> (scenario, month) array

    def __post_init__(self):
        for sid, arr in self.flows.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (len(self.labels), 12):
                raise HydrologyError(f"segment {sid}: inflow array shape {arr.shape}")
            if arr.min() < 0:
                raise HydrologyError(f"segment {sid}: negative incremental inflow")
            self.flows[sid] = arr


def load_gauge(source) -> DailySeries:
    """Parse a gauge record.

    Layout: two metadata lines (``gauge_id,<id>`` and ``drainage_area_km2,<a>``
    in either order), a ``date,flow_m3s`` column header, then one ISO-date row
    per day. An empty flow field marks a gap.
    """
    text = _read_text(source)
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    gauge_id = None
    area = None
    body_start = None
    for i, ln in enumerate(lines[:3]):
        key, _, value = ln.partition(",")
        key = key.strip().lower()
        if key == "gauge_id":
            gauge_id = value.strip()
        elif key == "drainage_area_km2":
            area = float(value)
        elif key == "date":
            body_start = i + 1
            break
    if gauge_id is None or area is None or body_start is None:
        raise HydrologyError(
            "gauge file must start with gauge_id and drainage_area_km2 lines followed by a date,flow_m3s header"
        )
    dates: list[dt.date] = []
    flows: list[float] = []
    for ln in lines[body_start:]:
        datestr, _, flowstr = ln.partition(",")
        dates.append(dt.date.fromisoformat(datestr.strip()))
        flowstr = flowstr.strip()
        flows.append(float("nan") if flowstr in ("", "nan", "NaN") else float(flowstr))
    return DailySeries(gauge_id=gauge_id, drainage_area_km2=area, dates=dates, flows=np.array(flows))


def dump_gauge(series: DailySeries) -> str:
    lines = [
        f"gauge_id,{series.gauge_id}",
        f"drainage_area_km2,{series.drainage_area_km2!r}",
        "date,flow_m3s",
    ]
    for d, q in zip(series.dates, series.flows):
        lines.append(f"{d.isoformat()},{'' if np.isnan(q) else repr(float(q))}")
    return "\n".join(lines) + "\n"


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, Path):
        return source.read_text()
    text = str(source)
    if "\n" not in text:
        return Path(text).read_text()
    return text


def transfer_flow(series: DailySeries, target_area: float) -> DailySeries:
    """Scale a gauge record to another drainage area by the area ratio."""
    if target_area <= 0:
        raise HydrologyError(f"target drainage area must be > 0, got {target_area}")
    factor = target_area / series.drainage_area_km2
    return DailySeries(
        gauge_id=series.gauge_id,
        drainage_area_km2=target_area,
        dates=list(series.dates),
        flows=series.flows * factor,
    )


def monthly_scenarios(series: DailySeries, years: Iterable) -> ScenarioSet:
    """Monthly-mean scenarios from selected calendar years of a daily record.

    ``years`` holds {label, probability} mappings (or (label, probability)
    pairs); each label names a calendar year that must be covered month by
    month in the record. Probabilities must sum to 1.
    """
    requested: list[tuple[str, float]] = []
    for entry in years:
        if isinstance(entry, Mapping):
            requested.append((str(entry["label"]), float(entry["probability"])))
        else:
            label, prob = entry
            requested.append((str(label), float(prob)))
    total = sum(p for _, p in requested)
    if abs(total - 1.0) > 1e-9:
        raise HydrologyError(f"scenario probabilities sum to {total!r}, expected 1")

    by_month: dict[tuple[int, int], list[float]] = {}
    for d, q in zip(series.dates, series.flows):
        if not np.isnan(q):
            by_month.setdefault((d.year, d.month), []).append(q)

    scenarios = []
    for label, prob in requested:
        try:
            year = int(label)
        except ValueError:
            raise HydrologyError(f"scenario label {label!r} is not a calendar year") from None
        means = []
        for month in range(1, 13):
            samples = by_month.get((year, month))
            if not samples:
                raise HydrologyError(f"gauge {series.gauge_id}: year {year} has no data for month {month}")
            means.append(float(np.mean(samples)))
        scenarios.append(Scenario(label=label, probability=prob, monthly_flows=tuple(means)))
    return ScenarioSet(scenarios=scenarios)


def q7_10(series: DailySeries) -> float:
    """Low-flow statistic: 7-day minimum flow with a 10-year return period.

    Per calendar year, take the minimum of the trailing 7-day moving average
    (windows fully inside the year). Years missing more than
    ``MAX_MISSING_DAYS`` days are dropped; smaller gaps are filled by linear
    interpolation over day number. The result is the empirical quantile of the
    annual minima at non-exceedance probability 0.1, using Weibull plotting
    positions p_m = m/(n+1) and linear interpolation between order statistics
    (clamped to the extremes outside [p_1, p_n]).
    """
    flow_by_date = {d: q for d, q in zip(series.dates, series.flows)}
    minima = []
    for year in series.years():
        start = dt.date(year, 1, 1)
        ndays = (dt.date(year + 1, 1, 1) - start).days
        daily = np.full(ndays, np.nan)
        for offset in range(ndays):
            q = flow_by_date.get(start + dt.timedelta(days=offset))
            if q is not None:
                daily[offset] = q
        missing = int(np.isnan(daily).sum())
        if missing > MAX_MISSING_DAYS:
            log.warning("gauge %s: year %d dropped (%d missing days)", series.gauge_id, year, missing)
            continue
        if missing:
            idx = np.arange(ndays)
            ok = ~np.isnan(daily)
            daily = np.interp(idx, idx[ok], daily[ok])
        windows = np.lib.stride_tricks.sliding_window_view(daily, 7)
        minima.append(float(windows.mean(axis=1).min()))
    if len(minima) < MIN_YEARS_FOR_Q7_10:
        raise HydrologyError(
            f"gauge {series.gauge_id}: low-flow statistic needs >= {MIN_YEARS_FOR_Q7_10} "
            f"complete years, found {len(minima)}"
        )
    minima.sort()
    n = len(minima)
    positions = np.arange(1, n + 1) / (n + 1)
    p = 0.1
    if p <= positions[0]:
        return minima[0]
    if p >= positions[-1]:
        return minima[-1]
    return float(np.interp(p, positions, minima))


def incremental_inflows(net: RiverNetwork, total_flows: Mapping[str, ScenarioSet]) -> IncrementalInflows:
    """Local inflows: each segment's total flow minus its immediate upstream totals.

    Negative differences (an artifact of area-ratio scaling) are floored at 0
    with a logged warning.
    """
    missing = [sid for sid in net.ids() if sid not in total_flows]
    if missing:
        raise HydrologyError(f"no flow scenarios for segments {missing}")
    ref_sid = net.ids()[0]
    ref = total_flows[ref_sid]
    labels = ref.labels()
    probs = ref.probabilities()
    for sid in net.ids():
        ss = total_flows[sid]
        if ss.labels() != labels:
            raise HydrologyError(
                f"segment {sid}: scenario labels {ss.labels()} do not match {labels} at {ref_sid}"
            )
        if ss.month_durations_h != ref.month_durations_h:
            raise HydrologyError(f"segment {sid}: month durations differ from {ref_sid}")

    flows: dict[str, np.ndarray] = {}
    for sid in net.ids():
        local = total_flows[sid].flow_matrix().copy()
        for up in net.upstream_of(sid):
            local -= total_flows[up].flow_matrix()
        clipped = local < -1e-12
        if clipped.any():
            log.warning(
                "segment %s: %d negative incremental inflow(s) floored at 0", sid, int(clipped.sum())
            )
        flows[sid] = np.maximum(local, 0.0)
    return IncrementalInflows(
        labels=labels,
        probabilities=probs,
        month_durations_h=ref.month_durations_h,
        flows=flows,
    )


def dump_scenarios(ss: ScenarioSet) -> str:
    doc = {
        "month_durations_h": list(ss.month_durations_h),
        "scenarios": [
            {
                "label": s.label,
                "probability": s.probability,
                "monthly_flows": list(s.monthly_flows),
            }
            for s in ss.scenarios
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_scenarios(source) -> ScenarioSet:
    doc = json.loads(_read_text(source))
    return ScenarioSet(
        scenarios=[
            Scenario(
                label=str(rec["label"]),
                probability=float(rec["probability"]),
                monthly_flows=tuple(float(x) for x in rec["monthly_flows"]),
            )
            for rec in doc["scenarios"]
        ],
        month_durations_h=tuple(float(x) for x in doc.get("month_durations_h", MONTH_HOURS)),
    )
