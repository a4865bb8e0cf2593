"""Impact metrics: per-project contributions from flooded-area densities,
whole-alternative aggregation, and satisfaction scoring.

Cumulative metrics add up over the selected projects. River connectivity does
not: it is recomputed for the alternative as a whole from the dam set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .basin import RiverNetwork, free_flowing_length

__all__ = [
    "MetricsError",
    "ImpactDensities",
    "ImpactTable",
    "MetricDef",
    "SatisfactionConfig",
    "HOUSEHOLDS",
    "ROAD_M",
    "RAILWAY_M",
    "PROTECTED_KM2",
    "BIOMASS_MG",
    "FLOODED_KM2",
    "FREE_FLOWING_KM",
    "CUMULATIVE_METRICS",
    "project_metrics",
    "contributions_for_area",
    "alternative_metrics",
    "satisfaction",
    "metric_satisfaction",
    "combined_satisfaction",
    "load_impact_table",
    "dump_impact_table",
]

HA_PER_KM2 = 100.0

HOUSEHOLDS = "households"
ROAD_M = "road_m"
RAILWAY_M = "railway_m"
PROTECTED_KM2 = "protected_area_km2"
BIOMASS_MG = "biomass_Mg"
FLOODED_KM2 = "flooded_km2"
FREE_FLOWING_KM = "free_flowing_km"

# Everything that sums over projects; connectivity is handled apart.
CUMULATIVE_METRICS = (HOUSEHOLDS, ROAD_M, RAILWAY_M, PROTECTED_KM2, BIOMASS_MG, FLOODED_KM2)

IMPACT_COLUMNS = (
    "households_per_km2",
    "road_m_per_km2",
    "railway_m_per_km2",
    "protected_fraction",
    "biomass_Mg_per_ha",
)


class MetricsError(ValueError):
    """Impact data or metric configuration violates a precondition."""


@dataclass(frozen=True)
class ImpactDensities:
    """Flooding impact densities of one segment's floodable corridor."""

    households_per_km2: float
    road_m_per_km2: float
    railway_m_per_km2: float
    protected_fraction: float
    biomass_Mg_per_ha: float

    def __post_init__(self):
        for name in ("households_per_km2", "road_m_per_km2", "railway_m_per_km2", "biomass_Mg_per_ha"):
            if getattr(self, name) < 0:
                raise MetricsError(f"{name} must be >= 0")
        if not 0.0 <= self.protected_fraction <= 1.0:
            raise MetricsError(f"protected_fraction must be in [0,1], got {self.protected_fraction}")


@dataclass
class ImpactTable:
    """Per-segment impact densities."""

    rows: dict[str, ImpactDensities]

    def __contains__(self, sid: str) -> bool:
        return sid in self.rows

    def __getitem__(self, sid: str) -> ImpactDensities:
        if sid not in self.rows:
            raise MetricsError(f"no impact densities for segment {sid}")
        return self.rows[sid]


@dataclass(frozen=True)
class MetricDef:
    """One constrained metric: hard bound and/or satisfaction band.

    ``bound_kind`` gives the hard-bound direction: ``max`` caps the metric
    (impacts), ``min`` floors it (benefits). ``orientation`` controls how the
    satisfaction score reads the metric: for ``impact`` metrics lower is
    better, so the value is reflected across the satisfaction band before
    scoring; left unset it follows bound_kind (max -> impact, min -> benefit).
    """

    id: str
    bound_kind: str  # "max" | "min"
    bound: float | None = None
    cumulative: bool = True
    satisfaction_bounds: tuple[float, float] | None = None
    orientation: str | None = None

    def __post_init__(self):
        if self.bound_kind not in ("max", "min"):
            raise MetricsError(f"metric {self.id}: bound_kind must be 'max' or 'min'")
        if self.orientation not in (None, "impact", "benefit"):
            raise MetricsError(f"metric {self.id}: orientation must be 'impact' or 'benefit'")
        if self.satisfaction_bounds is not None:
            lo, hi = self.satisfaction_bounds
            if not lo < hi:
                raise MetricsError(f"metric {self.id}: satisfaction bounds need lo < hi, got {lo}, {hi}")

    @property
    def resolved_orientation(self) -> str:
        if self.orientation is not None:
            return self.orientation
        return "impact" if self.bound_kind == "max" else "benefit"


@dataclass(frozen=True)
class SatisfactionConfig:
    """Combined-satisfaction requirement over the enabled metrics."""

    weight_mean: float  # weight on the mean; (1 - weight) goes to the minimum
    required: float  # combined score the alternative must reach
    metric_ids: tuple[str, ...]

    def __post_init__(self):
        if not 0.0 <= self.weight_mean <= 1.0:
            raise MetricsError(f"weight_mean must be in [0,1], got {self.weight_mean}")
        if not 0.0 <= self.required <= 1.0:
            raise MetricsError(f"required satisfaction must be in [0,1], got {self.required}")
        if not self.metric_ids:
            raise MetricsError("satisfaction needs at least one metric id")


def contributions_for_area(segment_id: str, flooded_km2: float, impacts: ImpactTable) -> dict[str, float]:
    """Metric contributions of flooding ``flooded_km2`` on one segment."""
    if flooded_km2 < 0:
        raise MetricsError(f"flooded area must be >= 0, got {flooded_km2}")
    d = impacts[segment_id]
    return {
        HOUSEHOLDS: d.households_per_km2 * flooded_km2,
        ROAD_M: d.road_m_per_km2 * flooded_km2,
        RAILWAY_M: d.railway_m_per_km2 * flooded_km2,
        PROTECTED_KM2: d.protected_fraction * flooded_km2,
        BIOMASS_MG: d.biomass_Mg_per_ha * HA_PER_KM2 * flooded_km2,
        FLOODED_KM2: flooded_km2,
    }


def project_metrics(variant, impacts: ImpactTable) -> dict[str, float]:
    """Cumulative-metric contributions of one project variant."""
    return contributions_for_area(variant.segment_id, variant.flooded_area_km2, impacts)


def alternative_metrics(selection: Iterable, net: RiverNetwork, impacts: ImpactTable) -> dict[str, float]:
    """Whole-alternative metric values for a conflict-free selection.

    Cumulative metrics sum per-project contributions; free-flowing length is
    recomputed from the selection's dam set. Two variants on one segment are
    rejected (same-site conflict).
    """
    variants = list(selection)
    seen: set[str] = set()
    for v in variants:
        if v.segment_id in seen:
            raise MetricsError(f"conflicting selection: two variants on segment {v.segment_id}")
        seen.add(v.segment_id)
    totals = {mid: 0.0 for mid in CUMULATIVE_METRICS}
    for v in variants:
        for mid, val in project_metrics(v, impacts).items():
            totals[mid] += val
    dams = [(v.segment_id, bool(getattr(v, "passable", False))) for v in variants]
    totals[FREE_FLOWING_KM] = free_flowing_length(net, dams)
    return totals


def satisfaction(value: float, bounds: tuple[float, float]) -> float:
    """Piecewise-linear score: 0 at/below the lower bound, 1 at/above the upper."""
    lo, hi = bounds
    if not lo < hi:
        raise MetricsError(f"satisfaction bounds need lo < hi, got {lo}, {hi}")
    return min(1.0, max(0.0, (value - lo) / (hi - lo)))


def metric_satisfaction(mdef: MetricDef, value: float) -> float:
    """Satisfaction of one metric value under the metric's orientation.

    Impact metrics are reflected across the band (lo + hi - value) first, so
    that smaller impacts score higher.
    """
    if mdef.satisfaction_bounds is None:
        raise MetricsError(f"metric {mdef.id}: no satisfaction bounds configured")
    lo, hi = mdef.satisfaction_bounds
    if mdef.resolved_orientation == "impact":
        value = lo + hi - value
    return satisfaction(value, (lo, hi))


def combined_satisfaction(scores: Sequence[float], weight_mean: float) -> float:
    """Blend of mean and worst satisfaction: w·mean + (1-w)·min."""
    scores = list(scores)
    if not scores:
        raise MetricsError("combined satisfaction of an empty score list")
    if not 0.0 <= weight_mean <= 1.0:
        raise MetricsError(f"weight must be in [0,1], got {weight_mean}")
    mean = sum(scores) / len(scores)
    return weight_mean * mean + (1.0 - weight_mean) * min(scores)


def load_impact_table(source) -> ImpactTable:
    """Parse the impact-density table: CSV keyed by segment_id."""
    text = _read_text(source)
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MetricsError("empty impact table")
    header = [h.strip() for h in lines[0].split(",")]
    expected = ["segment_id", *IMPACT_COLUMNS]
    if header != expected:
        raise MetricsError(f"impact table header must be {','.join(expected)}")
    rows: dict[str, ImpactDensities] = {}
    for ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != len(expected):
            raise MetricsError(f"impact table row has {len(parts)} fields: {ln!r}")
        sid = parts[0]
        if sid in rows:
            raise MetricsError(f"duplicate impact row for segment {sid}")
        rows[sid] = ImpactDensities(*(float(p) for p in parts[1:]))
    return ImpactTable(rows=rows)


def dump_impact_table(table: ImpactTable) -> str:
    lines = [",".join(["segment_id", *IMPACT_COLUMNS])]
    for sid in sorted(table.rows):
        d = table.rows[sid]
        lines.append(
            ",".join(
                [
                    sid,
                    repr(d.households_per_km2),
                    repr(d.road_m_per_km2),
                    repr(d.railway_m_per_km2),
                    repr(d.protected_fraction),
                    repr(d.biomass_Mg_per_ha),
                ]
            )
        )
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
