"""Site screening, ex-ante project filters, and mutual-exclusion detection.

Screening turns network segments into candidate dam sites with a ladder of
feasible gross heads. The ex-ante filters drop designed variants that are too
expensive per kW or flood too much per MW. Conflict detection finds variant
pairs that cannot coexist: same site, or an upstream dam foot sitting inside
a downstream variant's pool.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .basin import RiverNetwork
from .engineering import SiteGeometry, production_factor

__all__ = [
    "ScreeningError",
    "ScreeningCriteria",
    "ConflictPair",
    "DEFAULT_HEAD_LADDER",
    "MAX_UNIT_COST_USD_PER_KW",
    "MIN_POWER_DENSITY_MW_PER_KM2",
    "screen_sites",
    "exante_filter",
    "conflict_pairs",
]

DEFAULT_HEAD_LADDER = (10.0, 20.0, 30.0, 50.0)

# Ex-ante thresholds; both boundaries are inclusive.
MAX_UNIT_COST_USD_PER_KW = 4000.0
MIN_POWER_DENSITY_MW_PER_KM2 = 4.0

DEFAULT_EFFICIENCY = 0.9
DEFAULT_WIDTH_COEFF = 0.8  # river width ~ coeff * sqrt(drainage area km2), m


class ScreeningError(ValueError):
    """Screening input violates a precondition."""


@dataclass(frozen=True)
class ScreeningCriteria:
    min_mean_flow_m3s: float = 0.0
    min_slope: float = 0.0
    min_head_m: float = 0.0
    min_capacity_mw: float = 0.0

    def __post_init__(self):
        for name in ("min_mean_flow_m3s", "min_slope", "min_head_m", "min_capacity_mw"):
            if getattr(self, name) < 0:
                raise ScreeningError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ConflictPair:
    """Unordered pair of mutually exclusive variants."""

    a: str
    b: str
    reason: str  # "same-site" | "inundation"

    def __post_init__(self):
        if self.a == self.b:
            raise ScreeningError(f"conflict pair of {self.a} with itself")
        if self.b < self.a:  # normalize so each unordered pair stores once
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    def members(self) -> tuple[str, str]:
        return (self.a, self.b)


def _headroom(net: RiverNetwork, sid: str, candidates: set[str], _seen: frozenset = frozenset()) -> float:
    """Elevation budget above sid's foot before the pool reaches the nearest
    upstream candidate site's foot; headwater branches contribute their own
    relief instead."""
    seg = net[sid]
    ups = net.upstream_of(sid)
    if not ups:
        return seg.length_km * 1000.0 * seg.mean_slope
    budgets = []
    for u in ups:
        gain = net[u].foot_elevation_m - seg.foot_elevation_m
        if u in candidates:
            budgets.append(gain)
        else:
            budgets.append(gain + _headroom(net, u, candidates))
    return min(budgets)


def screen_sites(
    net: RiverNetwork,
    flows: Mapping[str, float],
    criteria: ScreeningCriteria,
    head_ladder: Iterable[float] = DEFAULT_HEAD_LADDER,
    width_coeff: float = DEFAULT_WIDTH_COEFF,
    efficiency: float = DEFAULT_EFFICIENCY,
) -> list[SiteGeometry]:
    """Candidate sites meeting all thresholds, with feasible head ladders.

    Heads come from ``head_ladder`` truncated to each site's elevation budget
    (the gain to the nearest upstream candidate location, walking through
    non-candidate segments); a site whose ladder empties falls back to the
    budget itself as its single head. Locations are the segments passing the
    flow and slope thresholds; head and capacity thresholds then prune
    variants/sites but do not re-open other sites' budgets.
    """
    missing = [sid for sid in net.ids() if sid not in flows]
    if missing:
        raise ScreeningError(f"no mean flow for segments {missing}")
    ladder = sorted(set(float(h) for h in head_ladder))
    if any(h <= 0 for h in ladder):
        raise ScreeningError("head ladder entries must be > 0")

    located = {
        sid
        for sid in net.ids()
        if flows[sid] >= criteria.min_mean_flow_m3s and net[sid].mean_slope >= criteria.min_slope
    }
    sites: list[SiteGeometry] = []
    for sid in sorted(located):
        seg = net[sid]
        budget = _headroom(net, sid, located)
        if budget <= 0:
            continue
        heads = [h for h in ladder if h <= budget + 1e-9]
        if not heads:
            heads = [budget]
        heads = [h for h in heads if h >= criteria.min_head_m]
        if not heads:
            continue
        capacity_mw = production_factor(max(heads), efficiency) * flows[sid] / 1000.0
        if capacity_mw < criteria.min_capacity_mw:
            continue
        sites.append(
            SiteGeometry(
                segment_id=sid,
                river_width_m=width_coeff * seg.drainage_area_km2**0.5,
                upstream_slope=seg.mean_slope,
                valley_half_width_slope=seg.valley_half_width_slope,
                foot_elevation_m=seg.foot_elevation_m,
                available_heads_m=tuple(heads),
                max_head_m=budget,
                mean_flow_m3s=float(flows[sid]),
            )
        )
    return sites


def exante_filter(
    variants: Iterable,
    max_unit_cost: float = MAX_UNIT_COST_USD_PER_KW,
    min_power_density: float = MIN_POWER_DENSITY_MW_PER_KM2,
) -> list:
    """Keep variants cheap enough per kW and dense enough per flooded km².

    Both thresholds are inclusive. A variant with no flooded area passes the
    density test outright.
    """
    kept = []
    for v in variants:
        if v.installed_kw <= 0:
            continue
        if v.capex_usd / v.installed_kw > max_unit_cost:
            continue
        if v.flooded_area_km2 > 0:
            density = (v.installed_kw / 1000.0) / v.flooded_area_km2
            if density < min_power_density:
                continue
        kept.append(v)
    return kept


def conflict_pairs(variants: Iterable, net: RiverNetwork) -> set[ConflictPair]:
    """Mutual exclusions: same-site pairs plus upstream pool inundation.

    Variant k conflicts with i when k sits on i's upstream path and the
    elevation gain from i's foot to k's foot is strictly below i's head (k's
    dam foot would sit inside i's full pool; an exactly-equal gain is the
    back-to-back cascade case and is allowed). The upstream walk prunes once
    the gain reaches the head, since gains only grow upstream.
    """
    vlist = sorted(variants, key=lambda v: v.id)
    ids = [v.id for v in vlist]
    if len(set(ids)) != len(ids):
        raise ScreeningError("duplicate variant ids")
    by_segment: dict[str, list] = {}
    for v in vlist:
        if v.segment_id not in net:
            raise ScreeningError(f"variant {v.id}: unknown segment {v.segment_id}")
        by_segment.setdefault(v.segment_id, []).append(v)

    pairs: set[ConflictPair] = set()
    for group in by_segment.values():
        for i in range(len(group)):
            for k in range(i + 1, len(group)):
                pairs.add(ConflictPair(group[i].id, group[k].id, "same-site"))

    for v in vlist:
        foot = net[v.segment_id].foot_elevation_m
        stack = list(net.upstream_of(v.segment_id))
        while stack:
            sid = stack.pop()
            gain = net[sid].foot_elevation_m - foot
            if gain >= v.gross_head_m:
                continue  # this foot and everything above it is out of the pool
            for other in by_segment.get(sid, ()):
                pairs.add(ConflictPair(v.id, other.id, "inundation"))
            stack.extend(net.upstream_of(sid))
    return pairs
