"""River network model: loading, synthesis, upstream topology and fragmentation.

A network is a forest of directed river segments. Each segment drains into at
most one downstream segment; segments without a downstream id are basin mouths.
Dams fragment the segment they sit on plus everything upstream of it, unless
they are passable (fish ladder) or the fragmentation pre-exists (natural
barrier / existing dam).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "NetworkError",
    "Segment",
    "RiverNetwork",
    "FragmentationState",
    "load_network",
    "dump_network",
    "synth_basin",
    "upstream_set",
    "fragmentation",
    "free_flowing_length",
]

# Fixed field order of the network file schema.
SEGMENT_FIELDS = (
    "id",
    "downstream_id",
    "length_km",
    "foot_elevation_m",
    "drainage_area_km2",
    "mean_slope",
    "valley_half_width_slope",
    "natural_barrier",
)


class NetworkError(ValueError):
    """A river network violates a structural invariant."""


@dataclass(frozen=True)
class Segment:
    """One river segment; ``downstream_id is None`` marks a basin mouth.

    ``foot_elevation_m`` is the ground elevation at the segment's downstream
    end, where a dam would stand. ``valley_half_width_slope`` is the lateral
    side slope of the valley (m horizontal per m vertical), used for backwater
    geometry. ``natural_barrier`` marks pre-existing fragmentation.
    """

    id: str
    downstream_id: str | None
    length_km: float
    foot_elevation_m: float
    drainage_area_km2: float
    mean_slope: float
    valley_half_width_slope: float
    natural_barrier: bool = False

    def __post_init__(self):
        if self.length_km <= 0:
            raise NetworkError(f"segment {self.id}: length must be > 0, got {self.length_km}")
        if self.drainage_area_km2 <= 0:
            raise NetworkError(
                f"segment {self.id}: drainage area must be > 0, got {self.drainage_area_km2}"
            )
        if self.mean_slope <= 0:
            raise NetworkError(f"segment {self.id}: mean slope must be > 0, got {self.mean_slope}")
        if self.valley_half_width_slope < 0:
            raise NetworkError(f"segment {self.id}: valley side slope must be >= 0")


class RiverNetwork:
    """Validated forest of river segments with upstream/downstream indexes."""

    def __init__(self, segments: Iterable[Segment]):
        self.segments: dict[str, Segment] = {}
        for seg in segments:
            if seg.id in self.segments:
                raise NetworkError(f"duplicate segment id {seg.id}")
            self.segments[seg.id] = seg
        self._upstream: dict[str, tuple[str, ...]] = {sid: () for sid in self.segments}
        self._validate_references()
        self._validate_acyclic()
        ups: dict[str, list[str]] = {sid: [] for sid in self.segments}
        for seg in self.segments.values():
            if seg.downstream_id is not None:
                ups[seg.downstream_id].append(seg.id)
        self._upstream = {sid: tuple(sorted(ids)) for sid, ids in ups.items()}
        self._validate_monotonicity()

    def _validate_references(self):
        for seg in self.segments.values():
            down = seg.downstream_id
            if down is not None and down not in self.segments:
                raise NetworkError(f"segment {seg.id}: dangling downstream reference {down!r}")
            if down == seg.id:
                raise NetworkError(f"segment {seg.id}: cycle detected (self reference)")

    def _validate_acyclic(self):
        # Walk each segment to a mouth; revisiting a segment on the same walk is a cycle.
        state: dict[str, int] = {}  # 0 = on current walk, 1 = cleared
        for start in self.segments:
            if state.get(start) == 1:
                continue
            path = []
            cur: str | None = start
            while cur is not None:
                if state.get(cur) == 1:
                    break
                if state.get(cur) == 0:
                    raise NetworkError(f"segment {cur}: cycle detected")
                state[cur] = 0
                path.append(cur)
                cur = self.segments[cur].downstream_id
            for sid in path:
                state[sid] = 1

    def _validate_monotonicity(self):
        for seg in self.segments.values():
            up_ids = self._upstream[seg.id]
            if not up_ids:
                continue
            up_area = sum(self.segments[u].drainage_area_km2 for u in up_ids)
            if seg.drainage_area_km2 < up_area - 1e-9:
                raise NetworkError(
                    f"segment {seg.id}: drainage area {seg.drainage_area_km2} km2 is below the "
                    f"sum of its upstream segments ({up_area} km2)"
                )
            for u in up_ids:
                if self.segments[u].foot_elevation_m < seg.foot_elevation_m - 1e-9:
                    raise NetworkError(
                        f"segment {u}: foot elevation below downstream segment {seg.id}"
                    )

    def __contains__(self, sid: str) -> bool:
        return sid in self.segments

    def __len__(self) -> int:
        return len(self.segments)

    def __getitem__(self, sid: str) -> Segment:
        return self.segments[sid]

    def ids(self) -> list[str]:
        return sorted(self.segments)

    def mouths(self) -> list[str]:
        return sorted(s.id for s in self.segments.values() if s.downstream_id is None)

    def upstream_of(self, sid: str) -> tuple[str, ...]:
        """Immediate upstream neighbours of ``sid``."""
        if sid not in self.segments:
            raise KeyError(f"unknown segment id {sid!r}")
        return self._upstream[sid]

    def downstream_of(self, sid: str) -> str | None:
        if sid not in self.segments:
            raise KeyError(f"unknown segment id {sid!r}")
        return self.segments[sid].downstream_id

    def total_length_km(self) -> float:
        return float(sum(s.length_km for s in self.segments.values()))

    def topological_order(self) -> list[str]:
        """Segment ids ordered headwaters first, mouths last."""
        order: list[str] = []
        seen: set[str] = set()

        def visit(sid: str):
            if sid in seen:
                return
            seen.add(sid)
            for up in self._upstream[sid]:
                visit(up)
            order.append(sid)

        for mouth in self.mouths():
            visit(mouth)
        return order


@dataclass
class FragmentationState:
    """Per-segment connectivity loss; ``fragmented[sid]`` is True when blocked."""

    fragmented: dict[str, bool] = field(default_factory=dict)

    def fragmented_ids(self) -> set[str]:
        return {sid for sid, frag in self.fragmented.items() if frag}


def load_network(source) -> RiverNetwork:
    """Load a network from a structured text document.

    ``source`` may be a path, a file object, or the document text itself.
    Accepted layouts: a JSON array of segment records, a JSON object with a
    ``segments`` array, or JSON Lines with one record per line. Records carry
    exactly the fields in ``SEGMENT_FIELDS``; a missing/null ``downstream_id``
    marks the mouth.
    """
    text = _read_text(source)
    records = _parse_records(text)
    segments = []
    for rec in records:
        if "id" not in rec:
            raise NetworkError("segment record without an id")
        sid = str(rec["id"])
        unknown = set(rec) - set(SEGMENT_FIELDS)
        if unknown:
            raise NetworkError(f"segment {sid}: unknown fields {sorted(unknown)}")
        missing = {f for f in SEGMENT_FIELDS if f not in rec and f not in ("downstream_id", "natural_barrier")}
        if missing:
            raise NetworkError(f"segment {sid}: missing fields {sorted(missing)}")
        down = rec.get("downstream_id")
        segments.append(
            Segment(
                id=sid,
                downstream_id=None if down in (None, "") else str(down),
                length_km=float(rec["length_km"]),
                foot_elevation_m=float(rec["foot_elevation_m"]),
                drainage_area_km2=float(rec["drainage_area_km2"]),
                mean_slope=float(rec["mean_slope"]),
                valley_half_width_slope=float(rec["valley_half_width_slope"]),
                natural_barrier=bool(rec.get("natural_barrier", False)),
            )
        )
    return RiverNetwork(segments)


def dump_network(net: RiverNetwork) -> str:
    """Serialize a network to the JSON document accepted by ``load_network``."""
    records = []
    for sid in net.ids():
        seg = net[sid]
        records.append(
            {
                "id": seg.id,
                "downstream_id": seg.downstream_id,
                "length_km": seg.length_km,
                "foot_elevation_m": seg.foot_elevation_m,
                "drainage_area_km2": seg.drainage_area_km2,
                "mean_slope": seg.mean_slope,
                "valley_half_width_slope": seg.valley_half_width_slope,
                "natural_barrier": seg.natural_barrier,
            }
        )
    return json.dumps({"segments": records}, indent=2, sort_keys=True)


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, Path):
        return source.read_text()
    text = str(source)
    # A short single-line string with no JSON delimiters is a path.
    if "{" not in text and "[" not in text and "\n" not in text:
        return Path(text).read_text()
    return text


def _parse_records(text: str) -> list[dict]:
    stripped = text.strip()
    if not stripped:
        raise NetworkError("empty network document")
    try:
        doc = json.loads(stripped)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, list):
        return doc
    if isinstance(doc, dict):
        if "segments" not in doc:
            raise NetworkError("network document object must have a 'segments' array")
        return doc["segments"]
    # JSON Lines fallback: one record per non-empty line.
    records = []
    for lineno, line in enumerate(stripped.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise NetworkError(f"network document line {lineno}: not valid JSON ({exc})") from None
    return records


def synth_basin(
    depth: int,
    branching: int,
    seed: int,
    length_range: tuple[float, float] = (5.0, 25.0),
    slope_range: tuple[float, float] = (0.002, 0.02),
) -> RiverNetwork:
    """Generate a deterministic synthetic basin: a full ``branching``-ary tree.

    ``depth`` levels, mouth at the root. Elevations rise along each segment by
    length * slope, drainage areas accumulate downstream. Same seed, same
    network, bit for bit.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if branching < 1:
        raise ValueError(f"branching must be >= 1, got {branching}")
    rng = np.random.default_rng(seed)
    raw: list[dict] = []

    def build(level: int, downstream_idx: int | None) -> int:
        idx = len(raw)
        raw.append(
            {
                "idx": idx,
                "down": downstream_idx,
                "length": float(rng.uniform(*length_range)),
                "slope": float(rng.uniform(*slope_range)),
                "half_width_slope": float(rng.uniform(1.5, 4.0)),
                "local_area": float(rng.uniform(60.0, 300.0)),
                "children": [],
            }
        )
        if level < depth:
            for _ in range(branching):
                child = build(level + 1, idx)
                raw[idx]["children"].append(child)
        return idx

    build(1, None)

    # Drainage areas: local plus everything upstream (children processed first).
    def area(idx: int) -> float:
        node = raw[idx]
        total = node["local_area"] + sum(area(c) for c in node["children"])
        node["area"] = total
        return total

    area(0)

    # Elevations: mouth foot at a fixed base, each child's foot at the parent's top.
    base_elevation = 50.0
    raw[0]["foot"] = base_elevation
    stack = [0]
    while stack:
        idx = stack.pop()
        node = raw[idx]
        top = node["foot"] + node["length"] * 1000.0 * node["slope"]
        for c in node["children"]:
            raw[c]["foot"] = top
            stack.append(c)

    width = max(3, len(str(len(raw))))
    segs = [
        Segment(
            id=f"S{node['idx'] + 1:0{width}d}",
            downstream_id=None if node["down"] is None else f"S{node['down'] + 1:0{width}d}",
            length_km=round(node["length"], 6),
            foot_elevation_m=round(node["foot"], 6),
            drainage_area_km2=round(node["area"], 6),
            mean_slope=round(node["slope"], 8),
            valley_half_width_slope=round(node["half_width_slope"], 6),
            natural_barrier=False,
        )
        for node in raw
    ]
    return RiverNetwork(segs)


def upstream_set(net: RiverNetwork, sid: str) -> set[str]:
    """All segments strictly upstream of ``sid`` (transitive closure)."""
    if sid not in net:
        raise KeyError(f"unknown segment id {sid!r}")
    found: set[str] = set()
    stack = list(net.upstream_of(sid))
    while stack:
        cur = stack.pop()
        if cur in found:
            continue
        found.add(cur)
        stack.extend(net.upstream_of(cur))
    return found


def _normalize_dams(dams) -> list[tuple[str, bool]]:
    """Accept {id: passable} mappings or iterables of (id, passable) pairs / bare ids."""
    if isinstance(dams, Mapping):
        return [(str(sid), bool(p)) for sid, p in dams.items()]
    out = []
    for entry in dams:
        if isinstance(entry, str):
            out.append((entry, False))
        else:
            sid, passable = entry
            out.append((str(sid), bool(passable)))
    return out


def fragmentation(net: RiverNetwork, dams) -> FragmentationState:
    """Connectivity state after placing ``dams``: (segment id, passable) pairs.

    A non-passable dam fragments its own segment and everything upstream of
    it. Passable dams fragment nothing. Segments flagged as natural barriers
    are treated as permanent non-passable dams.
    """
    blocked: list[str] = []
    for sid, passable in _normalize_dams(dams):
        if sid not in net:
            raise KeyError(f"unknown segment id {sid!r}")
        if not passable:
            blocked.append(sid)
    blocked.extend(s.id for s in net.segments.values() if s.natural_barrier)

    state = {sid: False for sid in net.segments}
    stack = list(blocked)
    while stack:
        cur = stack.pop()
        if state[cur]:
            continue
        state[cur] = True
        stack.extend(net.upstream_of(cur))
    return FragmentationState(fragmented=state)


def free_flowing_length(net: RiverNetwork, dams) -> float:
    """Total length (km) of segments left unfragmented by ``dams``.

    The segment hosting a non-passable dam counts as fragmented, as does its
    entire upstream set.
    """
    state = fragmentation(net, dams)
    return float(
        sum(net[sid].length_km for sid, frag in state.fragmented.items() if not frag)
    )
