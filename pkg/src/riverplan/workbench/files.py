"""Run directory artifact names and the two small formats the workbench owns.

Networks, gauge records, impact tables, variants, problems and pools all
have load/dump pairs in their owning modules.  The two leftovers, screened
sites and conflict pairs, are serialized here so every pipeline stage can
hand its output to the next through a file.
"""

from __future__ import annotations

import json

from ..screening import ConflictPair, ScreeningError, SiteGeometry

__all__ = [
    "CONFIG_FILE",
    "SITES_FILE",
    "DESIGNS_FILE",
    "CANDIDATES_FILE",
    "CONFLICTS_FILE",
    "PROBLEM_FILE",
    "POOL_FILE",
    "AUDIT_FILE",
    "RECORD_FILE",
    "LOG_FILE",
    "dump_sites",
    "load_sites",
    "dump_conflicts",
    "load_conflicts",
]

CONFIG_FILE = "config.json"
SITES_FILE = "sites.json"
DESIGNS_FILE = "designs.json"
CANDIDATES_FILE = "candidates.json"
CONFLICTS_FILE = "conflicts.json"
PROBLEM_FILE = "problem.json"
POOL_FILE = "pool.json"
AUDIT_FILE = "audit.json"
RECORD_FILE = "record.json"
LOG_FILE = "log.txt"

_SITE_FIELDS = (
    "segment_id",
    "river_width_m",
    "upstream_slope",
    "valley_half_width_slope",
    "foot_elevation_m",
    "max_head_m",
    "mean_flow_m3s",
)


def dump_sites(sites: list[SiteGeometry]) -> str:
    rows = []
    for s in sites:
        row = {name: getattr(s, name) for name in _SITE_FIELDS}
        row["available_heads_m"] = list(s.available_heads_m)
        rows.append(row)
    return json.dumps({"sites": rows}, indent=2, sort_keys=True) + "\n"


def load_sites(source) -> list[SiteGeometry]:
    doc = _read_json(source, "site list")
    if "sites" not in doc:
        raise ScreeningError("site document lacks a 'sites' array")
    sites = []
    for row in doc["sites"]:
        kwargs = {name: row[name] for name in _SITE_FIELDS}
        kwargs["available_heads_m"] = tuple(row["available_heads_m"])
        sites.append(SiteGeometry(**kwargs))
    return sites


def dump_conflicts(conflicts) -> str:
    rows = [
        {"a": c.a, "b": c.b, "reason": c.reason}
        for c in sorted(conflicts, key=lambda c: (c.a, c.b))
    ]
    return json.dumps({"conflicts": rows}, indent=2, sort_keys=True) + "\n"


def load_conflicts(source) -> set[ConflictPair]:
    doc = _read_json(source, "conflict list")
    if "conflicts" not in doc:
        raise ScreeningError("conflict document lacks a 'conflicts' array")
    return {ConflictPair(r["a"], r["b"], r["reason"]) for r in doc["conflicts"]}


def _read_json(source, what: str) -> dict:
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScreeningError(f"{what} is not valid JSON: {exc}") from exc
