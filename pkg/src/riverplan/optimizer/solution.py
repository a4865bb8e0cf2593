"""Solution objects: alternatives, the improving pool, and their export.

An Alternative is a full plan: integral selection, fragmentation indicators,
per-scenario dispatch, expected energy, metric values and satisfaction
scores. The pool keeps every improving incumbent in the order found, so the
last entry is the best plan and earlier ones document the search's progress.

Pool export is a plain JSON document with a fixed summary table per
alternative (net revenue, project count, installed MW, free-flowing km,
flooded km2) and no timestamps, so identical runs export identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..metrics import FLOODED_KM2, FREE_FLOWING_KM
from .dispatch import DispatchResult, lp_dispatch
from .problem import (
    PortfolioProblem,
    ProblemError,
    fragmented_under,
    satisfaction_scores,
    selection_metrics,
)

__all__ = ["Alternative", "SolutionPool", "evaluate_selection", "dump_pool", "load_pool"]


@dataclass
class Alternative:
    x: dict  # variant id -> 0/1
    y: dict  # segment id -> 0/1
    dispatch: dict  # scenario label -> {turbine_m3s, storage_m3, spill_m3s}
    expected_energy_kwh: dict  # selected variant id -> kWh/yr
    objective_usd_per_yr: float
    metrics: dict
    satisfaction: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def selected(self) -> list[str]:
        return sorted(vid for vid, val in self.x.items() if val)


@dataclass
class SolutionPool:
    alternatives: tuple = ()
    status: str = "optimal"  # optimal | gap-limit | time-limit | infeasible
    final_gap: float | None = None
    best_bound: float | None = None
    n_lp_solves: int = 0

    def incumbent(self) -> Alternative | None:
        return self.alternatives[-1] if self.alternatives else None


def _build_alternative(
    problem: PortfolioProblem, selected: set, disp: DispatchResult
) -> Alternative:
    values = selection_metrics(problem, selected)
    scores = satisfaction_scores(problem, values)
    if scores is None:
        raise ProblemError("selection leaves a satisfaction scoring band")
    frag = fragmented_under(problem, selected)
    x = {v.id: (1 if v.id in selected else 0) for v in problem.variants}
    y = {sid: (1 if sid in frag else 0) for sid in problem.net.ids()}
    dispatch = {
        label: {
            "turbine_m3s": disp.turbine_m3s[label],
            "storage_m3": disp.storage_m3[label],
            "spill_m3s": disp.spill_m3s[label],
        }
        for label in problem.inflows.labels
    }
    summary = {
        "net_revenue_usd_per_yr": float(disp.objective_usd_per_yr),
        "project_count": len(selected),
        "installed_mw": sum(problem.variant(vid).installed_kw for vid in selected) / 1000.0,
        "free_flowing_km": values[FREE_FLOWING_KM],
        "flooded_km2": values[FLOODED_KM2],
    }
    return Alternative(
        x=x,
        y=y,
        dispatch=dispatch,
        expected_energy_kwh=dict(disp.energy_kwh),
        objective_usd_per_yr=float(disp.objective_usd_per_yr),
        metrics=values,
        satisfaction=scores,
        summary=summary,
    )


def evaluate_selection(problem: PortfolioProblem, selected) -> Alternative:
    """Full plan for one integral selection, dispatch solved to optimality.

    Selection-level feasibility is the caller's job; this evaluates and
    reports. Works for the empty selection too, with or without variants.
    """
    sel = set(selected)
    if problem.variants:
        disp = lp_dispatch(problem, sel)
    else:
        disp = DispatchResult(
            objective_usd_per_yr=0.0,
            energy_kwh={},
            turbine_m3s={label: {} for label in problem.inflows.labels},
            storage_m3={label: {} for label in problem.inflows.labels},
            spill_m3s={label: {} for label in problem.inflows.labels},
        )
    return _build_alternative(problem, sel, disp)


def _alt_doc(rank: int, alt: Alternative) -> dict:
    return {
        "rank": rank,
        "objective_usd_per_yr": alt.objective_usd_per_yr,
        "selection": alt.selected(),
        "x": alt.x,
        "y": alt.y,
        "dispatch": {
            label: {kind: {k: list(vals) for k, vals in block[kind].items()} for kind in block}
            for label, block in alt.dispatch.items()
        },
        "expected_energy_kwh": alt.expected_energy_kwh,
        "metrics": alt.metrics,
        "satisfaction": alt.satisfaction,
        "summary": alt.summary,
    }


def dump_pool(pool: SolutionPool) -> str:
    """Deterministic JSON export; same pool in, same bytes out."""
    doc = {
        "status": pool.status,
        "final_gap": pool.final_gap,
        "best_bound": pool.best_bound,
        "n_lp_solves": pool.n_lp_solves,
        "alternatives": [_alt_doc(i + 1, a) for i, a in enumerate(pool.alternatives)],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_pool(source) -> SolutionPool:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if "\n" not in text and text.endswith(".json"):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
    doc = json.loads(text)
    alts = []
    for d in doc["alternatives"]:
        alts.append(
            Alternative(
                x=d["x"],
                y=d["y"],
                dispatch={
                    label: {
                        kind: {k: tuple(vals) for k, vals in block[kind].items()}
                        for kind in block
                    }
                    for label, block in d["dispatch"].items()
                },
                expected_energy_kwh=d["expected_energy_kwh"],
                objective_usd_per_yr=d["objective_usd_per_yr"],
                metrics=d["metrics"],
                satisfaction=d.get("satisfaction", {}),
                summary=d.get("summary", {}),
            )
        )
    return SolutionPool(
        alternatives=tuple(alts),
        status=doc["status"],
        final_gap=doc.get("final_gap"),
        best_bound=doc.get("best_bound"),
        n_lp_solves=doc.get("n_lp_solves", 0),
    )
