"""HTTP planning service for the stakeholder console.

The service wraps one workspace and its run store.  Reads are plain
GETs; solving happens through jobs: POST /v1/solve validates the
requested overrides immediately (4xx with the owning module's message),
queues the work, and returns a job id the client polls.  One worker
thread executes jobs in submission order, so at most one solve runs at
a time and every run it records is immutable once completed.

Endpoints, all under /v1:

    GET  /v1/network                     segments, fragmentation baseline,
                                         control ranges for the UI
    GET  /v1/candidates                  designed variants and conflicts
    GET  /v1/runs                        run records, oldest first
    GET  /v1/runs/{run_id}               one record with its ledger
    GET  /v1/runs/{run_id}/pool          solution pool and metric table
    GET  /v1/runs/{run_id}/alternatives/{index}
                                         selection, dispatch, per-segment y
    POST /v1/solve                       {"overrides": {...}, "baseline_run_id": ...}
    GET  /v1/jobs/{job_id}               queued | running | done | failed
"""

from __future__ import annotations

import json
import queue
import threading
from typing import Any, Mapping

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..engineering import dump_variants
from ..metrics import MetricsError
from ..optimizer import ProblemError, dump_pool, dump_problem, load_pool, load_problem, solve
from ..optimizer.problem import selection_metrics
from .config import ConfigError, PlanningConfig, dump_config
from .files import CANDIDATES_FILE, CONFIG_FILE, CONFLICTS_FILE, POOL_FILE, PROBLEM_FILE, dump_conflicts
from .pipeline import (
    build_portfolio_problem,
    design_step,
    filter_step,
    load_inputs,
    parse_plan_overrides,
    screen_step,
)
from .runs import LedgerEntry, RunError, RunStore

_VALIDATION_ERRORS = (ConfigError, ProblemError, MetricsError, ValueError)


def _error(status: int, exc_type: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"type": exc_type, "message": message}})


class SolveRequest(BaseModel):
    overrides: dict[str, Any] = {}
    baseline_run_id: str | None = None


class _Engine:
    """Workspace state plus the single-worker job queue."""

    def __init__(self, cfg: PlanningConfig, workspace: str):
        self.cfg = cfg
        self.store = RunStore(workspace)
        self.lock = threading.Lock()

        inputs = load_inputs(cfg)
        sites = screen_step(cfg, inputs)
        designs = design_step(cfg, inputs, sites)
        self.candidates, self.conflicts = filter_step(cfg, inputs.net, designs)
        self.base_problem = build_portfolio_problem(cfg, inputs, self.candidates, self.conflicts)

        self.jobs: dict[str, dict[str, Any]] = {}
        self._queue: "queue.Queue[str | None]" = queue.Queue()
        self._n_jobs = 0
        self._worker = threading.Thread(target=self._run_jobs, name="solve-worker", daemon=True)
        self._worker.start()

    # -- reads ---------------------------------------------------------------

    def network_doc(self) -> dict[str, Any]:
        p = self.base_problem
        net = p.net
        segments = [
            {
                "id": s.id,
                "downstream_id": s.downstream_id,
                "length_km": s.length_km,
                "foot_elevation_m": s.foot_elevation_m,
                "drainage_area_km2": s.drainage_area_km2,
                "mean_slope": s.mean_slope,
                "natural_barrier": s.natural_barrier,
            }
            for s in sorted(net.segments.values(), key=lambda s: s.id)
        ]
        everything = selection_metrics(p, [v.id for v in p.variants])
        cons = p.constraints
        bound_by_id = {m.id: m for m in cons.metric_bounds}
        metric_controls = []
        for mid in sorted(everything):
            m = bound_by_id.get(mid)
            metric_controls.append(
                {
                    "id": mid,
                    "bound_kind": m.bound_kind if m else "max",
                    "value": m.bound if m else None,
                    "min": 0.0,
                    "max": everything[mid],
                }
            )
        return {
            "segments": segments,
            "baseline": {
                "fragmented_ids": sorted(p.baseline_fragmented),
                "free_flowing_km": p.baseline_free_flowing_km,
                "total_length_km": net.total_length_km(),
            },
            "controls": {
                "min_free_flowing_km": {
                    "min": 0.0,
                    "max": p.baseline_free_flowing_km,
                    "value": cons.min_free_flowing_km,
                },
                "energy_price_usd_per_kwh": {
                    "min": 0.0,
                    "value": p.econ.energy_price_usd_per_kwh,
                },
                "capacity_price_usd_per_kw_yr": {
                    "min": 0.0,
                    "value": p.econ.capacity_price_usd_per_kw_yr,
                },
                "metrics": metric_controls,
            },
        }

    def candidates_doc(self) -> dict[str, Any]:
        doc = json.loads(dump_variants(self.candidates))
        doc["conflicts"] = json.loads(dump_conflicts(self.conflicts))["conflicts"]
        return doc

    def pool_doc(self, run_id: str) -> dict[str, Any]:
        return json.loads(self.store.read_artifact(run_id, POOL_FILE))

    # -- solving -------------------------------------------------------------

    def resolve_baseline(self, run_id: str | None):
        """The run a solve request amends: explicit id or latest completed."""
        if run_id is not None:
            rec = self.store.record(run_id)  # RunError -> 404 at the route
            if rec.status != "complete":
                raise ConfigError(f"baseline {run_id} is {rec.status}, not complete")
        else:
            rec = self.store.latest(status="complete")
        if rec is None:
            return None, self.base_problem, None
        problem = load_problem(self.store.read_artifact(rec.run_id, PROBLEM_FILE))
        pool = load_pool(self.store.read_artifact(rec.run_id, POOL_FILE))
        return rec, problem, pool

    def enqueue(self, problem, baseline_rec, baseline_pool, overrides: Mapping[str, Any]) -> str:
        with self.lock:
            self._n_jobs += 1
            job_id = f"job-{self._n_jobs:04d}"
            self.jobs[job_id] = {
                "job_id": job_id,
                "status": "queued",
                "run_id": None,
                "progress": {},
                "error": None,
                "_problem": problem,
                "_baseline": baseline_rec,
                "_baseline_pool": baseline_pool,
                "_overrides": dict(overrides),
            }
        self._queue.put(job_id)
        return job_id

    def job_doc(self, job_id: str) -> dict[str, Any] | None:
        job = self.jobs.get(job_id)
        if job is None:
            return None
        return {k: v for k, v in job.items() if not k.startswith("_")}

    def _run_jobs(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            self._execute(self.jobs[job_id])

    def _execute(self, job: dict[str, Any]) -> None:
        job["status"] = "running"
        baseline = job["_baseline"]
        overrides = job["_overrides"]
        with self.lock:
            rec = self.store.create_run(
                parent_run_id=baseline.run_id if baseline else None,
                overrides=overrides,
            )
        job["run_id"] = rec.run_id

        def on_progress(ev: dict) -> None:
            job["progress"] = {
                "pool_size": ev.get("pool_size"),
                "objective": ev.get("objective"),
                "bound": ev.get("bound"),
                "gap": ev.get("gap"),
                "lp_solves": ev.get("lp_solves"),
            }

        try:
            pool = solve(job["_problem"], self.cfg.solver_options(on_progress=on_progress))
            ledger = baseline.ledger if baseline else ()
            if baseline is not None and overrides:
                base_pool = job["_baseline_pool"]
                base_inc = base_pool.incumbent() if base_pool else None
                inc = pool.incumbent()
                if base_inc is not None:
                    entry = LedgerEntry(
                        run_id=rec.run_id,
                        baseline_run_id=baseline.run_id,
                        baseline_objective_usd_per_yr=base_inc.objective_usd_per_yr,
                        objective_usd_per_yr=None if inc is None else inc.objective_usd_per_yr,
                        revenue_delta_usd_per_yr=(
                            None if inc is None
                            else base_inc.objective_usd_per_yr - inc.objective_usd_per_yr
                        ),
                        overrides=overrides,
                    )
                    ledger = ledger + (entry,)
            with self.lock:
                self.store.write_artifact(rec.run_id, CONFIG_FILE, dump_config(self.cfg))
                self.store.write_artifact(rec.run_id, CANDIDATES_FILE, dump_variants(self.candidates))
                self.store.write_artifact(rec.run_id, PROBLEM_FILE, dump_problem(job["_problem"]))
                self.store.write_artifact(rec.run_id, POOL_FILE, dump_pool(pool))
                self.store.complete(rec.run_id, ledger=ledger)
            job["status"] = "done"
        except Exception as exc:  # noqa: BLE001 - job must record any failure
            with self.lock:
                self.store.fail(rec.run_id, f"{type(exc).__name__}: {exc}")
            job["error"] = {"type": type(exc).__name__, "message": str(exc)}
            job["status"] = "failed"
        finally:
            for key in ("_problem", "_baseline_pool"):
                job[key] = None

    def shutdown(self) -> None:
        self._queue.put(None)
        self._worker.join(timeout=10)


def build_app(cfg: PlanningConfig, workspace: str) -> FastAPI:
    """Wire the engine for ``workspace`` into a FastAPI application."""
    engine = _Engine(cfg, workspace)
    app = FastAPI(title="riverplan", version="1")
    app.state.engine = engine
    # the planning console is served separately during development; this is
    # a desk tool without auth, so any origin may read it
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET", "POST"], allow_headers=["*"]
    )

    @app.get("/v1/network")
    def get_network():
        return engine.network_doc()

    @app.get("/v1/candidates")
    def get_candidates():
        return engine.candidates_doc()

    @app.get("/v1/runs")
    def get_runs():
        return {"runs": [r.as_doc() for r in engine.store.records()]}

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return engine.store.record(run_id).as_doc()
        except RunError as exc:
            return _error(404, "RunError", str(exc))

    @app.get("/v1/runs/{run_id}/pool")
    def get_pool(run_id: str):
        try:
            engine.store.record(run_id)
            return engine.pool_doc(run_id)
        except (RunError, FileNotFoundError) as exc:
            return _error(404, "RunError", str(exc))

    @app.get("/v1/runs/{run_id}/alternatives/{index}")
    def get_alternative(run_id: str, index: int):
        try:
            engine.store.record(run_id)
            doc = engine.pool_doc(run_id)
        except (RunError, FileNotFoundError) as exc:
            return _error(404, "RunError", str(exc))
        alts = doc["alternatives"]
        if not 0 <= index < len(alts):
            return _error(404, "RunError", f"run {run_id} has no alternative {index}")
        return alts[index]

    @app.post("/v1/solve")
    def post_solve(body: SolveRequest):
        try:
            baseline_rec, baseline_problem, baseline_pool = engine.resolve_baseline(
                body.baseline_run_id
            )
        except RunError as exc:
            return _error(404, "RunError", str(exc))
        except _VALIDATION_ERRORS as exc:
            return _error(400, type(exc).__name__, str(exc))
        try:
            if body.overrides:
                amended = baseline_problem.with_overrides(**parse_plan_overrides(body.overrides))
            else:
                amended = baseline_problem
        except _VALIDATION_ERRORS as exc:
            return _error(400, type(exc).__name__, str(exc))
        job_id = engine.enqueue(amended, baseline_rec, baseline_pool, body.overrides)
        return {"job_id": job_id, "status": "queued"}

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        doc = engine.job_doc(job_id)
        if doc is None:
            return _error(404, "RunError", f"unknown job {job_id}")
        return doc

    return app
