"""File-based store of planning runs.

Each run owns one directory under ``<store>/runs/`` holding the config
snapshot, the artifacts its pipeline stages produced and a ``record.json``
with the run's metadata.  A completed run is immutable: the store refuses
any further writes to it, so a pool file on disk can be trusted to be the
one the record describes.

What-if runs carry a revenue ledger.  Every entry names the run it was
computed in and the run it was compared against, so the chain of forgone
revenue across a negotiation stays reconstructible from the records alone.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import files

__all__ = ["RunError", "RunRecord", "RunStore", "LedgerEntry"]

_RUN_ID = re.compile(r"^run-(\d{4})$")


class RunError(RuntimeError):
    """Raised for unknown runs, finished runs being written to, and the like."""


@dataclass(frozen=True)
class LedgerEntry:
    """One what-if comparison: what the new constraint costs per year."""

    run_id: str
    baseline_run_id: str
    baseline_objective_usd_per_yr: float
    objective_usd_per_yr: float | None
    revenue_delta_usd_per_yr: float | None
    overrides: Mapping[str, Any]

    def as_doc(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "baseline_run_id": self.baseline_run_id,
            "baseline_objective_usd_per_yr": self.baseline_objective_usd_per_yr,
            "objective_usd_per_yr": self.objective_usd_per_yr,
            "revenue_delta_usd_per_yr": self.revenue_delta_usd_per_yr,
            "overrides": dict(self.overrides),
        }


@dataclass(frozen=True)
class RunRecord:
    """Metadata of one run; the artifacts live next to it in the run dir."""

    run_id: str
    created_at: float
    status: str = "open"  # open | complete | failed
    completed_at: float | None = None
    parent_run_id: str | None = None
    overrides: Mapping[str, Any] = field(default_factory=dict)
    ledger: tuple[LedgerEntry, ...] = ()
    error: str | None = None

    def as_doc(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "status": self.status,
            "completed_at": self.completed_at,
            "parent_run_id": self.parent_run_id,
            "overrides": dict(self.overrides),
            "ledger": [e.as_doc() for e in self.ledger],
            "error": self.error,
        }

    @staticmethod
    def from_doc(doc: Mapping[str, Any]) -> "RunRecord":
        ledger = tuple(
            LedgerEntry(
                run_id=e["run_id"],
                baseline_run_id=e["baseline_run_id"],
                baseline_objective_usd_per_yr=e["baseline_objective_usd_per_yr"],
                objective_usd_per_yr=e["objective_usd_per_yr"],
                revenue_delta_usd_per_yr=e["revenue_delta_usd_per_yr"],
                overrides=e.get("overrides", {}),
            )
            for e in doc.get("ledger", [])
        )
        return RunRecord(
            run_id=doc["run_id"],
            created_at=doc["created_at"],
            status=doc.get("status", "open"),
            completed_at=doc.get("completed_at"),
            parent_run_id=doc.get("parent_run_id"),
            overrides=doc.get("overrides", {}),
            ledger=ledger,
            error=doc.get("error"),
        )


class RunStore:
    """Runs under a root directory, numbered in creation order."""

    def __init__(self, root: str):
        self.root = os.path.abspath(root)
        os.makedirs(os.path.join(self.root, "runs"), exist_ok=True)

    # -- run lifecycle -----------------------------------------------------

    def create_run(
        self,
        *,
        parent_run_id: str | None = None,
        overrides: Mapping[str, Any] | None = None,
        ledger: tuple[LedgerEntry, ...] = (),
    ) -> RunRecord:
        if parent_run_id is not None:
            self.record(parent_run_id)  # must exist
        run_id = f"run-{self._next_number():04d}"
        os.makedirs(self._dir(run_id))
        record = RunRecord(
            run_id=run_id,
            created_at=time.time(),
            parent_run_id=parent_run_id,
            overrides=dict(overrides or {}),
            ledger=ledger,
        )
        self._write_record(record)
        return record

    def complete(self, run_id: str, *, ledger: tuple[LedgerEntry, ...] | None = None) -> RunRecord:
        record = self.record(run_id)
        if record.status != "open":
            raise RunError(f"{run_id} is already {record.status}")
        updates: dict[str, Any] = {"status": "complete", "completed_at": time.time()}
        if ledger is not None:
            updates["ledger"] = ledger
        record = dataclasses.replace(record, **updates)
        self._write_record(record)
        return record

    def fail(self, run_id: str, error: str) -> RunRecord:
        record = self.record(run_id)
        if record.status != "open":
            raise RunError(f"{run_id} is already {record.status}")
        record = dataclasses.replace(
            record, status="failed", completed_at=time.time(), error=error
        )
        self._write_record(record)
        return record

    # -- lookup ------------------------------------------------------------

    def record(self, run_id: str) -> RunRecord:
        path = os.path.join(self._dir(run_id), files.RECORD_FILE)
        if not os.path.exists(path):
            raise RunError(f"no such run: {run_id}")
        with open(path, "r", encoding="utf-8") as fh:
            return RunRecord.from_doc(json.load(fh))

    def run_ids(self) -> list[str]:
        runs_dir = os.path.join(self.root, "runs")
        ids = [d for d in os.listdir(runs_dir) if _RUN_ID.match(d)]
        return sorted(ids)

    def records(self) -> list[RunRecord]:
        return [self.record(rid) for rid in self.run_ids()]

    def latest(self, *, status: str | None = None) -> RunRecord | None:
        best = None
        for rid in self.run_ids():
            record = self.record(rid)
            if status is not None and record.status != status:
                continue
            best = record
        return best

    def run_dir(self, run_id: str) -> str:
        path = self._dir(run_id)
        if not os.path.isdir(path):
            raise RunError(f"no such run: {run_id}")
        return path

    # -- artifacts ---------------------------------------------------------

    def write_artifact(self, run_id: str, name: str, text: str) -> str:
        record = self.record(run_id)
        if record.status != "open":
            raise RunError(f"{run_id} is {record.status}; its artifacts are frozen")
        path = os.path.join(self._dir(run_id), name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return path

    def artifact_path(self, run_id: str, name: str) -> str:
        path = os.path.join(self.run_dir(run_id), name)
        if not os.path.exists(path):
            raise RunError(f"{run_id} has no {name}")
        return path

    def has_artifact(self, run_id: str, name: str) -> bool:
        return os.path.exists(os.path.join(self.run_dir(run_id), name))

    def read_artifact(self, run_id: str, name: str) -> str:
        with open(self.artifact_path(run_id, name), "r", encoding="utf-8") as fh:
            return fh.read()

    def append_log(self, run_id: str, line: str) -> None:
        # The log is exempt from the freeze: audits of finished runs leave
        # a trace too.  Everything else in the directory stays immutable.
        path = os.path.join(self.run_dir(run_id), files.LOG_FILE)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line.rstrip("\n") + "\n")

    # -- internals ----------------------------------------------------------

    def _dir(self, run_id: str) -> str:
        if not _RUN_ID.match(run_id):
            raise RunError(f"malformed run id: {run_id!r}")
        return os.path.join(self.root, "runs", run_id)

    def _next_number(self) -> int:
        numbers = [int(_RUN_ID.match(d).group(1)) for d in self.run_ids()]
        return max(numbers, default=0) + 1

    def _write_record(self, record: RunRecord) -> None:
        path = os.path.join(self._dir(record.run_id), files.RECORD_FILE)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(record.as_doc(), fh, indent=2, sort_keys=True)
            fh.write("\n")
