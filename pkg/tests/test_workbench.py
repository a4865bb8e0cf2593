"""Workbench tests: config round trips, the run store, and the CLI pipeline."""

import json
import os

import pytest

from riverplan.optimizer import load_pool, load_problem
from riverplan.workbench import (
    ConfigError,
    PlanningConfig,
    RunError,
    RunStore,
    dump_config,
    load_config,
)
from riverplan.workbench.cli import main
from riverplan.workbench.config import apply_overrides
from riverplan.workbench.files import (
    CANDIDATES_FILE,
    CONFIG_FILE,
    CONFLICTS_FILE,
    DESIGNS_FILE,
    POOL_FILE,
    PROBLEM_FILE,
    SITES_FILE,
)
from riverplan.workbench.fixture import FIXTURE_SEED, write_fixture
from riverplan.workbench.runs import LedgerEntry


@pytest.fixture(scope="module")
def fixture_cfg(tmp_path_factory):
    """Path of a fixture config written once for the whole module."""
    d = tmp_path_factory.mktemp("fixture-inputs")
    return write_fixture(str(d))


@pytest.fixture(scope="module")
def study(tmp_path_factory, fixture_cfg):
    """A workspace taken through screen/design/filter/optimize once."""
    out = str(tmp_path_factory.mktemp("study"))
    for cmd in ("screen", "design", "filter"):
        assert main([cmd, "--config", fixture_cfg, "--out", out]) == 0
    assert main(["optimize", "--quiet", "--config", fixture_cfg, "--out", out]) == 0
    return out


class TestConfig:
    def test_document_round_trip(self, fixture_cfg):
        cfg = load_config(fixture_cfg)
        again = load_config(dump_config(cfg))
        assert again == cfg

    def test_unknown_key_rejected(self, fixture_cfg):
        doc = json.loads(dump_config(load_config(fixture_cfg)))
        doc["surprise"] = 1
        with pytest.raises(ConfigError, match="surprise"):
            load_config(json.dumps(doc))

    def test_missing_input_file_rejected(self, tmp_path, fixture_cfg):
        doc = json.loads(dump_config(load_config(fixture_cfg)))
        doc["gauge_file"] = str(tmp_path / "nowhere.csv")
        with pytest.raises(ConfigError, match="gauge_file"):
            load_config(json.dumps(doc))

    def test_scenario_probabilities_must_sum_to_one(self, fixture_cfg):
        doc = json.loads(dump_config(load_config(fixture_cfg)))
        doc["scenario_years"] = [["2001", 0.6], ["2002", 0.6]]
        with pytest.raises(ConfigError, match="probabilit"):
            load_config(json.dumps(doc))

    def test_cli_overrides_parse_like_the_document(self, fixture_cfg):
        cfg = load_config(fixture_cfg)
        over = apply_overrides(
            cfg, {"min_free_flowing_km": "120", "passable_schemes": "[]", "seed": "3"}
        )
        assert over.min_free_flowing_km == 120.0
        assert over.passable_schemes == ()
        assert over.seed == 3
        with pytest.raises(ConfigError, match="unknown config key"):
            apply_overrides(cfg, {"nope": "1"})

    def test_effective_energy_price_applies_risk_factor(self, fixture_cfg):
        cfg = load_config(fixture_cfg)
        expected = cfg.energy_price_usd_per_kwh * cfg.risk_adjusted_price_factor
        assert cfg.effective_energy_price() == pytest.approx(expected)


class TestRunStore:
    def test_lifecycle_and_immutability(self, tmp_path):
        store = RunStore(str(tmp_path))
        rec = store.create_run()
        store.write_artifact(rec.run_id, "pool.json", "{}")
        store.complete(rec.run_id)
        with pytest.raises(RunError, match="complete"):
            store.write_artifact(rec.run_id, "pool.json", "{}")

        bad = store.create_run()
        store.fail(bad.run_id, "boom")
        assert store.record(bad.run_id).status == "failed"
        assert store.latest(status="complete").run_id == rec.run_id

    def test_run_ids_are_ordered(self, tmp_path):
        store = RunStore(str(tmp_path))
        ids = [store.create_run().run_id for _ in range(3)]
        assert ids == ["run-0001", "run-0002", "run-0003"]
        assert store.run_ids() == ids

    def test_ledger_survives_reload(self, tmp_path):
        store = RunStore(str(tmp_path))
        base = store.create_run()
        store.complete(base.run_id)
        follow = store.create_run(parent_run_id=base.run_id, overrides={"min_free_flowing_km": 10})
        entry = LedgerEntry(
            run_id=follow.run_id,
            baseline_run_id=base.run_id,
            baseline_objective_usd_per_yr=5.0,
            objective_usd_per_yr=3.0,
            revenue_delta_usd_per_yr=2.0,
            overrides={"min_free_flowing_km": 10},
        )
        store.complete(follow.run_id, ledger=(entry,))

        fresh = RunStore(str(tmp_path)).record(follow.run_id)
        assert fresh.parent_run_id == base.run_id
        assert fresh.ledger == (entry,)

    def test_unknown_run_raises(self, tmp_path):
        with pytest.raises(RunError):
            RunStore(str(tmp_path)).record("run-0404")


class TestFixture:
    def test_same_seed_same_bytes(self, tmp_path, fixture_cfg):
        other = write_fixture(str(tmp_path / "again"), seed=FIXTURE_SEED)
        for name in ("config.json", "network.json", "gauge.csv", "impacts.csv"):
            a = open(os.path.join(os.path.dirname(fixture_cfg), name), "rb").read()
            b = open(os.path.join(os.path.dirname(other), name), "rb").read()
            assert a == b, name

    def test_candidate_roster(self, study):
        doc = json.loads(open(os.path.join(study, CANDIDATES_FILE)).read())
        variants = doc["variants"]
        assert len(variants) == 40
        passable = [v for v in variants if v["passable"]]
        assert 0 < len(passable) < len(variants)


class TestCli:
    def test_pipeline_closure(self, study):
        for name in (SITES_FILE, DESIGNS_FILE, CANDIDATES_FILE, CONFLICTS_FILE):
            assert os.path.exists(os.path.join(study, name)), name
        run_dir = os.path.join(study, "runs", "run-0001")
        for name in (CONFIG_FILE, CANDIDATES_FILE, PROBLEM_FILE, POOL_FILE):
            assert os.path.exists(os.path.join(run_dir, name)), name

    def test_optimize_then_audit_passes(self, study):
        assert main(["audit", "--out", study]) == 0
        doc = json.loads(open(os.path.join(study, "audit.json")).read())
        assert doc["alternatives_failing"] == 0
        assert doc["alternatives_checked"] >= 1

    def test_screen_zero_criteria_keeps_every_segment(self, fixture_cfg, tmp_path):
        out = str(tmp_path)
        rc = main(["screen", "--config", fixture_cfg, "--out", out, "--screening", "{}"])
        assert rc == 0
        doc = json.loads(open(os.path.join(out, SITES_FILE)).read())
        assert len(doc["sites"]) == 15

    def test_optimize_reproduces_pool_bytes(self, fixture_cfg, study, tmp_path):
        out = str(tmp_path)
        for cmd in ("screen", "design", "filter"):
            assert main([cmd, "--config", fixture_cfg, "--out", out]) == 0
        assert main(["optimize", "--quiet", "--config", fixture_cfg, "--out", out]) == 0
        first = open(os.path.join(study, "runs", "run-0001", POOL_FILE), "rb").read()
        second = open(os.path.join(out, "runs", "run-0001", POOL_FILE), "rb").read()
        assert first == second

    def test_whatif_records_revenue_loss(self, study):
        store = RunStore(study)
        base_id = store.latest(status="complete").run_id
        problem = load_problem(store.read_artifact(base_id, PROBLEM_FILE))
        floor = 0.8 * problem.baseline_free_flowing_km
        rc = main(["whatif", "--out", study, "--run", base_id, "--quiet",
                   "--min-free-flowing", repr(floor)])
        assert rc == 0

        rec = store.latest(status="complete")
        assert rec.parent_run_id == base_id
        assert len(rec.ledger) == 1
        entry = rec.ledger[0]
        assert entry.baseline_run_id == base_id
        assert entry.revenue_delta_usd_per_yr >= 0

        pool = load_pool(store.read_artifact(rec.run_id, POOL_FILE))
        inc = pool.incumbent()
        assert inc.objective_usd_per_yr <= entry.baseline_objective_usd_per_yr
        assert inc.summary["free_flowing_km"] >= floor

    def test_whatif_full_floor_without_passage_leaves_empty_plan(self, fixture_cfg, tmp_path):
        # With fish passage disabled and no committed plant, a floor at the
        # whole baseline leaves nothing to build.
        out = str(tmp_path)
        flags = ["--config", fixture_cfg, "--out", out,
                 "--passable-schemes", "[]", "--forced", "[]"]
        for cmd in ("screen", "design", "filter"):
            assert main([cmd] + flags) == 0
        assert main(["optimize", "--quiet"] + flags) == 0

        store = RunStore(out)
        problem = load_problem(store.read_artifact("run-0001", PROBLEM_FILE))
        rc = main(["whatif", "--out", out, "--quiet",
                   "--min-free-flowing", repr(problem.baseline_free_flowing_km)])
        assert rc == 0
        pool = load_pool(store.read_artifact("run-0002", POOL_FILE))
        assert [alt.selected() for alt in pool.alternatives] == [[]]

    def test_module_error_prints_json_document(self, tmp_path, capsys):
        rc = main(["whatif", "--out", str(tmp_path), "--min-free-flowing", "1"])
        assert rc == 1
        doc = json.loads(capsys.readouterr().err.strip())
        assert doc["error"]["type"] == "RunError"
        assert "optimize" in doc["error"]["message"]

    def test_missing_stage_artifact_names_the_stage(self, fixture_cfg, tmp_path, capsys):
        rc = main(["design", "--config", fixture_cfg, "--out", str(tmp_path)])
        assert rc == 1
        doc = json.loads(capsys.readouterr().err.strip())
        assert doc["error"]["type"] == "ConfigError"
        assert "screen" in doc["error"]["message"]
