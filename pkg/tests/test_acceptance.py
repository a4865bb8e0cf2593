"""Shipped-guarantee gate: one test per promise, in the order promised.

Each test here states a property the package guarantees on delivery and
checks it against an independent reference (exhaustive enumeration, a
downstream-walk connectivity check, hand-computed statistics) or against
the shipped synthetic basin fixture. Tolerances are part of the promise
and are pinned in the assertions, not in shared constants, so a tolerance
change is visible in the diff of this file.
"""

import datetime as dt
import time
from dataclasses import replace

import numpy as np
import pytest

from instances import random_instance, random_network
from oracles import downstream_walk_fragmentation
from riverplan.basin import fragmentation
from riverplan.engineering import CostBreakdown, CostLine, ProjectVariant, annuity
from riverplan.hydrology import DailySeries, q7_10
from riverplan.metrics import FREE_FLOWING_KM
from riverplan.optimizer import audit, brute_force, dump_pool, solve
from riverplan.screening import exante_filter
from riverplan.workbench import (
    design_step,
    filter_step,
    load_config,
    load_inputs,
    optimize_step,
    screen_step,
)
from riverplan.workbench.fixture import write_fixture


@pytest.fixture(scope="module")
def oracle_runs():
    """100 seeded instances solved both ways, with the wall clock kept."""
    t0 = time.monotonic()
    runs = []
    for seed in range(100):
        p = random_instance(seed, n_variants=8 + seed % 5)
        runs.append((p, solve(p), brute_force(p)))
    return {"elapsed_s": time.monotonic() - t0, "runs": runs}


@pytest.fixture(scope="module")
def basin_study(tmp_path_factory):
    """The shipped synthetic basin, screened and designed once, solved at
    full price, at the risk-adjusted price, and with a free-flowing floor."""
    cfg = load_config(write_fixture(str(tmp_path_factory.mktemp("acceptance-basin"))))
    inputs = load_inputs(cfg)
    sites = screen_step(cfg, inputs)
    designs = design_step(cfg, inputs, sites)
    candidates, conflicts = filter_step(cfg, inputs.net, designs)

    def run(**changes):
        return optimize_step(replace(cfg, **changes), inputs, candidates, conflicts)

    full = run(risk_adjusted_price_factor=1.0)
    risked = run()
    floor_km = 0.8 * full[0].baseline_free_flowing_km
    floored = run(risk_adjusted_price_factor=1.0, min_free_flowing_km=floor_km)
    return {
        "cfg": cfg,
        "inputs": inputs,
        "designs": designs,
        "candidates": candidates,
        "conflicts": conflicts,
        "full": full,
        "risked": risked,
        "floor_km": floor_km,
        "floored": floored,
    }


def _pools(basin_study):
    return [basin_study[k] for k in ("full", "risked", "floored")]


def test_search_matches_enumeration_on_100_seeded_instances(oracle_runs):
    for p, pool, best in oracle_runs["runs"]:
        lay = p.layout()
        assert lay.n <= 12
        assert len(p.inflows.probabilities) == 2
        assert len(p.inflows.month_durations_h) == 12
        if best is None:
            assert pool.status == "infeasible"
            continue
        inc = pool.incumbent()
        assert inc is not None
        assert inc.objective_usd_per_yr == pytest.approx(
            best.objective_usd_per_yr, rel=1e-6
        )
    assert oracle_runs["elapsed_s"] < 300.0


def test_every_pool_alternative_passes_the_independent_audit(oracle_runs, basin_study):
    for p, pool, _ in oracle_runs["runs"]:
        for alt in pool.alternatives:
            assert audit(p, alt, tol=1e-6) == []
    for p, pool in _pools(basin_study):
        assert pool.alternatives
        for alt in pool.alternatives:
            assert audit(p, alt, tol=1e-6) == []


def test_fragmentation_matches_downstream_walk_on_1000_random_trees():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 32))
        net = random_network(rng, n)
        ids = list(net.ids())
        k = int(rng.integers(0, n + 1))
        dams = [(ids[i], bool(rng.random() < 0.5)) for i in rng.permutation(n)[:k]]
        assert fragmentation(net, dams).fragmented == downstream_walk_fragmentation(
            net, dams
        )


def test_fixture_reproduces_the_headline_planning_patterns(basin_study):
    full_p, full = basin_study["full"]
    _, risked = basin_study["risked"]
    floor_p, floored = basin_study["floored"]

    # (a) the risk haircut on the energy price shrinks the buildout, strictly,
    # in both project count and installed capacity
    def mw(p, alt):
        return sum(p.variant(v).installed_kw for v in alt.selected()) / 1000.0

    inc_full, inc_risked = full.incumbent(), risked.incumbent()
    assert len(inc_risked.selected()) < len(inc_full.selected())
    assert mw(full_p, inc_risked) < mw(full_p, inc_full)

    # (b) a free-flowing floor at 80% of the undammed baseline never raises
    # the objective, and the plan it picks honors the floor outright
    inc_floor = floored.incumbent()
    assert inc_floor.objective_usd_per_yr <= inc_full.objective_usd_per_yr
    assert inc_floor.metrics[FREE_FLOWING_KM] >= basin_study["floor_km"]

    # (c) pools only ever record improvements
    for _, pool in _pools(basin_study):
        objs = [a.objective_usd_per_yr for a in pool.alternatives]
        assert all(b > a for a, b in zip(objs, objs[1:]))
    assert any(len(pool.alternatives) >= 2 for _, pool in _pools(basin_study))


def test_capital_recovery_factor_reference_value():
    assert annuity(1.0, 0.10, 40) == pytest.approx(0.1022594, abs=1e-6)


def _daily(n_years: int, flow_fn) -> DailySeries:
    dates, flows = [], []
    day = dt.date(1961, 1, 1)
    end = dt.date(1961 + n_years, 1, 1)
    while day < end:
        dates.append(day)
        flows.append(flow_fn(day))
        day += dt.timedelta(days=1)
    return DailySeries("G-acc", 1000.0, dates, np.array(flows))


def test_low_flow_statistic_reference_values():
    # a constant record's 7-day low flow is the constant, exactly
    assert q7_10(_daily(10, lambda d: 10.0)) == 10.0

    # ten years whose annual 7-day minima are 1..10: the 10-year quantile
    # interpolates between the two smallest minima
    dips = {}
    for k in range(10):
        for d in range(7):
            dips[dt.date(1961 + k, 7, 1) + dt.timedelta(days=d)] = float(k + 1)
    s = _daily(10, lambda d: dips.get(d, 100.0))
    assert q7_10(s) == pytest.approx(1.1, abs=1e-12)


def _variant(vid, kw, capex, flooded):
    return ProjectVariant(
        id=vid,
        segment_id="S0",
        scheme="dam-toe",
        template="concrete-gravity",
        gross_head_m=20.0,
        foot_elevation_m=100.0,
        production_factor_kw_per_m3s=float(kw),
        installed_kw=float(kw),
        max_turbine_flow_m3s=1.0,
        max_storage_m3=0.0,
        flooded_area_km2=flooded,
        capex_usd=capex,
        breakdown=CostBreakdown((CostLine("civil", "lump", 1.0, "lump", capex, capex),)),
        annuity_usd_per_yr=capex * 0.1,
        annual_energy_kwh=kw * 4000.0,
    )


def test_exante_filters_keep_their_boundaries():
    kw = 10_000.0
    at_cost = _variant("at-cost", kw, 4000.0 * kw, 1.0)
    over_cost = _variant("over-cost", kw, 4001.0 * kw, 1.0)
    at_density = _variant("at-density", 8_000.0, 8_000_000.0, 2.0)  # 4 MW/km2
    under_density = _variant("under-density", 7_999.0, 7_999_000.0, 2.0)
    kept = {v.id for v in exante_filter([at_cost, over_cost, at_density, under_density])}
    assert kept == {"at-cost", "at-density"}


def test_pool_export_is_bit_identical_across_reruns_and_threads(basin_study):
    cfg, inputs = basin_study["cfg"], basin_study["inputs"]
    candidates, conflicts = basin_study["candidates"], basin_study["conflicts"]
    first = dump_pool(basin_study["risked"][1])
    again = dump_pool(optimize_step(cfg, inputs, candidates, conflicts)[1])
    threaded = dump_pool(
        optimize_step(replace(cfg, threads=4), inputs, candidates, conflicts)[1]
    )
    assert again == first
    assert threaded == first


def test_itemized_costs_sum_to_capex_for_every_design(basin_study):
    designs = basin_study["designs"]
    assert len(designs) >= 40
    for v in designs:
        assert v.breakdown.total() == pytest.approx(v.capex_usd, rel=1e-6)
