"""A synthetic planning setup for demos, tests and the bundled UI.

``write_fixture`` materializes a complete input set in a directory: a
15-segment basin, twelve years of daily gauge record with one pinned wet
and one pinned dry year, an impact table where every valley has
households, a config wired to all of it, and one committed plant that
any portfolio must keep.

The numbers are calibrated, not arbitrary: the candidate ladder lands
on exactly forty variants after the ex-ante filter, applying the configured
risk-adjusted price factor shrinks both the number of selected projects
and the installed capacity, and the unconstrained optimum fragments well
over a fifth of the baseline free-flowing length, so a floor at 80% of
the baseline has teeth.  Tests rely on those properties; change the
constants here only together with them.
"""

from __future__ import annotations

import datetime
import os

import numpy as np

from ..basin import dump_network, synth_basin
from ..engineering import SCHEME_DAM_TOE, SCHEME_DIVERSION
from ..hydrology import DailySeries, dump_gauge
from ..metrics import ImpactDensities, ImpactTable, dump_impact_table
from .config import PlanningConfig, dump_config, load_config
from .pipeline import design_step, filter_step, load_inputs, screen_step

__all__ = ["FIXTURE_SEED", "write_fixture", "fixture_config"]

FIXTURE_SEED = 7

_WET_YEAR = "2001"
_DRY_YEAR = "2002"
_SPECIFIC_RUNOFF_M3S_PER_KM2 = 0.020
_ENERGY_PRICE = 0.05
_RISK_FACTOR = 0.5


def _gauge(net, rng) -> DailySeries:
    """Twelve complete years of daily flow at the basin mouth.

    Long enough for the low-flow statistic; the config then picks the
    pinned wet and dry years as its two scenarios.
    """
    mouth = next(s for s in net.segments.values() if s.downstream_id is None)
    area = mouth.drainage_area_km2
    base = _SPECIFIC_RUNOFF_M3S_PER_KM2 * area

    start = datetime.date(1995, 1, 1)
    end = datetime.date(2006, 12, 31)
    n = (end - start).days + 1
    dates = [start + datetime.timedelta(days=i) for i in range(n)]

    year_factor = {yr: float(rng.uniform(0.65, 1.25)) for yr in range(1995, 2007)}
    year_factor[int(_WET_YEAR)] = 1.25
    year_factor[int(_DRY_YEAR)] = 0.55
    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    season = 1.0 + 0.75 * np.sin(2.0 * np.pi * (doy - 110.0) / 365.25)
    noise = np.exp(rng.normal(0.0, 0.12, size=n))
    factors = np.array([year_factor[d.year] for d in dates])
    flows = np.maximum(base * factors * season * noise, 0.05 * base)
    return DailySeries(
        gauge_id="FIX-GAUGE",
        drainage_area_km2=area,
        dates=tuple(dates),
        flows=tuple(float(q) for q in flows),
    )


def _impacts(net, rng) -> ImpactTable:
    """Densities with households everywhere; rail and reserves on a few valleys."""
    sids = sorted(net.segments)
    railway = set(rng.choice(sids, size=3, replace=False))
    protected = set(rng.choice(sids, size=3, replace=False))
    rows = {}
    for sid in sids:
        rows[sid] = ImpactDensities(
            households_per_km2=float(rng.uniform(20.0, 140.0)),
            road_m_per_km2=float(rng.uniform(100.0, 600.0)),
            railway_m_per_km2=float(rng.uniform(400.0, 1200.0)) if sid in railway else 0.0,
            protected_fraction=float(rng.uniform(0.2, 0.6)) if sid in protected else 0.0,
            biomass_Mg_per_ha=float(rng.uniform(60.0, 180.0)),
        )
    return ImpactTable(rows)


def _base_config(committed: tuple[str, ...]) -> PlanningConfig:
    # Dam-toe plants here are low-head designs with fish passage; diversion
    # schemes dewater the bypassed reach, so they count as barriers despite
    # the modest weir.  That keeps both layouts in play when a free-flowing
    # floor enters the picture.
    return PlanningConfig(
        network_file="network.json",
        gauge_file="gauge.csv",
        impact_file="impacts.csv",
        scenario_years=((_WET_YEAR, 0.5), (_DRY_YEAR, 0.5)),
        screening={"min_mean_flow_m3s": 2.0, "min_slope": 0.003, "min_head_m": 10.0, "min_capacity_mw": 1.0},
        head_ladder=(10.0, 20.0, 30.0, 50.0),
        schemes=(SCHEME_DAM_TOE, SCHEME_DIVERSION),
        passable_schemes=(SCHEME_DAM_TOE,),
        ecological_release_fraction=0.10,
        max_unit_cost_usd_per_kw=1980.0,
        energy_price_usd_per_kwh=_ENERGY_PRICE,
        risk_adjusted_price_factor=_RISK_FACTOR,
        forced=committed,
        seed=FIXTURE_SEED,
    )


def write_fixture(directory: str, seed: int = FIXTURE_SEED) -> str:
    """Write network, gauge, impacts and config into ``directory``.

    Returns the path of the config file.  Same seed, same bytes.
    """
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    net = synth_basin(depth=4, branching=2, seed=seed)

    with open(os.path.join(directory, "network.json"), "w", encoding="utf-8") as fh:
        fh.write(dump_network(net))
    with open(os.path.join(directory, "gauge.csv"), "w", encoding="utf-8") as fh:
        fh.write(dump_gauge(_gauge(net, rng)))
    with open(os.path.join(directory, "impacts.csv"), "w", encoding="utf-8") as fh:
        fh.write(dump_impact_table(_impacts(net, rng)))

    # The committed plant: run the candidate stages once and take the
    # smallest fish-passable design.  It floods a little (every project
    # here does), so a zero-household cap makes the whole plan infeasible
    # rather than merely empty.
    cfg = _base_config(committed=())
    cfg_path = os.path.join(directory, "config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    cfg = load_config(cfg_path)
    inputs = load_inputs(cfg)
    sites = screen_step(cfg, inputs)
    designs = design_step(cfg, inputs, sites)
    candidates, _ = filter_step(cfg, inputs.net, designs)
    passable = [v for v in candidates if v.passable]
    if not passable:
        raise RuntimeError("fixture calibration broke: no passable candidate to commit")
    committed = min(passable, key=lambda v: (v.installed_kw, v.id))

    cfg = _base_config(committed=(committed.id,))
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    return cfg_path


def fixture_config(directory: str, seed: int = FIXTURE_SEED) -> PlanningConfig:
    """Write the fixture if needed and return its loaded config."""
    cfg_path = os.path.join(directory, "config.json")
    if not os.path.exists(cfg_path):
        cfg_path = write_fixture(directory, seed)
    return load_config(cfg_path)
