"""Price the river: what does each kilometer of protection cost?

Starting from the unconstrained optimum, sweeps a rising floor on the
free-flowing length a plan must leave intact and reports the revenue
given up at each step. Then pushes a social constraint (resettled
households) all the way to zero to show how the engine reports an
impossible ask.
"""

import tempfile

from riverplan.metrics import FREE_FLOWING_KM, HOUSEHOLDS, MetricDef
from riverplan.optimizer import what_if
from riverplan.workbench import (
    design_step,
    filter_step,
    load_config,
    load_inputs,
    optimize_step,
    screen_step,
)
from riverplan.workbench.fixture import write_fixture

cfg = load_config(write_fixture(tempfile.mkdtemp(prefix="riverplan-demo-")))
inputs = load_inputs(cfg)
candidates, conflicts = filter_step(
    cfg, inputs.net, design_step(cfg, inputs, screen_step(cfg, inputs))
)
problem, pool = optimize_step(cfg, inputs, candidates, conflicts)

base = pool.incumbent()
baseline_km = problem.baseline_free_flowing_km
print(f"unconstrained optimum: {base.objective_usd_per_yr / 1e6:.3f}M USD/yr, "
      f"leaves {base.metrics[FREE_FLOWING_KM]:.1f} of {baseline_km:.1f} km free-flowing\n")

print(f"{'floor':>10} {'kept km':>8} {'MUSD/yr':>8} {'loss':>8}")
for frac in (0.5, 0.6, 0.7, 0.8, 0.9):
    out = what_if(problem, baseline=pool, min_free_flowing_km=frac * baseline_km)
    inc = out.pool.incumbent()
    if inc is None:
        print(f"{frac:9.0%} {'-':>8} {'-':>8} {'infeasible':>10}")
        continue
    print(f"{frac:9.0%} {inc.metrics[FREE_FLOWING_KM]:8.1f} "
          f"{inc.objective_usd_per_yr / 1e6:8.3f} {out.revenue_delta_usd_per_yr / 1e6:7.3f}M")

# the committed plant floods households, so a zero cap cannot be met
out = what_if(problem, baseline=pool, metric_bounds=[MetricDef(HOUSEHOLDS, "max", bound=0.0)])
print(f"\nhouseholds capped at zero: pool status {out.pool.status!r}, "
      f"{len(out.pool.alternatives)} alternatives")
