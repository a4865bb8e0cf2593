"""Solve the basin-wide siting problem and read the solution pool.

The pool holds every incumbent the search ever accepted, worst to best,
so the last row is the proven optimum and the earlier rows are cheaper
plans a planner might still prefer. Each alternative is re-checked by the
independent feasibility audit before printing.
"""

import tempfile

from riverplan.metrics import FLOODED_KM2, FREE_FLOWING_KM, HOUSEHOLDS
from riverplan.optimizer import audit
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
print(f"search finished: {pool.status}, {pool.n_lp_solves} LP solves, "
      f"{len(pool.alternatives)} alternatives\n")

print(f"{'#':>2} {'plants':>6} {'MW':>7} {'GWh/yr':>8} {'free km':>8} "
      f"{'flooded km2':>11} {'households':>10} {'MUSD/yr':>8}")
for k, alt in enumerate(pool.alternatives, start=1):
    mw = sum(problem.variant(v).installed_kw for v in alt.selected()) / 1e3
    gwh = sum(alt.expected_energy_kwh.values()) / 1e6
    print(f"{k:>2} {len(alt.selected()):>6} {mw:7.1f} {gwh:8.1f} "
          f"{alt.metrics[FREE_FLOWING_KM]:8.1f} {alt.metrics[FLOODED_KM2]:11.2f} "
          f"{alt.metrics[HOUSEHOLDS]:10.1f} {alt.objective_usd_per_yr / 1e6:8.3f}")

violations = [v for alt in pool.alternatives for v in audit(problem, alt)]
print(f"\nindependent audit: {len(violations)} violations across the pool")

best = pool.incumbent()
print(f"optimum builds {len(best.selected())} plants:\n")
print(f"{'variant':>22} {'MW':>7} {'GWh/yr':>8}")
for vid in best.selected():
    v = problem.variant(vid)
    print(f"{vid:>22} {v.installed_kw / 1e3:7.1f} {best.expected_energy_kwh[vid] / 1e6:8.1f}")
