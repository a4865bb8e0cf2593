"""From a river network to a costed candidate roster.

Generates the bundled synthetic basin, screens its segments for buildable
sites, sizes a project variant for every (site, head, scheme) combination,
and filters out the ones nobody would finance. Prints the survivors and
one itemized cost breakdown so you can see where the money goes.
"""

import tempfile

from riverplan.workbench import design_step, filter_step, load_config, load_inputs, screen_step
from riverplan.workbench.fixture import write_fixture

workspace = tempfile.mkdtemp(prefix="riverplan-demo-")
cfg = load_config(write_fixture(workspace))
print(f"fixture written to {workspace}")

inputs = load_inputs(cfg)
net = inputs.net
print(f"network: {len(net.segments)} segments, "
      f"{net.total_length_km():.1f} km, baseline connectivity intact")

# geometric screening: enough flow, enough slope, enough head
sites = screen_step(cfg, inputs)
print(f"screening keeps {len(sites)} segments of {len(net.segments)}")

# one variant per admissible (site, head, scheme); unbuildable combos drop out
designs = design_step(cfg, inputs, sites)
print(f"design table: {len(designs)} variants")

candidates, conflicts = filter_step(cfg, net, designs)
print(f"after the unit-cost and power-density filters: {len(candidates)} candidates, "
      f"{len(conflicts)} conflict pairs\n")

print(f"{'variant':>22} {'scheme':>10} {'head m':>7} {'MW':>7} {'USD/kW':>8} {'GWh/yr':>7}")
for v in sorted(candidates, key=lambda v: -v.installed_kw)[:12]:
    print(f"{v.id:>22} {v.scheme:>10} {v.gross_head_m:7.0f} {v.installed_kw / 1e3:7.1f} "
          f"{v.capex_usd / v.installed_kw:8.0f} {v.annual_energy_kwh / 1e6:7.1f}")
print(f"... and {len(candidates) - 12} more\n")

big = max(candidates, key=lambda v: v.installed_kw)
print(f"cost breakdown for {big.id} (capex {big.capex_usd / 1e6:.1f}M USD):")
for line in big.breakdown.lines:
    print(f"  {line.account:<12} {line.item:<28} {line.cost / 1e6:8.2f}M")
print(f"  {'total':<41} {big.breakdown.total() / 1e6:8.2f}M")
