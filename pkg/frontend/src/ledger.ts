import type { RunDoc } from "./types.js";
import { musd } from "./format.js";

export interface LedgerLine {
  runId: string;
  baselineRunId: string;
  revenueDeltaUsdPerYr: number | null;
  text: string;
}

/**
 * Human-readable revenue-loss ledger for a run. Each entry prices one
 * what-if against the run it amended; the newest entry comes last, same
 * as the server stores them.
 */
export function ledgerLines(run: RunDoc): LedgerLine[] {
  return run.ledger.map((entry) => {
    const base = `${musd(entry.baseline_objective_usd_per_yr)} M$/yr at ${entry.baseline_run_id}`;
    let text: string;
    if (entry.objective_usd_per_yr === null || entry.revenue_delta_usd_per_yr === null) {
      text = `${entry.run_id}: infeasible under its overrides (baseline ${base})`;
    } else {
      text =
        `${entry.run_id}: ${musd(entry.objective_usd_per_yr)} M$/yr, ` +
        `revenue forgone ${musd(entry.revenue_delta_usd_per_yr)} M$/yr vs ${base}`;
    }
    return {
      runId: entry.run_id,
      baselineRunId: entry.baseline_run_id,
      revenueDeltaUsdPerYr: entry.revenue_delta_usd_per_yr,
      text,
    };
  });
}
