import type { PoolDoc } from "./types.js";
import { escapeHtml, km, km2, musd, mw } from "./format.js";

/**
 * Solution pool table. Every number in a row comes from the alternative's
 * server-built summary block; the client formats and never recomputes.
 */

export interface PoolRow {
  /** Position in the server's pool document, the key for detail fetches. */
  index: number;
  /** 1 = incumbent (best objective), counting up toward weaker plans. */
  rank: number;
  netRevenueUsdPerYr: number;
  projectCount: number;
  installedMw: number;
  freeFlowingKm: number;
  floodedKm2: number;
}

export type PoolView =
  | { kind: "table"; status: string; rows: PoolRow[] }
  | { kind: "infeasible"; status: string };

export function poolView(pool: PoolDoc): PoolView {
  if (pool.alternatives.length === 0) {
    return { kind: "infeasible", status: pool.status };
  }
  const n = pool.alternatives.length;
  const rows = pool.alternatives.map((alt, index) => ({
    index,
    rank: n - index,
    netRevenueUsdPerYr: alt.summary.net_revenue_usd_per_yr,
    projectCount: alt.summary.project_count,
    installedMw: alt.summary.installed_mw,
    freeFlowingKm: alt.summary.free_flowing_km,
    floodedKm2: alt.summary.flooded_km2,
  }));
  rows.reverse(); // the pool stores the incumbent last; show it first
  return { kind: "table", status: pool.status, rows };
}

const HEADERS = [
  "Plan",
  "Net revenue (M$/yr)",
  "Projects",
  "Installed (MW)",
  "Free-flowing (km)",
  "Flooded (km²)",
];

export function renderPoolTable(view: PoolView, selectedIndex: number | null): string {
  if (view.kind === "infeasible") {
    return (
      `<div class="banner banner-infeasible" data-status="${escapeHtml(view.status)}">` +
      `infeasible / no solutions</div>`
    );
  }
  const head = HEADERS.map((h) => `<th>${escapeHtml(h)}</th>`).join("");
  const body = view.rows
    .map((row) => {
      const cls = row.index === selectedIndex ? "pool-row selected" : "pool-row";
      return (
        `<tr class="${cls}" data-index="${row.index}">` +
        `<td>#${row.rank}</td>` +
        `<td class="num">${musd(row.netRevenueUsdPerYr)}</td>` +
        `<td class="num">${row.projectCount}</td>` +
        `<td class="num">${mw(row.installedMw)}</td>` +
        `<td class="num">${km(row.freeFlowingKm)}</td>` +
        `<td class="num">${km2(row.floodedKm2)}</td>` +
        `</tr>`
      );
    })
    .join("\n");
  return (
    `<table class="pool-table" data-status="${escapeHtml(view.status)}">` +
    `<thead><tr>${head}</tr></thead><tbody>\n${body}\n</tbody></table>`
  );
}
