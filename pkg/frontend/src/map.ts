import type { NetworkDoc } from "./types.js";
import { layoutNetwork } from "./layout.js";
import { escapeHtml } from "./format.js";

/**
 * Fragmentation map: the river tree drawn schematically, every reach
 * colored free-flowing or fragmented, dam sites marked on the reach they
 * sit in. The coloring is taken verbatim from the selected alternative's
 * per-segment indicator; with nothing selected it falls back to the
 * baseline (natural barriers only). No connectivity is recomputed here.
 */

const COL_GAP = 72;
const ROW_GAP = 54;
const PAD = 36;

export type ReachState = "free" | "fragmented";

export interface DamSite {
  variantId: string;
  segmentId: string;
  passable: boolean;
}

export interface ReachShape {
  id: string;
  state: ReachState;
  naturalBarrier: boolean;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface DamShape {
  variantId: string;
  segmentId: string;
  passable: boolean;
  x: number;
  y: number;
  angleDeg: number;
}

export interface MapModel {
  width: number;
  height: number;
  reaches: ReachShape[];
  dams: DamShape[];
}

export function mapModel(
  network: NetworkDoc,
  fragmentedY: Record<string, number> | null,
  dams: DamSite[] = []
): MapModel {
  const tree = layoutNetwork(network.segments);
  const baselineFragmented = new Set(network.baseline.fragmented_ids);

  const px = (col: number) => PAD + col * COL_GAP;
  const py = (row: number) => PAD + (tree.rows - 1 - row) * ROW_GAP;

  const reaches: ReachShape[] = [];
  const ends = new Map<string, { x1: number; y1: number; x2: number; y2: number }>();
  for (const s of network.segments) {
    const node = tree.nodes.get(s.id)!;
    const down = s.downstream_id === null ? null : tree.nodes.get(s.downstream_id) ?? null;
    const x1 = px(node.x);
    const y1 = py(node.y);
    // mouths drain to a virtual outlet one row below their own node
    const x2 = down ? px(down.x) : x1;
    const y2 = down ? py(down.y) : y1 + ROW_GAP;
    const state: ReachState = fragmentedY
      ? fragmentedY[s.id] === 1
        ? "fragmented"
        : "free"
      : baselineFragmented.has(s.id)
        ? "fragmented"
        : "free";
    ends.set(s.id, { x1, y1, x2, y2 });
    reaches.push({ id: s.id, state, naturalBarrier: s.natural_barrier, x1, y1, x2, y2 });
  }

  const bySegment = new Map<string, DamSite[]>();
  for (const dam of dams) {
    const group = bySegment.get(dam.segmentId);
    if (group) {
      group.push(dam);
    } else {
      bySegment.set(dam.segmentId, [dam]);
    }
  }
  const shapes: DamShape[] = [];
  for (const [segmentId, group] of bySegment) {
    const end = ends.get(segmentId);
    if (!end) {
      continue; // a dam on a segment the network doc does not know; skip quietly
    }
    group.sort((a, b) => (a.variantId < b.variantId ? -1 : 1));
    const angleDeg =
      (Math.atan2(end.y2 - end.y1, end.x2 - end.x1) * 180) / Math.PI + 90;
    group.forEach((dam, i) => {
      const t = (i + 1) / (group.length + 1);
      shapes.push({
        variantId: dam.variantId,
        segmentId,
        passable: dam.passable,
        x: end.x1 + (end.x2 - end.x1) * t,
        y: end.y1 + (end.y2 - end.y1) * t,
        angleDeg,
      });
    });
  }

  return {
    width: PAD * 2 + (tree.columns - 1) * COL_GAP,
    height: PAD * 2 + tree.rows * ROW_GAP,
    reaches,
    dams: shapes,
  };
}

function reachSvg(r: ReachShape): string {
  const cls = r.state === "free" ? "reach reach-free" : "reach reach-fragmented";
  const line =
    `<line class="${cls}" data-segment="${escapeHtml(r.id)}" ` +
    `x1="${r.x1}" y1="${r.y1}" x2="${r.x2}" y2="${r.y2}">` +
    `<title>${escapeHtml(r.id)}: ${r.state === "free" ? "free-flowing" : "fragmented"}</title>` +
    `</line>`;
  if (!r.naturalBarrier) {
    return line;
  }
  // a natural barrier sits at the downstream end of its reach
  const tick =
    `<circle class="natural-barrier" cx="${r.x2}" cy="${r.y2}" r="4">` +
    `<title>natural barrier below ${escapeHtml(r.id)}</title></circle>`;
  return line + tick;
}

function damSvg(d: DamShape): string {
  const transform = `rotate(${d.angleDeg.toFixed(1)} ${d.x} ${d.y})`;
  const title = d.passable
    ? `<title>${escapeHtml(d.variantId)} (passable: fitted for fish passage, does not fragment)</title>`
    : `<title>${escapeHtml(d.variantId)}</title>`;
  if (d.passable) {
    // split bar with a visible gap: a barrier the basin can still move through
    return (
      `<g class="dam dam-passable" data-variant="${escapeHtml(d.variantId)}" transform="${transform}">` +
      `<rect x="-11" y="-3" width="8" height="6"></rect>` +
      `<rect x="3" y="-3" width="8" height="6"></rect>` +
      `${title}</g>`
    );
  }
  return (
    `<g class="dam dam-blocking" data-variant="${escapeHtml(d.variantId)}" transform="${transform}">` +
    `<rect x="-11" y="-3" width="22" height="6"></rect>` +
    `${title}</g>`
  );
}

/** Serialize the model to an SVG string; styling comes from page CSS. */
export function renderMap(model: MapModel): string {
  const parts: string[] = [
    `<svg class="frag-map" viewBox="0 0 ${model.width} ${model.height}" ` +
      `width="${model.width}" height="${model.height}" role="img">`,
  ];
  for (const r of model.reaches) {
    parts.push(reachSvg(r));
  }
  for (const d of model.dams) {
    parts.push(damSvg(d));
  }
  parts.push("</svg>");
  return parts.join("\n");
}
