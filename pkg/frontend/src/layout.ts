import type { Segment } from "./types.js";

/**
 * Schematic placement for the river tree. Coordinates are abstract grid
 * units: x is a leaf-packed column, y is the hop count upstream from the
 * basin mouth. The map module scales these into pixels. Nothing here is
 * geographic; the drawing is topology-true only.
 */

export interface LayoutNode {
  id: string;
  x: number;
  y: number;
}

export interface TreeLayout {
  nodes: Map<string, LayoutNode>;
  /** Segments that drain out of the modelled basin, in draw order. */
  mouths: string[];
  columns: number;
  rows: number;
}

export function layoutNetwork(segments: Segment[]): TreeLayout {
  const byId = new Map(segments.map((s) => [s.id, s]));
  const children = new Map<string, string[]>();
  const mouths: string[] = [];

  for (const s of segments) {
    // a dangling downstream reference is treated as a basin outlet
    if (s.downstream_id === null || !byId.has(s.downstream_id)) {
      mouths.push(s.id);
    } else {
      const siblings = children.get(s.downstream_id);
      if (siblings) {
        siblings.push(s.id);
      } else {
        children.set(s.downstream_id, [s.id]);
      }
    }
  }
  mouths.sort();
  for (const siblings of children.values()) {
    siblings.sort();
  }

  const depth = new Map<string, number>();
  const queue = [...mouths];
  for (const mouth of mouths) {
    depth.set(mouth, 0);
  }
  while (queue.length) {
    const id = queue.shift()!;
    const d = depth.get(id)!;
    for (const kid of children.get(id) ?? []) {
      depth.set(kid, d + 1);
      queue.push(kid);
    }
  }

  // Post-order walk: leaves take consecutive columns, so every subtree owns
  // a contiguous band and edges never cross; parents sit under the mean of
  // their children.
  const x = new Map<string, number>();
  let nextLeaf = 0;
  for (const mouth of mouths) {
    const stack: Array<{ id: string; expanded: boolean }> = [{ id: mouth, expanded: false }];
    while (stack.length) {
      const frame = stack[stack.length - 1]!;
      if (!frame.expanded) {
        frame.expanded = true;
        const kids = children.get(frame.id) ?? [];
        for (let i = kids.length - 1; i >= 0; i--) {
          stack.push({ id: kids[i]!, expanded: false });
        }
        continue;
      }
      stack.pop();
      const kids = children.get(frame.id) ?? [];
      if (kids.length === 0) {
        x.set(frame.id, nextLeaf);
        nextLeaf += 1;
      } else {
        let sum = 0;
        for (const kid of kids) {
          sum += x.get(kid)!;
        }
        x.set(frame.id, sum / kids.length);
      }
    }
  }

  const nodes = new Map<string, LayoutNode>();
  let rows = 1;
  for (const s of segments) {
    const node = { id: s.id, x: x.get(s.id) ?? 0, y: depth.get(s.id) ?? 0 };
    nodes.set(s.id, node);
    rows = Math.max(rows, node.y + 1);
  }
  return { nodes, mouths, columns: Math.max(nextLeaf, 1), rows };
}
