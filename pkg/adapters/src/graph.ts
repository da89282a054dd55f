import { AdapterError } from "./errors.js";

/** Directed graph over dense node ids 0..nodeCount-1. */
export interface DirectedGraph {
  nodeCount: number;
  edges: Array<[number, number]>;
}

export function validateGraph(g: DirectedGraph): void {
  if (!Number.isInteger(g.nodeCount) || g.nodeCount < 1) {
    throw new AdapterError(`node count must be >= 1, got ${g.nodeCount}`);
  }
  for (const [s, t] of g.edges) {
    for (const v of [s, t]) {
      if (!Number.isInteger(v) || v < 0 || v >= g.nodeCount) {
        throw new AdapterError(`edge endpoint ${v} outside 0..${g.nodeCount - 1}`);
      }
    }
  }
}

/** Sorted-by-(source, target), deduplicated copy. Self-loops survive. */
export function canonicalize(g: DirectedGraph): DirectedGraph {
  const seen = new Set<string>();
  const edges: Array<[number, number]> = [];
  for (const [s, t] of g.edges) {
    const key = `${s} ${t}`;
    if (!seen.has(key)) {
      seen.add(key);
      edges.push([s, t]);
    }
  }
  edges.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  return { nodeCount: g.nodeCount, edges };
}
