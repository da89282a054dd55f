import { AdapterError, atLocation } from "./errors.js";
import { canonicalize, type DirectedGraph } from "./graph.js";

/** One call site from a headless call-graph dump: caller TAB callee. */
export interface CallPair {
  caller: string;
  callee: string;
}

/**
 * Parse a tab-separated call-graph export.
 *
 * Blank lines are skipped; a trailing \r is tolerated so CRLF dumps from
 * Windows analysis boxes parse unchanged. Anything else that is not
 * exactly two non-empty tab-separated fields is an error naming the line.
 */
export function parseGhidraExport(text: string, path?: string): CallPair[] {
  const pairs: CallPair[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    let line = lines[i];
    if (line.endsWith("\r")) {
      line = line.slice(0, -1);
    }
    if (line === "") continue;
    const parts = line.split("\t");
    if (parts.length !== 2 || parts[0] === "" || parts[1] === "") {
      throw new AdapterError(
        atLocation(`malformed export line: expected caller<TAB>callee, got ${JSON.stringify(line)}`, path, i + 1),
      );
    }
    pairs.push({ caller: parts[0], callee: parts[1] });
  }
  return pairs;
}

/**
 * Function-call graph with names replaced by dense numeric ids.
 *
 * Ids follow first appearance so a fixed export always yields the same
 * file. The name-to-id map never leaves this function; the output is
 * anonymous by construction. An empty export becomes a single-node graph
 * (the entry function exists even when no calls were recovered).
 */
export function fcgFromGhidra(pairs: CallPair[]): DirectedGraph {
  const ids = new Map<string, number>();
  const idOf = (name: string): number => {
    let i = ids.get(name);
    if (i === undefined) {
      i = ids.size;
      ids.set(name, i);
    }
    return i;
  };
  const edges: Array<[number, number]> = [];
  for (const p of pairs) {
    edges.push([idOf(p.caller), idOf(p.callee)]);
  }
  if (ids.size === 0) {
    return { nodeCount: 1, edges: [] };
  }
  return canonicalize({ nodeCount: ids.size, edges });
}
