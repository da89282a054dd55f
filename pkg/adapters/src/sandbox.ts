import { AdapterError, atLocation } from "./errors.js";
import { canonicalize, type DirectedGraph } from "./graph.js";

/** One spawned process. ppid null marks the trace root. Names are dropped. */
export interface ProcessRecord {
  pid: number;
  ppid: number | null;
  name?: string;
  ts?: number;
}

/** One logged inter-process interaction (inject, write, signal, ...). */
export interface InteractionRecord {
  source: number;
  target: number;
  type: string;
  ts?: number;
}

export interface SandboxTrace {
  processes: ProcessRecord[];
  interactions: InteractionRecord[];
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

/**
 * Parse and validate a sandbox process-list JSON document.
 *
 * Requires at least one process and unique pids. The `interactions`
 * array is optional. Extra fields (names, command lines, timestamps)
 * are carried through the parse but never reach any output file.
 */
export function parseSandboxTrace(text: string, path?: string): SandboxTrace {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new AdapterError(atLocation(`invalid trace JSON: ${(exc as Error).message}`, path));
  }
  if (!isRecord(doc) || !Array.isArray(doc.processes)) {
    throw new AdapterError(atLocation("trace must be an object with a 'processes' array", path));
  }
  if (doc.processes.length === 0) {
    throw new AdapterError(atLocation("trace contains no processes", path));
  }
  const processes: ProcessRecord[] = [];
  const pids = new Set<number>();
  for (const raw of doc.processes) {
    if (!isRecord(raw) || !Number.isInteger(raw.pid)) {
      throw new AdapterError(atLocation(`process record needs an integer pid: ${JSON.stringify(raw)}`, path));
    }
    const pid = raw.pid as number;
    if (pids.has(pid)) {
      throw new AdapterError(atLocation(`duplicate pid ${pid}`, path));
    }
    pids.add(pid);
    const ppid = raw.ppid === null || raw.ppid === undefined ? null : raw.ppid;
    if (ppid !== null && !Number.isInteger(ppid)) {
      throw new AdapterError(atLocation(`pid ${pid}: ppid must be an integer or null`, path));
    }
    processes.push({
      pid,
      ppid: ppid as number | null,
      name: typeof raw.name === "string" ? raw.name : undefined,
      ts: typeof raw.ts === "number" ? raw.ts : undefined,
    });
  }
  const interactions: InteractionRecord[] = [];
  const rawInteractions = doc.interactions ?? [];
  if (!Array.isArray(rawInteractions)) {
    throw new AdapterError(atLocation("'interactions' must be an array when present", path));
  }
  for (const raw of rawInteractions) {
    if (!isRecord(raw) || !Number.isInteger(raw.source) || !Number.isInteger(raw.target) || typeof raw.type !== "string") {
      throw new AdapterError(
        atLocation(`interaction record needs integer source/target and a type: ${JSON.stringify(raw)}`, path),
      );
    }
    interactions.push({
      source: raw.source as number,
      target: raw.target as number,
      type: raw.type,
      ts: typeof raw.ts === "number" ? raw.ts : undefined,
    });
  }
  return { processes, interactions };
}

/**
 * Process-call graph: one node per process in first-appearance order,
 * a directed edge from creator to created for every non-root process.
 *
 * Creation edges are always present; other logged interactions become
 * source-to-target edges only when `includeInteractions` is set. Any
 * edge naming a pid outside the trace is an error regardless of the
 * flag.
 */
export function pcgFromSandbox(trace: SandboxTrace, includeInteractions = false): DirectedGraph {
  const index = new Map<number, number>();
  for (const p of trace.processes) {
    index.set(p.pid, index.size);
  }
  const resolve = (pid: number, role: string): number => {
    const i = index.get(pid);
    if (i === undefined) {
      throw new AdapterError(`${role} references unknown pid ${pid}`);
    }
    return i;
  };
  const edges: Array<[number, number]> = [];
  for (const p of trace.processes) {
    if (p.ppid === null) continue;
    const s = resolve(p.ppid, `process ${p.pid}`);
    edges.push([s, index.get(p.pid) as number]);
  }
  for (const it of trace.interactions) {
    const s = resolve(it.source, `interaction ${JSON.stringify(it.type)}`);
    const t = resolve(it.target, `interaction ${JSON.stringify(it.type)}`);
    if (includeInteractions) {
      edges.push([s, t]);
    }
  }
  return canonicalize({ nodeCount: trace.processes.length, edges });
}
