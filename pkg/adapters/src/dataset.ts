import fs from "node:fs";
import path from "node:path";

import { AdapterError } from "./errors.js";
import { canonicalize, validateGraph, type DirectedGraph } from "./graph.js";

/** One converted sample, ready for the canonical on-disk layout. */
export interface DatasetSample {
  id: string;
  label: 0 | 1;
  entropy: number;
  fcg: DirectedGraph;
  pcg: DirectedGraph;
}

const GRAPH_DIR = "graphs";

export function edgeFileText(g: DirectedGraph): string {
  const c = canonicalize(g);
  let out = `# nodes=${c.nodeCount} directed=true\n`;
  for (const [s, t] of c.edges) {
    out += `${s} ${t}\n`;
  }
  return out;
}

/** One manifest line, spaced like the trainer writes it. */
export function manifestRowText(sample: DatasetSample, fcgRel: string, pcgRel: string): string {
  return (
    `{"id": ${JSON.stringify(sample.id)}, "label": ${sample.label}, ` +
    `"entropy": ${sample.entropy}, "fcg": ${JSON.stringify(fcgRel)}, ` +
    `"pcg": ${JSON.stringify(pcgRel)}}`
  );
}

/** provenance.json body: two-space indent, keys sorted, trailing newline. */
export function provenanceText(provenance: Record<string, string>): string {
  const sorted: Record<string, string> = {};
  for (const key of Object.keys(provenance).sort()) {
    sorted[key] = provenance[key];
  }
  return JSON.stringify(sorted, null, 2) + "\n";
}

export function validateSample(s: DatasetSample): void {
  if (s.id === "" || /[/\\]/.test(s.id)) {
    throw new AdapterError(`sample id must be a non-empty path-safe name, got ${JSON.stringify(s.id)}`);
  }
  if (s.label !== 0 && s.label !== 1) {
    throw new AdapterError(`label must be 0 or 1, got ${s.label}`);
  }
  if (!Number.isFinite(s.entropy) || s.entropy < 0 || s.entropy > 8) {
    throw new AdapterError(`entropy must be within [0, 8], got ${s.entropy}`);
  }
  validateGraph(s.fcg);
  validateGraph(s.pcg);
}

/**
 * Write samples in the canonical layout under outDir:
 *
 *   manifest.jsonl          one JSON object per sample
 *   graphs/<id>.fcg.txt     edge files referenced by the manifest
 *   graphs/<id>.pcg.txt
 *   provenance.json         only when provenance is non-empty
 */
export function writeDataset(
  samples: DatasetSample[],
  outDir: string,
  provenance: Record<string, string> = {},
): void {
  if (samples.length === 0) {
    throw new AdapterError("refusing to write an empty dataset");
  }
  const ids = new Set<string>();
  for (const s of samples) {
    validateSample(s);
    if (ids.has(s.id)) {
      throw new AdapterError(`duplicate sample id ${JSON.stringify(s.id)}`);
    }
    ids.add(s.id);
  }
  fs.mkdirSync(path.join(outDir, GRAPH_DIR), { recursive: true });
  let manifest = "";
  for (const s of samples) {
    const fcgRel = `${GRAPH_DIR}/${s.id}.fcg.txt`;
    const pcgRel = `${GRAPH_DIR}/${s.id}.pcg.txt`;
    fs.writeFileSync(path.join(outDir, fcgRel), edgeFileText(s.fcg));
    fs.writeFileSync(path.join(outDir, pcgRel), edgeFileText(s.pcg));
    manifest += manifestRowText(s, fcgRel, pcgRel) + "\n";
  }
  fs.writeFileSync(path.join(outDir, "manifest.jsonl"), manifest);
  if (Object.keys(provenance).length > 0) {
    fs.writeFileSync(path.join(outDir, "provenance.json"), provenanceText(provenance));
  }
}
