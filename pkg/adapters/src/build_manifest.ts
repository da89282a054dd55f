import fs from "node:fs";
import path from "node:path";

import { writeDataset, type DatasetSample } from "./dataset.js";
import { shannonEntropy } from "./entropy.js";
import { AdapterError, atLocation } from "./errors.js";
import { fcgFromGhidra, parseGhidraExport } from "./ghidra.js";
import { parseSandboxTrace, pcgFromSandbox } from "./sandbox.js";

/**
 * Expected input layout, one directory per sample:
 *
 *   <inputDir>/labels.json        {"<sample>": 0 | 1, ...}
 *   <inputDir>/<sample>/fcg.tsv      call-graph dump, caller<TAB>callee
 *   <inputDir>/<sample>/trace.json   sandbox process-list JSON
 *   <inputDir>/<sample>/sample.bin   raw binary (entropy computed), or
 *   <inputDir>/<sample>/entropy.txt  precomputed entropy when the binary
 *                                    cannot be redistributed
 */
export interface BuildOptions {
  /** Also turn logged inter-process interactions into edges. */
  interactionEdges?: boolean;
}

export interface BuildResult {
  /** Sample ids written to the manifest, in manifest order. */
  written: string[];
  /** One line per skipped sample or ignored label. */
  warnings: string[];
}

const FCG_FILE = "fcg.tsv";
const TRACE_FILE = "trace.json";
const BINARY_FILE = "sample.bin";
const ENTROPY_FILE = "entropy.txt";

function readLabels(inputDir: string): Record<string, number> {
  const labelsPath = path.join(inputDir, "labels.json");
  if (!fs.existsSync(labelsPath)) {
    throw new AdapterError(`missing labels.json under ${inputDir}`);
  }
  let doc: unknown;
  try {
    doc = JSON.parse(fs.readFileSync(labelsPath, "utf-8"));
  } catch (exc) {
    throw new AdapterError(atLocation(`invalid labels JSON: ${(exc as Error).message}`, labelsPath));
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new AdapterError(atLocation("labels.json must map sample name to 0 or 1", labelsPath));
  }
  for (const [name, label] of Object.entries(doc)) {
    if (label !== 0 && label !== 1) {
      throw new AdapterError(atLocation(`label for ${JSON.stringify(name)} must be 0 or 1, got ${label}`, labelsPath));
    }
  }
  return doc as Record<string, number>;
}

function sampleEntropy(dir: string): number {
  const binaryPath = path.join(dir, BINARY_FILE);
  if (fs.existsSync(binaryPath)) {
    return shannonEntropy(new Uint8Array(fs.readFileSync(binaryPath)));
  }
  const entropyPath = path.join(dir, ENTROPY_FILE);
  const text = fs.readFileSync(entropyPath, "utf-8").trim();
  const value = Number(text);
  if (text === "" || !Number.isFinite(value)) {
    throw new AdapterError(atLocation(`precomputed entropy is not a number: ${JSON.stringify(text)}`, entropyPath));
  }
  return value;
}

/**
 * Convert every complete sample directory under inputDir into the
 * canonical dataset layout at outDir.
 *
 * A sample is complete when it has a label, a call-graph dump, a trace,
 * and either the raw binary or a precomputed entropy. Incomplete samples
 * are skipped with a warning rather than failing the whole batch; a
 * batch with no complete sample at all is an error.
 */
export function buildManifest(inputDir: string, outDir: string, opts: BuildOptions = {}): BuildResult {
  const entries = fs
    .readdirSync(inputDir, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort();
  const labels = readLabels(inputDir);
  const warnings: string[] = [];
  const samples: DatasetSample[] = [];
  const seen = new Set<string>();
  for (const id of entries) {
    seen.add(id);
    const dir = path.join(inputDir, id);
    const missing: string[] = [];
    if (!(id in labels)) {
      missing.push("label");
    }
    if (!fs.existsSync(path.join(dir, FCG_FILE))) {
      missing.push(FCG_FILE);
    }
    if (!fs.existsSync(path.join(dir, TRACE_FILE))) {
      missing.push(TRACE_FILE);
    }
    if (!fs.existsSync(path.join(dir, BINARY_FILE)) && !fs.existsSync(path.join(dir, ENTROPY_FILE))) {
      missing.push(`${BINARY_FILE} or ${ENTROPY_FILE}`);
    }
    if (missing.length > 0) {
      warnings.push(`${id}: missing ${missing.join(", ")}; skipped`);
      continue;
    }
    const fcgPath = path.join(dir, FCG_FILE);
    const tracePath = path.join(dir, TRACE_FILE);
    samples.push({
      id,
      label: labels[id] as 0 | 1,
      entropy: sampleEntropy(dir),
      fcg: fcgFromGhidra(parseGhidraExport(fs.readFileSync(fcgPath, "utf-8"), fcgPath)),
      pcg: pcgFromSandbox(parseSandboxTrace(fs.readFileSync(tracePath, "utf-8"), tracePath), opts.interactionEdges),
    });
  }
  for (const name of Object.keys(labels).sort()) {
    if (!seen.has(name)) {
      warnings.push(`label for unknown sample ${JSON.stringify(name)} ignored`);
    }
  }
  if (samples.length === 0) {
    throw new AdapterError(`no complete samples under ${inputDir}`);
  }
  writeDataset(samples, outDir, {
    adapter: "extraction-adapters",
    interaction_edges: String(Boolean(opts.interactionEdges)),
  });
  return { written: samples.map((s) => s.id), warnings };
}
