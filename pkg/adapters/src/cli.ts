#!/usr/bin/env node
import fs from "node:fs";
import { pathToFileURL } from "node:url";

import { buildManifest } from "./build_manifest.js";
import { shannonEntropy } from "./entropy.js";
import { AdapterError } from "./errors.js";

export interface CliIo {
  out: (line: string) => void;
  err: (line: string) => void;
}

const USAGE = `usage: extraction-adapters <command> ...

commands:
  convert <input_dir> <output_dir> [--interactions]
      Convert sample directories (call-graph dump + sandbox trace +
      binary or precomputed entropy) into the canonical dataset layout.
      --interactions also turns logged inter-process interactions into
      edges; creation edges are always present.
  entropy <file>
      Print the Shannon entropy of a file, in bits per byte.
`;

/** Returns the process exit code; never throws for user errors. */
export function runCli(argv: string[], io?: CliIo): number {
  const o = io ?? {
    out: (line: string) => process.stdout.write(line),
    err: (line: string) => process.stderr.write(line),
  };
  if (argv.length === 0) {
    o.err(USAGE);
    return 2;
  }
  if (argv[0] === "-h" || argv[0] === "--help") {
    o.out(USAGE);
    return 0;
  }
  try {
    if (argv[0] === "convert") {
      const flags = argv.slice(1).filter((a) => a.startsWith("--"));
      const positional = argv.slice(1).filter((a) => !a.startsWith("--"));
      for (const f of flags) {
        if (f !== "--interactions") {
          o.err(`error: unknown flag ${f}\n${USAGE}`);
          return 2;
        }
      }
      if (positional.length !== 2) {
        o.err(`error: convert needs <input_dir> <output_dir>\n${USAGE}`);
        return 2;
      }
      const result = buildManifest(positional[0], positional[1], {
        interactionEdges: flags.includes("--interactions"),
      });
      for (const w of result.warnings) {
        o.err(`warning: ${w}\n`);
      }
      o.out(`wrote ${result.written.length} samples to ${positional[1]}\n`);
      return 0;
    }
    if (argv[0] === "entropy") {
      if (argv.length !== 2) {
        o.err(`error: entropy needs <file>\n${USAGE}`);
        return 2;
      }
      const bytes = new Uint8Array(fs.readFileSync(argv[1]));
      o.out(`${shannonEntropy(bytes)}\n`);
      return 0;
    }
    o.err(`error: unknown command ${JSON.stringify(argv[0])}\n${USAGE}`);
    return 2;
  } catch (exc) {
    if (exc instanceof AdapterError) {
      o.err(`error: ${exc.message}\n`);
      return 1;
    }
    if (exc instanceof Error && "code" in exc) {
      o.err(`i/o error: ${exc.message}\n`);
      return 2;
    }
    throw exc;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(runCli(process.argv.slice(2)));
}
