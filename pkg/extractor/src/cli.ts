#!/usr/bin/env node
import process from "node:process";

import { SUPPORTED_BACKBONES } from "./embedders/registry.js";
import { runExtraction } from "./extract.js";
import type { ExtractionJob } from "./types.js";

const USAGE = `usage: extract --backbone <name> --images <dir> --manifest <csv> --out <csv>
               [--batch-size <n>] [--device <hint>] [--on-error skip|abort]

Exports one embedding row per manifest image to the shared feature-table CSV.
Supported backbones: ${SUPPORTED_BACKBONES.join(", ")}`;

export function parseArgs(argv: string[]): ExtractionJob {
  const opts: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad argument '${key}'\n${USAGE}`);
    }
    opts[key.slice(2)] = argv[i + 1];
  }
  for (const required of ["backbone", "images", "manifest", "out"]) {
    if (!(required in opts)) {
      throw new Error(`missing --${required}\n${USAGE}`);
    }
  }
  const onError = opts["on-error"] ?? "abort";
  if (onError !== "skip" && onError !== "abort") {
    throw new Error(`--on-error must be 'skip' or 'abort', got '${onError}'`);
  }
  return {
    backbone: opts["backbone"],
    imageDir: opts["images"],
    manifestPath: opts["manifest"],
    outPath: opts["out"],
    batchSize: opts["batch-size"] ? Number.parseInt(opts["batch-size"], 10) : 16,
    device: opts["device"] ?? "",
    onError,
  };
}

export async function main(argv: string[]): Promise<number> {
  if (argv.includes("--help") || argv.length === 0) {
    console.log(USAGE);
    return 0;
  }
  try {
    const job = parseArgs(argv);
    const result = await runExtraction(job);
    console.log(
      `${result.rows} rows x ${result.dim} features -> ${job.outPath}` +
        (result.skipped.length ? ` (${result.skipped.length} skipped)` : ""),
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
