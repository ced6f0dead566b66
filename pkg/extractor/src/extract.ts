import { renameSync, unlinkSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import process from "node:process";

import { renderFeatureCsv } from "./featureCsv.js";
import { loadEmbedder } from "./embedders/registry.js";
import { parseManifest } from "./manifest.js";
import { decodePng } from "./pngio.js";
import type { DecodedImage, ExtractionJob } from "./types.js";

export interface ExtractionResult {
  rows: number;
  dim: number;
  skipped: string[];
}

/**
 * Run one extraction job: decode each manifest image, embed in batches, and
 * write the feature-table CSV atomically (temp file + rename) together with a
 * small metadata sidecar. Rows follow manifest order; images that fail to
 * decode are skipped with a log line or abort the job, per `onError`.
 */
export async function runExtraction(job: ExtractionJob): Promise<ExtractionResult> {
  if (job.batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${job.batchSize}`);
  }
  const entries = parseManifest(job.manifestPath);
  const embedder = await loadEmbedder(job.backbone, job.device);

  const ids: string[] = [];
  const labels: string[] = [];
  const images: DecodedImage[] = [];
  const skipped: string[] = [];
  for (const entry of entries) {
    const path = join(job.imageDir, entry.filename);
    try {
      images.push(decodePng(path));
    } catch (err) {
      if (job.onError === "abort") {
        throw new Error(`cannot decode ${path}: ${(err as Error).message}`);
      }
      console.error(`skipping ${entry.filename}: ${(err as Error).message}`);
      skipped.push(entry.filename);
      continue;
    }
    ids.push(entry.filename);
    labels.push(entry.label);
  }
  if (images.length === 0) {
    throw new Error("no decodable images in manifest");
  }

  const rows: Float64Array[] = [];
  for (let start = 0; start < images.length; start += job.batchSize) {
    const batch = images.slice(start, start + job.batchSize);
    rows.push(...(await embedder.embed(batch)));
  }

  const csv = renderFeatureCsv(ids, labels, rows);
  const tmp = `${job.outPath}.tmp-${process.pid}`;
  try {
    writeFileSync(tmp, csv, "utf-8");
    renameSync(tmp, job.outPath);
  } catch (err) {
    try {
      unlinkSync(tmp);
    } catch {
      // best effort; the temp file may never have been created
    }
    throw err;
  }

  const meta = {
    backbone: embedder.name,
    transform: embedder.transform,
    dim: embedder.dim,
    rows: rows.length,
    skipped,
  };
  writeFileSync(`${job.outPath}.meta.json`, JSON.stringify(meta, null, 2) + "\n", "utf-8");
  return { rows: rows.length, dim: embedder.dim, skipped };
}
