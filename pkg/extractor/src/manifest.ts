import { readFileSync } from "node:fs";
import type { ManifestEntry } from "./types.js";

/**
 * Parse a label manifest: header `filename,label`, one image per row.
 * Order is preserved; the output CSV follows manifest order exactly.
 */
export function parseManifest(path: string): ManifestEntry[] {
  const text = readFileSync(path, "utf-8");
  const lines = text.split("\n").filter((line, i) => line.length > 0 || i === 0);
  if (lines.length === 0 || lines[0] !== "filename,label") {
    throw new Error(`${path}: expected header 'filename,label', got '${lines[0] ?? ""}'`);
  }
  const entries: ManifestEntry[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i].split(",");
    if (fields.length !== 2 || fields[0] === "" || fields[1] === "") {
      throw new Error(`${path}: row ${i + 1}: expected 'filename,label', got '${lines[i]}'`);
    }
    entries.push({ filename: fields[0], label: fields[1] });
  }
  if (entries.length === 0) {
    throw new Error(`${path}: manifest lists no images`);
  }
  return entries;
}
