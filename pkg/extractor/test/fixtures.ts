import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { encodePng } from "../src/pngio.js";
import type { DecodedImage } from "../src/types.js";

/** Deterministic RGBA test image; the pattern varies with the seed. */
export function patternImage(width: number, height: number, seed: number): DecodedImage {
  const pixels = new Uint8Array(width * height * 4);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const base = (y * width + x) * 4;
      pixels[base] = (x * 17 + seed * 31) % 256;
      pixels[base + 1] = (y * 29 + seed * 13) % 256;
      pixels[base + 2] = (x * y + seed * 7) % 256;
      pixels[base + 3] = 255;
    }
  }
  return { width, height, pixels };
}

export function writePng(dir: string, name: string, image: DecodedImage): string {
  const path = join(dir, name);
  writeFileSync(path, encodePng(image));
  return path;
}

export interface ToyFolder {
  dir: string;
  manifestPath: string;
  filenames: string[];
}

/** Image folder with `perClass` images for each label, plus its manifest. */
export function makeToyFolder(labels: string[], perClass: number, size = 16): ToyFolder {
  const dir = mkdtempSync(join(tmpdir(), "extract-"));
  const filenames: string[] = [];
  const lines = ["filename,label"];
  let seed = 0;
  for (const label of labels) {
    for (let i = 0; i < perClass; i++) {
      const name = `${label}_${i}.png`;
      writePng(dir, name, patternImage(size, size, seed++));
      filenames.push(name);
      lines.push(`${name},${label}`);
    }
  }
  const manifestPath = join(dir, "manifest.csv");
  writeFileSync(manifestPath, lines.join("\n") + "\n");
  return { dir, manifestPath, filenames };
}
