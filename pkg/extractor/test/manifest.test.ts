import { writeFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseManifest } from "../src/manifest.js";
import { makeToyFolder } from "./fixtures.js";

describe("parseManifest", () => {
  it("preserves manifest order", () => {
    const toy = makeToyFolder(["foo", "bar"], 2);
    const entries = parseManifest(toy.manifestPath);
    expect(entries.map((e) => e.filename)).toEqual(toy.filenames);
    expect(entries[0].label).toBe("foo");
    expect(entries[3].label).toBe("bar");
  });

  it("rejects a wrong header", () => {
    const toy = makeToyFolder(["foo", "bar"], 1);
    const bad = join(toy.dir, "bad.csv");
    writeFileSync(bad, "file,cls\na.png,foo\n");
    expect(() => parseManifest(bad)).toThrow(/expected header 'filename,label'/);
  });

  it("rejects ragged rows", () => {
    const toy = makeToyFolder(["foo", "bar"], 1);
    const bad = join(toy.dir, "bad.csv");
    writeFileSync(bad, "filename,label\na.png,foo,extra\n");
    expect(() => parseManifest(bad)).toThrow(/row 2/);
  });

  it("rejects an empty manifest", () => {
    const toy = makeToyFolder(["foo", "bar"], 1);
    const bad = join(toy.dir, "empty.csv");
    writeFileSync(bad, "filename,label\n");
    expect(() => parseManifest(bad)).toThrow(/no images/);
  });
});
