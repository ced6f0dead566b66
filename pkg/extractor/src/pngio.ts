import { readFileSync } from "node:fs";
import { PNG } from "pngjs";
import type { DecodedImage } from "./types.js";

export function decodePng(path: string): DecodedImage {
  const buffer = readFileSync(path);
  const png = PNG.sync.read(buffer);
  return {
    width: png.width,
    height: png.height,
    pixels: new Uint8Array(png.data.buffer, png.data.byteOffset, png.data.length),
  };
}

export function encodePng(image: DecodedImage): Buffer {
  const png = new PNG({ width: image.width, height: image.height });
  Buffer.from(image.pixels).copy(png.data);
  return PNG.sync.write(png);
}
