import type { DecodedImage, Embedder } from "../types.js";

const GRID = 4;
const DIM = GRID * GRID * 3 + 12 + 4; // cell means + channel stats + geometry

/**
 * Deterministic offline backbone: coarse spatial color statistics.
 *
 * No pretrained weights are involved, so it runs anywhere and reproduces
 * exactly; it exists for contract tests and desk-scale pipeline runs. The
 * layout is a 4x4 grid of per-channel cell means, global per-channel
 * mean/std/min/max, and four geometry terms.
 */
export function pixelStatsEmbedder(): Embedder {
  return {
    name: "pixelstats",
    dim: DIM,
    transform: "identity-rgb",
    async embed(images: DecodedImage[]): Promise<Float64Array[]> {
      return images.map(embedOne);
    },
  };
}

function embedOne(image: DecodedImage): Float64Array {
  const { width, height, pixels } = image;
  const n = width * height;
  if (n === 0) {
    throw new Error("empty image");
  }
  const out = new Float64Array(DIM);

  const cellSum = new Float64Array(GRID * GRID * 3);
  const cellCount = new Float64Array(GRID * GRID);
  const sum = new Float64Array(3);
  const sumSq = new Float64Array(3);
  const min = new Float64Array(3).fill(255);
  const max = new Float64Array(3);

  for (let y = 0; y < height; y++) {
    const cy = Math.min(GRID - 1, Math.floor((y * GRID) / height));
    for (let x = 0; x < width; x++) {
      const cx = Math.min(GRID - 1, Math.floor((x * GRID) / width));
      const cell = cy * GRID + cx;
      cellCount[cell] += 1;
      const base = (y * width + x) * 4;
      for (let c = 0; c < 3; c++) {
        const v = pixels[base + c];
        cellSum[cell * 3 + c] += v;
        sum[c] += v;
        sumSq[c] += v * v;
        if (v < min[c]) min[c] = v;
        if (v > max[c]) max[c] = v;
      }
    }
  }

  const channelMean = [sum[0] / n, sum[1] / n, sum[2] / n];
  for (let cell = 0; cell < GRID * GRID; cell++) {
    for (let c = 0; c < 3; c++) {
      const value =
        cellCount[cell] > 0 ? cellSum[cell * 3 + c] / cellCount[cell] : channelMean[c];
      out[cell * 3 + c] = value / 255;
    }
  }

  let k = GRID * GRID * 3;
  for (let c = 0; c < 3; c++) {
    const mean = channelMean[c];
    const variance = Math.max(0, sumSq[c] / n - mean * mean);
    out[k++] = mean / 255;
    out[k++] = Math.sqrt(variance) / 255;
    out[k++] = min[c] / 255;
    out[k++] = max[c] / 255;
  }

  const luminance = (0.299 * sum[0] + 0.587 * sum[1] + 0.114 * sum[2]) / n / 255;
  out[k++] = Math.log2(width) / 16;
  out[k++] = Math.log2(height) / 16;
  out[k++] = width / height;
  out[k++] = luminance;
  return out;
}
