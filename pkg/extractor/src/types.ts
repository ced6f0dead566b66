export interface DecodedImage {
  width: number;
  height: number;
  /** RGBA bytes, row-major, 4 bytes per pixel. */
  pixels: Uint8Array;
}

export interface Embedder {
  /** Backbone identifier, echoed into the output metadata. */
  name: string;
  /** Constant output width for every image of a job. */
  dim: number;
  /** Name of the preprocessing transform applied before inference. */
  transform: string;
  embed(images: DecodedImage[]): Promise<Float64Array[]>;
}

export interface ExtractionJob {
  backbone: string;
  imageDir: string;
  manifestPath: string;
  outPath: string;
  batchSize: number;
  device: string;
  onError: "skip" | "abort";
}

export interface ManifestEntry {
  filename: string;
  label: string;
}
