import type { Embedder } from "../types.js";
import { pixelStatsEmbedder } from "./pixelstats.js";
import { PRETRAINED_BACKBONES, pretrainedEmbedder } from "./pretrained.js";

/** Supported names: the pretrained hub backbones plus the offline fallback. */
export const SUPPORTED_BACKBONES = [...PRETRAINED_BACKBONES, "pixelstats"];

export async function loadEmbedder(name: string, device = ""): Promise<Embedder> {
  if (name === "pixelstats") {
    return pixelStatsEmbedder();
  }
  if (PRETRAINED_BACKBONES.includes(name)) {
    return pretrainedEmbedder(name, device);
  }
  throw new Error(
    `unknown backbone '${name}'; supported: ${SUPPORTED_BACKBONES.join(", ")}`,
  );
}
