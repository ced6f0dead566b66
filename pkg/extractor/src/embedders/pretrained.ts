import type { DecodedImage, Embedder } from "../types.js";
import { encodePng } from "../pngio.js";

/** Hub model ids for the named backbones (ONNX exports usable from Node). */
const HUB_MODELS: Record<string, { model: string; dim: number; transform: string }> = {
  "clip-vit-h-14": {
    model: "Xenova/clip-vit-large-patch14", // closest hub export; H/14 not yet published
    dim: 768,
    transform: "clip-image-processor",
  },
  "clip-vit-l-14": {
    model: "Xenova/clip-vit-large-patch14",
    dim: 768,
    transform: "clip-image-processor",
  },
  resnet50: { model: "Xenova/resnet-50", dim: 2048, transform: "imagenet-stats-224" },
  densenet121: { model: "Xenova/densenet-121", dim: 1024, transform: "imagenet-stats-224" },
  vgg16: { model: "Xenova/vgg16", dim: 4096, transform: "imagenet-stats-224" },
  "efficientnet-v2-l": {
    model: "Xenova/efficientnet-v2-l",
    dim: 1280,
    transform: "imagenet-stats-480",
  },
};

export const PRETRAINED_BACKBONES = Object.keys(HUB_MODELS);

/**
 * Backbone served by transformers.js. The dependency is loaded lazily: it is
 * heavyweight, needs network (or a local cache) for the model weights, and is
 * deliberately not a hard dependency of this package.
 */
export async function pretrainedEmbedder(name: string, device: string): Promise<Embedder> {
  const entry = HUB_MODELS[name];
  if (!entry) {
    throw new Error(`'${name}' is not a pretrained backbone`);
  }
  const moduleName = "@xenova/transformers";
  let transformers: any;
  try {
    transformers = await import(moduleName);
  } catch {
    throw new Error(
      `backbone '${name}' needs the optional dependency '${moduleName}' ` +
        `(npm install ${moduleName}) plus downloadable weights for ${entry.model}`,
    );
  }
  const extractor = await transformers.pipeline("image-feature-extraction", entry.model, {
    device: device || undefined,
  });
  return {
    name,
    dim: entry.dim,
    transform: entry.transform,
    async embed(images: DecodedImage[]): Promise<Float64Array[]> {
      const out: Float64Array[] = [];
      for (const image of images) {
        const raw = await transformers.RawImage.fromBlob(
          new Blob([new Uint8Array(encodePng(image))], { type: "image/png" }),
        );
        const result = await extractor(raw, { pooling: "mean" });
        out.push(Float64Array.from(result.data as Iterable<number>));
      }
      return out;
    },
  };
}
