/** Frame interpolation, face analysis, and the embedding for video/text pairs. */

import { luminance, Raster, requireSameShape } from "../png.js";
import { ModelRejection } from "../protocol.js";

export function interpolateFrames(frameA: Raster, frameB: Raster): Raster {
  requireSameShape(frameA, frameB);
  const data = new Uint8Array(frameA.data.length);
  for (let i = 0; i < data.length; i++) {
    data[i] = (frameA.data[i] + frameB.data[i]) >> 1;
  }
  return { width: frameA.width, height: frameA.height, data };
}

/** Deterministic luminance-rule gender verdict; near the boundary is unknown. */
export function analyzeGender(image: Raster): "male" | "female" | "unknown" {
  const gray = luminance(image);
  let mean = 0;
  for (const value of gray) mean += value;
  mean /= gray.length;
  if (Math.abs(mean - 128) < 2) return "unknown";
  return mean >= 128 ? "female" : "male";
}

export const EMBEDDING_DIM = 64;

function normalize(values: Float64Array): number[] {
  let norm = 0;
  for (const v of values) norm += v * v;
  norm = Math.sqrt(norm);
  if (norm < 1e-12) {
    throw new ModelRejection("bad_payload", "degenerate input has no embedding");
  }
  return Array.from(values, (v) => v / norm);
}

/** Character-trigram hashing into a unit vector. */
export function embedText(text: string): number[] {
  const bins = new Float64Array(EMBEDDING_DIM);
  const padded = `${text.toLowerCase()}`;
  for (let i = 0; i + 3 <= padded.length; i++) {
    let hash = 5381;
    for (let j = i; j < i + 3; j++) {
      hash = ((hash * 33) ^ padded.charCodeAt(j)) >>> 0;
    }
    bins[hash % EMBEDDING_DIM] += 1;
  }
  return normalize(bins);
}

/** Mean per-frame color/luminance histogram as a unit vector. */
export function embedFrames(frames: Raster[]): number[] {
  const bins = new Float64Array(EMBEDDING_DIM);
  for (const frame of frames) {
    const count = frame.width * frame.height;
    for (let p = 0; p < count; p++) {
      const i = p * 4;
      const r = frame.data[i];
      const g = frame.data[i + 1];
      const b = frame.data[i + 2];
      const luma = 0.299 * r + 0.587 * g + 0.114 * b;
      bins[Math.min(15, luma >> 4)] += 1 / count;
      bins[16 + Math.min(15, r >> 4)] += 1 / count;
      bins[32 + Math.min(15, g >> 4)] += 1 / count;
      bins[48 + Math.min(15, b >> 4)] += 1 / count;
    }
  }
  return normalize(bins);
}
