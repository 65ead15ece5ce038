/** Illumination-invariant block-signature face embedding. */

import { luminance, Raster, resizePlane } from "../png.js";
import { ModelRejection } from "../protocol.js";

export const EMBEDDING_DIM = 64;

/**
 * Luminance resampled to 16x16, pooled to an 8x8 signature, zero-meaned
 * (kills brightness shifts) and unit-normalized (kills contrast scale).
 */
export function embedFace(image: Raster): number[] {
  const plane = resizePlane(luminance(image), image.width, image.height, 16, 16);
  const signature = new Float64Array(EMBEDDING_DIM);
  for (let y = 0; y < 8; y++) {
    for (let x = 0; x < 8; x++) {
      signature[y * 8 + x] =
        (plane[2 * y * 16 + 2 * x] +
          plane[2 * y * 16 + 2 * x + 1] +
          plane[(2 * y + 1) * 16 + 2 * x] +
          plane[(2 * y + 1) * 16 + 2 * x + 1]) /
        4;
    }
  }
  const mean = signature.reduce((a, b) => a + b, 0) / EMBEDDING_DIM;
  let norm = 0;
  for (let i = 0; i < EMBEDDING_DIM; i++) {
    signature[i] -= mean;
    norm += signature[i] * signature[i];
  }
  norm = Math.sqrt(norm);
  if (norm < 1e-9) {
    throw new ModelRejection("no_face_detected", "featureless frame has no face signal");
  }
  return Array.from(signature, (v) => v / norm);
}
