/** Block-matching optical flow reduced to per-pixel magnitudes. */

import { luminance, Raster, requireSameShape } from "../png.js";

const BLOCK = 8;
const SEARCH = 8;
// SAD units per pixel per displacement unit; biases ambiguous (flat or
// occluded) blocks toward small motion instead of search-window noise.
const DISPLACEMENT_PENALTY = 2.0;

export interface FlowResult {
  width: number;
  height: number;
  magnitudes: number[];
}

export function flowMagnitudes(frameA: Raster, frameB: Raster): FlowResult {
  requireSameShape(frameA, frameB);
  const { width, height } = frameA;
  const grayA = luminance(frameA);
  const grayB = luminance(frameB);
  const magnitudes = new Array<number>(width * height).fill(0);

  for (let by = 0; by < height; by += BLOCK) {
    for (let bx = 0; bx < width; bx += BLOCK) {
      const blockW = Math.min(BLOCK, width - bx);
      const blockH = Math.min(BLOCK, height - by);
      let bestCost = Infinity;
      let bestMagnitude = 0;
      for (let dy = -SEARCH; dy <= SEARCH; dy++) {
        if (by + dy < 0 || by + dy + blockH > height) continue;
        for (let dx = -SEARCH; dx <= SEARCH; dx++) {
          if (bx + dx < 0 || bx + dx + blockW > width) continue;
          let sad = 0;
          for (let y = 0; y < blockH; y++) {
            const rowA = (by + y) * width + bx;
            const rowB = (by + dy + y) * width + bx + dx;
            for (let x = 0; x < blockW; x++) {
              sad += Math.abs(grayA[rowA + x] - grayB[rowB + x]);
            }
          }
          const magnitude = Math.hypot(dx, dy);
          const cost = sad + DISPLACEMENT_PENALTY * magnitude * blockW * blockH;
          if (cost < bestCost) {
            bestCost = cost;
            bestMagnitude = magnitude;
          }
        }
      }
      for (let y = 0; y < blockH; y++) {
        for (let x = 0; x < blockW; x++) {
          magnitudes[(by + y) * width + bx + x] = bestMagnitude;
        }
      }
    }
  }
  return { width, height, magnitudes };
}
