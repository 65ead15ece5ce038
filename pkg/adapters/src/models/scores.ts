/** Aesthetic and imaging-quality scorers with native-scale metadata. */

import { luminance, Raster } from "../png.js";

export interface ScoredResult {
  score: number;
  native_score: number;
  native_scale: { min: number; max: number };
}

const COLORFULNESS_SATURATION = 110; // typical natural-image ceiling

/** Hasler–Süsstrunk colorfulness, mapped to [0, 1]. */
export function aestheticScore(image: Raster): ScoredResult {
  const n = image.width * image.height;
  let sumRg = 0;
  let sumRg2 = 0;
  let sumYb = 0;
  let sumYb2 = 0;
  for (let p = 0; p < n; p++) {
    const i = p * 4;
    const rg = image.data[i] - image.data[i + 1];
    const yb = (image.data[i] + image.data[i + 1]) / 2 - image.data[i + 2];
    sumRg += rg;
    sumRg2 += rg * rg;
    sumYb += yb;
    sumYb2 += yb * yb;
  }
  const meanRg = sumRg / n;
  const meanYb = sumYb / n;
  const stdRg = Math.sqrt(Math.max(0, sumRg2 / n - meanRg * meanRg));
  const stdYb = Math.sqrt(Math.max(0, sumYb2 / n - meanYb * meanYb));
  const colorfulness =
    Math.hypot(stdRg, stdYb) + 0.3 * Math.hypot(meanRg, meanYb);
  return {
    score: Math.min(1, colorfulness / COLORFULNESS_SATURATION),
    native_score: colorfulness,
    native_scale: { min: 0, max: COLORFULNESS_SATURATION },
  };
}

const SHARPNESS_SATURATION = 10000; // Laplacian variance saturation point

/** Laplacian-variance sharpness, mapped to [0, 1]. */
export function imagingQualityScore(image: Raster): ScoredResult {
  const { width, height } = image;
  const gray = luminance(image);
  let sum = 0;
  let sum2 = 0;
  let count = 0;
  for (let y = 1; y < height - 1; y++) {
    for (let x = 1; x < width - 1; x++) {
      const p = y * width + x;
      const lap =
        gray[p - 1] + gray[p + 1] + gray[p - width] + gray[p + width] - 4 * gray[p];
      sum += lap;
      sum2 += lap * lap;
      count++;
    }
  }
  const variance = count === 0 ? 0 : Math.max(0, sum2 / count - (sum / count) ** 2);
  return {
    score: Math.min(1, variance / SHARPNESS_SATURATION),
    native_score: variance,
    native_scale: { min: 0, max: SHARPNESS_SATURATION },
  };
}
