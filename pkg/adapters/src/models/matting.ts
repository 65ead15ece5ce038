/** Background removal by Otsu thresholding on luminance. */

import { luminance, Raster } from "../png.js";
import { ModelRejection } from "../protocol.js";

function otsuThreshold(histogram: Float64Array, total: number): number {
  let sum = 0;
  for (let level = 0; level < 256; level++) sum += level * histogram[level];
  let sumBackground = 0;
  let weightBackground = 0;
  let bestVariance = -1;
  let threshold = 127;
  for (let level = 0; level < 256; level++) {
    weightBackground += histogram[level];
    if (weightBackground === 0) continue;
    const weightForeground = total - weightBackground;
    if (weightForeground === 0) break;
    sumBackground += level * histogram[level];
    const meanBackground = sumBackground / weightBackground;
    const meanForeground = (sum - sumBackground) / weightForeground;
    const variance =
      weightBackground * weightForeground * (meanBackground - meanForeground) ** 2;
    if (variance > bestVariance) {
      bestVariance = variance;
      threshold = level;
    }
  }
  return threshold;
}

export function removeBackground(image: Raster): Raster {
  const gray = luminance(image);
  const histogram = new Float64Array(256);
  for (const value of gray) histogram[Math.min(255, Math.round(value))]++;
  const threshold = otsuThreshold(histogram, gray.length);

  // the brighter Otsu class is the lit subject
  const data = new Uint8Array(image.data);
  let subjectPixels = 0;
  for (let p = 0; p < gray.length; p++) {
    const isSubject = gray[p] > threshold;
    data[p * 4 + 3] = isSubject ? 255 : 0;
    if (isSubject) subjectPixels++;
  }
  if (subjectPixels === 0 || subjectPixels === gray.length) {
    throw new ModelRejection("no_face_detected", "no separable subject in the image");
  }
  return { width: image.width, height: image.height, data };
}
