/** Raster helpers: PNG codec plus the pixel math the models share. */

import { PNG } from "pngjs";

import { ModelRejection } from "./protocol.js";

/** 8-bit RGBA raster, row-major. */
export interface Raster {
  width: number;
  height: number;
  data: Uint8Array; // length = width * height * 4
}

export function decodePngBase64(b64: string, field = "image"): Raster {
  let png: PNG;
  try {
    png = PNG.sync.read(Buffer.from(b64, "base64"));
  } catch (error) {
    throw new ModelRejection("bad_image", `${field}: ${(error as Error).message}`);
  }
  return { width: png.width, height: png.height, data: new Uint8Array(png.data) };
}

export function encodePngBase64(raster: Raster, withAlpha = true): string {
  const png = new PNG({
    width: raster.width,
    height: raster.height,
    colorType: withAlpha ? 6 : 2,
  });
  png.data = Buffer.from(raster.data);
  return PNG.sync.write(png).toString("base64");
}

export function blank(width: number, height: number, rgba: [number, number, number, number]): Raster {
  const data = new Uint8Array(width * height * 4);
  for (let p = 0; p < width * height; p++) {
    data.set(rgba, p * 4);
  }
  return { width, height, data };
}

/** Per-pixel luminance in [0, 255]. */
export function luminance(raster: Raster): Float64Array {
  const out = new Float64Array(raster.width * raster.height);
  for (let p = 0; p < out.length; p++) {
    const i = p * 4;
    out[p] =
      0.299 * raster.data[i] + 0.587 * raster.data[i + 1] + 0.114 * raster.data[i + 2];
  }
  return out;
}

/** Bilinear resample of a single-channel plane. */
export function resizePlane(
  plane: Float64Array,
  width: number,
  height: number,
  outWidth: number,
  outHeight: number,
): Float64Array {
  const out = new Float64Array(outWidth * outHeight);
  for (let y = 0; y < outHeight; y++) {
    const sy = outHeight === 1 ? 0 : (y * (height - 1)) / (outHeight - 1);
    const y0 = Math.floor(sy);
    const y1 = Math.min(height - 1, y0 + 1);
    const fy = sy - y0;
    for (let x = 0; x < outWidth; x++) {
      const sx = outWidth === 1 ? 0 : (x * (width - 1)) / (outWidth - 1);
      const x0 = Math.floor(sx);
      const x1 = Math.min(width - 1, x0 + 1);
      const fx = sx - x0;
      const top = plane[y0 * width + x0] * (1 - fx) + plane[y0 * width + x1] * fx;
      const bottom = plane[y1 * width + x0] * (1 - fx) + plane[y1 * width + x1] * fx;
      out[y * outWidth + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

export function requireSameShape(a: Raster, b: Raster): void {
  if (a.width !== b.width || a.height !== b.height) {
    throw new ModelRejection(
      "dimension_mismatch",
      `${a.width}x${a.height} vs ${b.width}x${b.height}`,
    );
  }
}
