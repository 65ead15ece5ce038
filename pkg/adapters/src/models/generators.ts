/** Procedural text-to-image and image-to-video generators.

Deterministic stand-ins with real image structure: the portrait carries
the reference skin tone and prompt-derived scene colors; the video moves
the conditioning frame so downstream flow metrics see actual motion.
*/

import { blank, decodePngBase64, Raster } from "../png.js";
import { ModelRejection } from "../protocol.js";

function hashString(text: string): number {
  let hash = 2166136261;
  for (let i = 0; i < text.length; i++) {
    hash = (hash ^ text.charCodeAt(i)) >>> 0;
    hash = Math.imul(hash, 16777619) >>> 0;
  }
  return hash >>> 0;
}

function averageSubjectColor(face: Raster): [number, number, number] {
  let r = 0;
  let g = 0;
  let b = 0;
  let count = 0;
  for (let p = 0; p < face.width * face.height; p++) {
    const i = p * 4;
    if (face.data[i + 3] === 0) continue;
    r += face.data[i];
    g += face.data[i + 1];
    b += face.data[i + 2];
    count++;
  }
  if (count === 0) {
    throw new ModelRejection("no_face_detected", "reference has no opaque subject pixels");
  }
  return [Math.round(r / count), Math.round(g / count), Math.round(b / count)];
}

export function generatePortrait(
  face: Raster,
  prompt: string,
  width: number,
  height: number,
): Raster {
  if (!prompt.trim()) {
    throw new ModelRejection("generation_rejected", "empty prompt");
  }
  const [skinR, skinG, skinB] = averageSubjectColor(face);
  const seed = hashString(prompt);
  const topColor = [seed & 0xff, (seed >> 8) & 0xff, (seed >> 16) & 0xff];
  const bottomColor = [(seed >> 4) & 0xff, (seed >> 12) & 0xff, (seed >> 20) & 0xff];

  const out = blank(width, height, [0, 0, 0, 255]);
  const centerX = width / 2;
  const faceY = height * 0.42;
  const radiusX = width * 0.27;
  const radiusY = height * 0.33;
  for (let y = 0; y < height; y++) {
    const t = height === 1 ? 0 : y / (height - 1);
    for (let x = 0; x < width; x++) {
      const i = (y * width + x) * 4;
      const inFace =
        ((x - centerX) / radiusX) ** 2 + ((y - faceY) / radiusY) ** 2 <= 1;
      const hair = inFace && y < faceY - radiusY * 0.45;
      const eye =
        inFace &&
        Math.abs(y - faceY * 0.92) < height * 0.02 &&
        (Math.abs(x - centerX - radiusX * 0.4) < width * 0.03 ||
          Math.abs(x - centerX + radiusX * 0.4) < width * 0.03);
      if (eye || hair) {
        out.data[i] = 24;
        out.data[i + 1] = 18;
        out.data[i + 2] = 16;
      } else if (inFace) {
        out.data[i] = skinR;
        out.data[i + 1] = skinG;
        out.data[i + 2] = skinB;
      } else {
        out.data[i] = Math.round(topColor[0] * (1 - t) + bottomColor[0] * t);
        out.data[i + 1] = Math.round(topColor[1] * (1 - t) + bottomColor[1] * t);
        out.data[i + 2] = Math.round(topColor[2] * (1 - t) + bottomColor[2] * t);
      }
    }
  }
  return out;
}

interface VcuEnvelope {
  schema: string;
  text: string;
  frames: Array<{ kind: string; png_base64?: string }>;
  masks: string[];
}

function shiftRight(frame: Raster, offset: number): Raster {
  const { width, height } = frame;
  const data = new Uint8Array(frame.data.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const srcX = (x - offset + width * 8) % width;
      data.set(
        frame.data.subarray((y * width + srcX) * 4, (y * width + srcX) * 4 + 4),
        (y * width + x) * 4,
      );
    }
  }
  return { width, height, data };
}

/** Conditioning frame echoed first, then progressively shifted copies. */
export function generateVideo(vcu: unknown): Raster[] {
  const envelope = vcu as VcuEnvelope;
  if (!envelope || envelope.schema !== "vcu/1" || !Array.isArray(envelope.frames)) {
    throw new ModelRejection("bad_vcu", "payload.vcu must be a vcu/1 envelope");
  }
  const first = envelope.frames[0];
  if (!first || first.kind !== "given" || !first.png_base64) {
    throw new ModelRejection("bad_vcu", "frame 0 must be a given frame");
  }
  const conditioning = decodePngBase64(first.png_base64, "vcu.frames[0]");
  const n = envelope.masks.filter((m) => m === "generate").length;
  if (n < 1) {
    throw new ModelRejection("bad_vcu", "nothing to generate");
  }
  const frames = [conditioning];
  for (let k = 1; k <= n; k++) {
    frames.push(shiftRight(conditioning, k));
  }
  return frames;
}
