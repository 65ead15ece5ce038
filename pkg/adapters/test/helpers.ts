/** Shared test utilities: server lifecycle, wire calls, synthetic photos. */

import type { Server } from "node:http";

import { blank, encodePngBase64, Raster, resizePlane } from "../src/png.js";
import { BACKEND_SCHEMA, Capability } from "../src/protocol.js";
import { serveCapability } from "../src/server.js";

export interface RunningAdapter {
  url: string;
  server: Server;
  capability: Capability;
}

export async function startAdapter(capability: Capability): Promise<RunningAdapter> {
  const server = await serveCapability({ capability });
  const address = server.address();
  if (typeof address !== "object" || address === null) {
    throw new Error("server has no port");
  }
  return { url: `http://127.0.0.1:${address.port}`, server, capability };
}

export async function stopAdapter(adapter: RunningAdapter): Promise<void> {
  await new Promise<void>((resolve) => adapter.server.close(() => resolve()));
}

export async function call(
  adapter: RunningAdapter,
  payload: Record<string, unknown>,
  capability?: string,
): Promise<{ status: number; body: any }> {
  const target = capability ?? adapter.capability;
  const response = await fetch(`${adapter.url}/v1/${target}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      schema: BACKEND_SCHEMA,
      capability: target,
      model_id: "test",
      payload,
    }),
  });
  return { status: response.status, body: await response.json() };
}

/** mulberry32: tiny deterministic PRNG for synthetic imagery. */
export function rng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Smooth random field upsampled from a coarse grid; one per "person". */
export function personPhoto(personSeed: number, variant: number): Raster {
  const size = 64;
  const random = rng(personSeed);
  const coarse = new Float64Array(64);
  for (let i = 0; i < coarse.length; i++) coarse[i] = 40 + random() * 175;
  const field = resizePlane(coarse, 8, 8, size, size);

  const jitter = rng(personSeed * 7919 + variant);
  const brightness = (variant % 3) * 12 - 12;
  const photo = blank(size, size, [0, 0, 0, 255]);
  for (let p = 0; p < size * size; p++) {
    const value = Math.max(
      0,
      Math.min(255, field[p] + brightness + (jitter() - 0.5) * 14),
    );
    const i = p * 4;
    photo.data[i] = value;
    photo.data[i + 1] = Math.max(0, Math.min(255, value * 0.9));
    photo.data[i + 2] = Math.max(0, Math.min(255, value * 0.8));
  }
  return photo;
}

/** Black frame with a centered random texture block. */
export function texturedFrame(seed: number, size = 64, textureSize = 32, offsetX = 0): Raster {
  const random = rng(seed);
  const texture: number[] = [];
  for (let i = 0; i < textureSize * textureSize; i++) {
    texture.push(Math.floor(random() * 256));
  }
  const frame = blank(size, size, [0, 0, 0, 255]);
  const start = Math.floor((size - textureSize) / 2);
  for (let y = 0; y < textureSize; y++) {
    for (let x = 0; x < textureSize; x++) {
      const value = texture[y * textureSize + x];
      const px = start + x + offsetX;
      const py = start + y;
      if (px < 0 || px >= size || py < 0 || py >= size) continue;
      const i = (py * size + px) * 4;
      frame.data[i] = value;
      frame.data[i + 1] = value;
      frame.data[i + 2] = value;
    }
  }
  return frame;
}

export function b64(raster: Raster): string {
  return encodePngBase64(raster, false);
}

export function cosine(a: number[], b: number[]): number {
  let dot = 0;
  let normA = 0;
  let normB = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    normA += a[i] * a[i];
    normB += b[i] * b[i];
  }
  return dot / Math.sqrt(normA * normB);
}
