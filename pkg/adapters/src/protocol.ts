/** Wire protocol shared with the pipeline orchestrator. */

import { createHash } from "node:crypto";

export const BACKEND_SCHEMA = "backend/1";

export const CAPABILITIES = [
  "matting",
  "text_to_image",
  "image_to_video",
  "llm",
  "face_embedding",
  "face_analysis",
  "optical_flow",
  "video_text_embedding",
  "aesthetic_score",
  "imaging_quality_score",
  "frame_interpolation",
] as const;

export type Capability = (typeof CAPABILITIES)[number];

export function isCapability(name: string): name is Capability {
  return (CAPABILITIES as readonly string[]).includes(name);
}

export interface RequestEnvelope {
  schema: typeof BACKEND_SCHEMA;
  capability: Capability;
  model_id: string;
  payload: Record<string, unknown>;
}

export interface ResponseEnvelope {
  schema: typeof BACKEND_SCHEMA;
  capability: Capability;
  model_id: string;
  latency_ms: number;
  content_digest: string;
  payload: Record<string, unknown>;
}

/** Input the model cannot serve; maps to HTTP 422 with a machine code. */
export class ModelRejection extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

function sortValue(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortValue);
  }
  if (value !== null && typeof value === "object") {
    const source = value as Record<string, unknown>;
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(source).sort()) {
      out[key] = sortValue(source[key]);
    }
    return out;
  }
  return value;
}

/** Key-sorted compact JSON, the digest base for response payloads. */
export function canonicalJson(value: unknown): string {
  return JSON.stringify(sortValue(value));
}

export function contentDigest(payload: Record<string, unknown>): string {
  return createHash("sha256").update(canonicalJson(payload), "utf8").digest("hex");
}

export function responseEnvelope(
  capability: Capability,
  modelId: string,
  latencyMs: number,
  payload: Record<string, unknown>,
): ResponseEnvelope {
  return {
    schema: BACKEND_SCHEMA,
    capability,
    model_id: modelId,
    latency_ms: latencyMs,
    content_digest: contentDigest(payload),
    payload,
  };
}
