/** One adapter server per capability, speaking the backend/1 envelope. */

import express from "express";
import type { Express, Request, Response } from "express";
import type { Server } from "node:http";

import { decodePngBase64, encodePngBase64, Raster } from "./png.js";
import {
  BACKEND_SCHEMA,
  Capability,
  isCapability,
  ModelRejection,
  responseEnvelope,
} from "./protocol.js";
import { embedFace } from "./models/faceEmbedding.js";
import { flowMagnitudes } from "./models/opticalFlow.js";
import { generatePortrait, generateVideo } from "./models/generators.js";
import { completeInstruction } from "./models/llm.js";
import {
  analyzeGender,
  embedFrames,
  embedText,
  interpolateFrames,
} from "./models/media.js";
import { removeBackground } from "./models/matting.js";
import { aestheticScore, imagingQualityScore } from "./models/scores.js";

export interface AdapterConfig {
  capability: Capability;
  port?: number;
  modelId?: string;
  /** Checkpoint path or hub id; the built-in models take no weights but the
   * hook stays so real checkpoints are pure deployment configuration. */
  modelSource?: string;
}

type Payload = Record<string, unknown>;

function image(payload: Payload, field: string): Raster {
  const value = payload[field];
  if (typeof value !== "string") {
    throw new ModelRejection("bad_payload", `${field} must be a base64 PNG string`);
  }
  return decodePngBase64(value, field);
}

function text(payload: Payload, field: string): string {
  const value = payload[field];
  if (typeof value !== "string") {
    throw new ModelRejection("bad_payload", `${field} must be a string`);
  }
  return value;
}

function dimension(payload: Payload, field: string, fallback: number): number {
  const value = payload[field] ?? fallback;
  if (typeof value !== "number" || !Number.isInteger(value) || value < 1) {
    throw new ModelRejection("bad_payload", `${field} must be a positive integer`);
  }
  return value;
}

const HANDLERS: Record<Capability, (payload: Payload) => Payload> = {
  matting: (payload) => ({
    image: encodePngBase64(removeBackground(image(payload, "image")), true),
  }),
  text_to_image: (payload) => ({
    image: encodePngBase64(
      generatePortrait(
        image(payload, "face"),
        text(payload, "prompt"),
        dimension(payload, "width", 512),
        dimension(payload, "height", 512),
      ),
      false,
    ),
  }),
  image_to_video: (payload) => ({
    frames: generateVideo(payload.vcu).map((frame) => encodePngBase64(frame, false)),
    fps: dimension(payload, "fps", 16),
  }),
  llm: (payload) => ({ text: completeInstruction(text(payload, "prompt")) }),
  face_embedding: (payload) => {
    const values = embedFace(image(payload, "image"));
    return { values, dimension: values.length, normalized: true };
  },
  face_analysis: (payload) => ({ gender: analyzeGender(image(payload, "image")) }),
  optical_flow: (payload) =>
    flowMagnitudes(image(payload, "frame_a"), image(payload, "frame_b")) as unknown as Payload,
  video_text_embedding: (payload) => {
    const hasFrames = payload.frames !== undefined;
    const hasText = payload.text !== undefined;
    if (hasFrames === hasText) {
      throw new ModelRejection("bad_payload", "provide exactly one of frames/text");
    }
    let values: number[];
    if (hasText) {
      values = embedText(text(payload, "text"));
    } else {
      if (!Array.isArray(payload.frames) || payload.frames.length === 0) {
        throw new ModelRejection("bad_payload", "frames must be a non-empty array");
      }
      values = embedFrames(
        payload.frames.map((f, i) => {
          if (typeof f !== "string") {
            throw new ModelRejection("bad_payload", `frames[${i}] must be a string`);
          }
          return decodePngBase64(f, `frames[${i}]`);
        }),
      );
    }
    return { values, dimension: values.length, normalized: true };
  },
  aesthetic_score: (payload) =>
    aestheticScore(image(payload, "image")) as unknown as Payload,
  imaging_quality_score: (payload) =>
    imagingQualityScore(image(payload, "image")) as unknown as Payload,
  frame_interpolation: (payload) => ({
    image: encodePngBase64(
      interpolateFrames(image(payload, "frame_a"), image(payload, "frame_b")),
      false,
    ),
  }),
};

export function createAdapterApp(config: AdapterConfig): Express {
  const app = express();
  app.use(express.json({ limit: "64mb" }));
  const modelId = config.modelId ?? `builtin:${config.capability}`;

  app.get("/v1/health", (_request: Request, response: Response) => {
    response.json({ capability: config.capability, model_id: modelId });
  });

  app.post("/v1/:capability", (request: Request, response: Response) => {
    const name = String(request.params.capability);
    if (!isCapability(name) || name !== config.capability) {
      response.status(404).json({
        code: "wrong_capability",
        message: `this adapter serves ${config.capability}`,
      });
      return;
    }
    const body = request.body as Record<string, unknown> | undefined;
    if (!body || body.schema !== BACKEND_SCHEMA) {
      response.status(400).json({
        code: "bad_schema",
        message: `expected schema ${BACKEND_SCHEMA}`,
      });
      return;
    }
    if (body.capability !== config.capability) {
      response.status(400).json({
        code: "bad_schema",
        message: "envelope capability does not match the path",
      });
      return;
    }
    const payload = body.payload;
    if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
      response.status(400).json({
        code: "bad_payload",
        message: "payload must be an object",
      });
      return;
    }
    const started = process.hrtime.bigint();
    try {
      const result = HANDLERS[config.capability](payload as Payload);
      const latencyMs = Number(process.hrtime.bigint() - started) / 1e6;
      response.json(responseEnvelope(config.capability, modelId, latencyMs, result));
    } catch (error) {
      if (error instanceof ModelRejection) {
        response.status(422).json({ code: error.code, message: error.message });
        return;
      }
      response.status(500).json({
        code: "internal_error",
        message: (error as Error).message,
      });
    }
  });

  return app;
}

export function serveCapability(config: AdapterConfig): Promise<Server> {
  const app = createAdapterApp(config);
  return new Promise((resolve) => {
    const server = app.listen(config.port ?? 0, () => resolve(server));
  });
}
