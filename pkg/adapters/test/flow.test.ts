/** The flow adapter must recover a synthetic 5-pixel translation. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  RunningAdapter,
  b64,
  call,
  startAdapter,
  stopAdapter,
  texturedFrame,
} from "./helpers.js";

describe("optical flow translation recovery", () => {
  let adapter: RunningAdapter;

  beforeAll(async () => {
    adapter = await startAdapter("optical_flow");
  });

  afterAll(async () => {
    await stopAdapter(adapter);
  });

  it("recovers a 5-pixel translation within 20% after normalization", async () => {
    const frameA = texturedFrame(42, 64, 32, 0);
    const frameB = texturedFrame(42, 64, 32, 5); // same texture, shifted subject
    const { status, body } = await call(adapter, {
      frame_a: b64(frameA),
      frame_b: b64(frameB),
    });
    expect(status).toBe(200);
    const { width, height, magnitudes } = body.payload;
    expect(magnitudes).toHaveLength(width * height);

    // top-5% pooling, normalized by the frame diagonal (the metric's view)
    const diagonal = Math.hypot(width, height);
    const normalized = magnitudes
      .map((m: number) => m / diagonal)
      .sort((a: number, b: number) => b - a);
    const k = Math.ceil(0.05 * normalized.length);
    const meanTop = normalized.slice(0, k).reduce((a: number, b: number) => a + b, 0) / k;

    const expected = 5 / diagonal;
    expect(Math.abs(meanTop - expected)).toBeLessThanOrEqual(0.2 * expected);
  });

  it("identical frames give zero flow", async () => {
    const frame = texturedFrame(7);
    const { body } = await call(adapter, { frame_a: b64(frame), frame_b: b64(frame) });
    expect(Math.max(...body.payload.magnitudes)).toBe(0);
  });

  it("mismatched dimensions are rejected", async () => {
    const { status, body } = await call(adapter, {
      frame_a: b64(texturedFrame(1, 32, 16)),
      frame_b: b64(texturedFrame(1, 64, 32)),
    });
    expect(status).toBe(422);
    expect(body.code).toBe("dimension_mismatch");
  });
});
