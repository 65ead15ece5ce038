/** Same-person embeddings must sit closer than different-person ones. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  RunningAdapter,
  b64,
  call,
  cosine,
  personPhoto,
  startAdapter,
  stopAdapter,
} from "./helpers.js";

describe("face embedding identity separation", () => {
  let adapter: RunningAdapter;

  beforeAll(async () => {
    adapter = await startAdapter("face_embedding");
  });

  afterAll(async () => {
    await stopAdapter(adapter);
  });

  async function embed(seed: number, variant: number): Promise<number[]> {
    const { status, body } = await call(adapter, {
      image: b64(personPhoto(seed, variant)),
    });
    expect(status).toBe(200);
    return body.payload.values;
  }

  it("same-person similarity exceeds different-person similarity on 5 pairs", async () => {
    const persons = [101, 202, 303, 404, 505];
    const shots: number[][][] = [];
    for (const seed of persons) {
      shots.push([await embed(seed, 0), await embed(seed, 1)]);
    }
    const samePair = shots.map(([a, b]) => cosine(a, b));
    const crossPair: number[] = [];
    for (let i = 0; i < persons.length; i++) {
      for (let j = i + 1; j < persons.length; j++) {
        crossPair.push(cosine(shots[i][0], shots[j][0]));
      }
    }
    const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;
    expect(mean(samePair)).toBeGreaterThan(mean(crossPair));
    // each matched pair beats every cross pair (directional, no tolerance)
    const worstSame = Math.min(...samePair);
    const bestCross = Math.max(...crossPair);
    expect(worstSame).toBeGreaterThan(bestCross);
  });

  it("blank frames are rejected as faceless", async () => {
    const { status, body } = await call(adapter, {
      image: b64({ width: 8, height: 8, data: new Uint8Array(8 * 8 * 4) }),
    });
    expect(status).toBe(422);
    expect(body.code).toBe("no_face_detected");
  });
});
