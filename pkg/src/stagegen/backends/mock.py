"""Deterministic mock backends for every capability.

Each handler is a pure function of the request payload, so identical
requests always produce identical payloads (and content digests); this is
what makes end-to-end pipeline runs reproducible in tests.
"""

from __future__ import annotations

import base64
import hashlib
import random
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..canonical import payload_digest_json, sha256_hex
from ..media import Image, decode_png, encode_png, image_from_base64, png_base64
from ..prompts import default_lexicon, rules
from ..prompts.types import GenderValue
from .protocol import BACKEND_SCHEMA, Capability

MOCK_MODEL_ID = "mock-deterministic-v1"
EMBEDDING_DIM = 64


class MockRejection(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _payload_seed(payload: dict) -> bytes:
    return hashlib.sha256(payload_digest_json(payload)).digest()


def _decode(payload: dict, key: str) -> Image:
    try:
        return image_from_base64(payload[key])
    except Exception as exc:
        raise MockRejection("bad_image", f"{key}: {exc}") from exc


def mock_matting(image: Image) -> Image:
    """Alpha 255 where any channel is bright (>= 128), 0 elsewhere."""
    stride = image.channels
    out = bytearray(image.width * image.height * 4)
    subject_pixels = 0
    for p in range(image.width * image.height):
        src = p * stride
        r, g, b = image.data[src], image.data[src + 1], image.data[src + 2]
        alpha = 255 if max(r, g, b) >= 128 else 0
        subject_pixels += alpha != 0
        dst = p * 4
        out[dst:dst + 4] = bytes((r, g, b, alpha))
    if subject_pixels == 0:
        raise MockRejection("no_face_detected", "input has no subject")
    return Image(image.width, image.height, 4, bytes(out))


def mock_text_to_image(payload: dict) -> Image:
    """Solid-ish RGB image tiled from the request digest bytes."""
    width = int(payload.get("width", 64))
    height = int(payload.get("height", 64))
    if not payload.get("prompt"):
        raise MockRejection("generation_rejected", "empty prompt")
    seed = _payload_seed(payload)
    needed = width * height * 3
    data = (seed * (needed // len(seed) + 1))[:needed]
    return Image(width, height, 3, bytes(data))


def _watermark(frame: Image, index: int, seed: bytes) -> Image:
    data = bytearray(frame.data)
    stamp = bytes((index & 0xFF, (index >> 8) & 0xFF)) + seed[:10]
    data[: min(len(stamp), len(data))] = stamp[: min(len(stamp), len(data))]
    return Image(frame.width, frame.height, frame.channels, bytes(data))


def mock_image_to_video(payload: dict) -> list[Image]:
    """Conditioning frame echoed as frame 0, then index-watermarked copies."""
    vcu = payload.get("vcu")
    if not isinstance(vcu, dict):
        raise MockRejection("bad_vcu", "payload.vcu must be an object")
    frames = vcu.get("frames") or []
    if not frames or frames[0].get("kind") != "given":
        raise MockRejection("bad_vcu", "frame 0 must be given")
    try:
        first = decode_png(base64.b64decode(frames[0]["png_base64"]))
    except Exception as exc:
        raise MockRejection("bad_vcu", f"frame 0 undecodable: {exc}") from exc
    n = sum(1 for m in vcu.get("masks", []) if m == "generate")
    seed = _payload_seed(payload)
    return [first] + [_watermark(first, k, seed) for k in range(1, n + 1)]


def mock_llm(prompt: str) -> str:
    """Rule-engine stand-in for the two instruction templates."""
    lexicon = default_lexicon()
    if "TASK: spatial-entities" in prompt:
        raw = _after(prompt, "INPUT: ")
        entities = rules.extract_entities(raw, lexicon)
        return "\n".join(
            f"entity: {e.category.value} | {e.subject_role.value} | {e.text}"
            for e in entities
        )
    if "TASK: temporal-polish" in prompt:
        gender_text = _after(prompt, "GENDER: ").splitlines()[0].strip()
        raw = _after(prompt, "INPUT: ")
        try:
            gender = GenderValue(gender_text)
        except ValueError:
            gender = GenderValue.UNSPECIFIED
        if gender is GenderValue.UNSPECIFIED:
            gender = rules.scan_gender(raw, lexicon)
        rewritten, _ = rules.enforce_pronoun_agreement(raw, gender)
        cue = rules.pick_cue(rewritten, lexicon.dynamic_cues)
        return (
            f"gender: {gender.value}\n"
            f"rewritten: {rewritten}, {cue}\n"
            f"cues: {cue}"
        )
    raise MockRejection("unknown_task", "prompt carries no known TASK marker")


def _after(text: str, marker: str) -> str:
    index = text.find(marker)
    if index < 0:
        raise MockRejection("bad_prompt", f"missing {marker!r}")
    return text[index + len(marker):].strip()


def _seeded_unit_vector(seed: bytes) -> list[float]:
    rng = random.Random(int.from_bytes(seed[:8], "big"))
    values = [rng.uniform(-1.0, 1.0) for _ in range(EMBEDDING_DIM)]
    norm = sum(v * v for v in values) ** 0.5
    return [v / norm for v in values]


def mock_face_embedding(image: Image) -> list[float]:
    if not any(image.data):
        raise MockRejection("no_face_detected", "blank frame has no face")
    return _seeded_unit_vector(hashlib.sha256(encode_png(image)).digest())


def mock_face_analysis(image: Image) -> str:
    stride = image.channels
    total = 0
    count = image.width * image.height
    for p in range(count):
        src = p * stride
        total += image.data[src] + image.data[src + 1] + image.data[src + 2]
    return "female" if total / (3 * count) >= 128 else "male"


def mock_optical_flow(frame_a: Image, frame_b: Image) -> tuple[int, int, list[float]]:
    if (frame_a.width, frame_a.height) != (frame_b.width, frame_b.height):
        raise MockRejection("dimension_mismatch", "frames differ in size")
    stride_a, stride_b = frame_a.channels, frame_b.channels
    magnitudes = []
    for p in range(frame_a.width * frame_a.height):
        a, b = p * stride_a, p * stride_b
        diff = (
            abs(frame_a.data[a] - frame_b.data[b])
            + abs(frame_a.data[a + 1] - frame_b.data[b + 1])
            + abs(frame_a.data[a + 2] - frame_b.data[b + 2])
        )
        magnitudes.append(diff / 3.0)
    return frame_a.width, frame_a.height, magnitudes


def mock_aesthetic_score(image: Image) -> float:
    total = sum(image.data)
    return total / (len(image.data) * 255.0)


def mock_imaging_quality_score(image: Image) -> float:
    n = len(image.data)
    mean = sum(image.data) / n
    variance = sum((s - mean) ** 2 for s in image.data) / n
    return min(1.0, (variance ** 0.5) / 127.5)


def mock_interpolate(frame_a: Image, frame_b: Image) -> Image:
    if (frame_a.width, frame_a.height, frame_a.channels) != (
        frame_b.width, frame_b.height, frame_b.channels,
    ):
        raise MockRejection("dimension_mismatch", "frames differ in shape")
    data = bytes((a + b) // 2 for a, b in zip(frame_a.data, frame_b.data))
    return Image(frame_a.width, frame_a.height, frame_a.channels, data)


def mock_video_text_embedding(payload: dict) -> list[float]:
    return _seeded_unit_vector(_payload_seed(payload))


@dataclass
class MockScript:
    """Mutable failure scripting for fault-injection tests."""

    fail_counts: dict[Capability, int] = field(default_factory=dict)
    fail_status: int = 503
    llm_malformed_next: int = 0


class MockState:
    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.calls: dict[Capability, int] = {c: 0 for c in Capability}
        self.script = MockScript()

    def reset(self) -> None:
        with self.lock:
            self.calls = {c: 0 for c in Capability}
            self.script = MockScript()


def _handle(capability: Capability, payload: dict) -> dict:
    if capability is Capability.MATTING:
        return {"image": png_base64(mock_matting(_decode(payload, "image")))}
    if capability is Capability.TEXT_TO_IMAGE:
        return {"image": png_base64(mock_text_to_image(payload))}
    if capability is Capability.IMAGE_TO_VIDEO:
        frames = mock_image_to_video(payload)
        return {"frames": [png_base64(f) for f in frames], "fps": int(payload.get("fps", 16))}
    if capability is Capability.LLM:
        prompt = payload.get("prompt")
        if not isinstance(prompt, str):
            raise MockRejection("bad_prompt", "payload.prompt must be a string")
        return {"text": mock_llm(prompt)}
    if capability is Capability.FACE_EMBEDDING:
        values = mock_face_embedding(_decode(payload, "image"))
        return {"values": values, "dimension": len(values), "normalized": True}
    if capability is Capability.FACE_ANALYSIS:
        return {"gender": mock_face_analysis(_decode(payload, "image"))}
    if capability is Capability.OPTICAL_FLOW:
        width, height, magnitudes = mock_optical_flow(
            _decode(payload, "frame_a"), _decode(payload, "frame_b")
        )
        return {"width": width, "height": height, "magnitudes": magnitudes}
    if capability is Capability.VIDEO_TEXT_EMBEDDING:
        if ("frames" in payload) == ("text" in payload):
            raise MockRejection("bad_payload", "need exactly one of frames/text")
        values = mock_video_text_embedding(payload)
        return {"values": values, "dimension": len(values), "normalized": True}
    if capability is Capability.AESTHETIC_SCORE:
        score = mock_aesthetic_score(_decode(payload, "image"))
        return {"score": score, "native_score": score * 10.0,
                "native_scale": {"min": 0.0, "max": 10.0}}
    if capability is Capability.IMAGING_QUALITY_SCORE:
        score = mock_imaging_quality_score(_decode(payload, "image"))
        return {"score": score, "native_score": score * 100.0,
                "native_scale": {"min": 0.0, "max": 100.0}}
    if capability is Capability.FRAME_INTERPOLATION:
        image = mock_interpolate(_decode(payload, "frame_a"), _decode(payload, "frame_b"))
        return {"image": png_base64(image)}
    raise MockRejection("unknown_capability", capability.value)


def create_mock_app(model_id: str = MOCK_MODEL_ID) -> FastAPI:
    app = FastAPI(title="stagegen mock backends")
    state = MockState()
    app.state.mock = state

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "model_id": model_id,
            "capabilities": [c.value for c in Capability],
        }

    @app.post("/v1/{capability_name}")
    async def invoke(capability_name: str, request: Request) -> JSONResponse:
        try:
            capability = Capability(capability_name)
        except ValueError:
            return JSONResponse({"code": "unknown_capability",
                                 "message": capability_name}, status_code=404)
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"code": "bad_json", "message": "unparseable body"},
                                status_code=400)
        if not isinstance(body, dict) or body.get("schema") != BACKEND_SCHEMA:
            return JSONResponse({"code": "bad_schema",
                                 "message": f"expected {BACKEND_SCHEMA}"},
                                status_code=400)
        with state.lock:
            state.calls[capability] += 1
            remaining = state.script.fail_counts.get(capability, 0)
            if remaining != 0:
                if remaining > 0:
                    state.script.fail_counts[capability] = remaining - 1
                return JSONResponse(
                    {"code": "scripted_failure", "message": "scripted mock failure"},
                    status_code=state.script.fail_status,
                )
            malform_llm = (
                capability is Capability.LLM and state.script.llm_malformed_next > 0
            )
            if malform_llm:
                state.script.llm_malformed_next -= 1

        started = time.perf_counter()
        payload = body.get("payload")
        if not isinstance(payload, dict):
            return JSONResponse({"code": "bad_payload",
                                 "message": "payload must be an object"},
                                status_code=400)
        try:
            if malform_llm:
                result = {"text": "%%% not the structured reply you wanted %%%"}
            else:
                result = _handle(capability, payload)
        except MockRejection as exc:
            return JSONResponse({"code": exc.code, "message": exc.message},
                                status_code=422)
        latency_ms = (time.perf_counter() - started) * 1000.0
        return JSONResponse({
            "schema": BACKEND_SCHEMA,
            "capability": capability.value,
            "model_id": model_id,
            "latency_ms": latency_ms,
            "content_digest": sha256_hex(payload_digest_json(result)),
            "payload": result,
        })

    @app.post("/_mock/script")
    async def script(request: Request) -> dict:
        body = await request.json()
        with state.lock:
            for name, count in body.get("fail_counts", {}).items():
                state.script.fail_counts[Capability(name)] = int(count)
            if "fail_status" in body:
                state.script.fail_status = int(body["fail_status"])
            if "llm_malformed_next" in body:
                state.script.llm_malformed_next = int(body["llm_malformed_next"])
        return {"ok": True}

    @app.post("/_mock/reset")
    def reset() -> dict:
        state.reset()
        return {"ok": True}

    @app.get("/_mock/calls")
    def calls() -> dict:
        with state.lock:
            return {c.value: n for c, n in state.calls.items()}

    return app
