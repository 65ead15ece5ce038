"""Resilient HTTP client for capability backends, plus typed call wrappers."""

from __future__ import annotations

import logging
import random
import threading
import time
from typing import Callable

import httpx

from ..canonical import payload_digest_json, sha256_hex
from ..media import Image, VideoArtifact, image_from_base64, png_base64
from ..prompts.types import LlmUnavailable, SpatialPrompt
from ..vcu import VCU, InvalidVcu, generated_frame_count, validate, vcu_digest, vcu_to_envelope
from .errors import (
    BackendRejected,
    BackendTimeout,
    BackendUnreachable,
    FrameCountMismatch,
    GenerationRejected,
    NoFaceDetected,
    SchemaMismatch,
)
from .protocol import (
    BACKEND_SCHEMA,
    BackendDescriptor,
    BackendRequest,
    BackendResponse,
    Capability,
    EmbeddingVector,
    FlowField,
)

logger = logging.getLogger(__name__)

BACKOFF_BASE = 0.5
BACKOFF_FACTOR = 2.0
BACKOFF_CAP = 30.0

_REJECTION_CODES = {
    "no_face_detected": NoFaceDetected,
    "generation_rejected": GenerationRejected,
}


class BackendClient:
    """Shareable across concurrent jobs; one semaphore per descriptor
    protects GPU backends from request floods."""

    def __init__(
        self,
        http: httpx.Client | None = None,
        *,
        max_inflight: int = 4,
        sleeper: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self._http = http or httpx.Client()
        self._max_inflight = max_inflight
        self._sleep = sleeper
        self._rng = rng or random.Random()
        self._semaphores: dict[tuple[str, Capability], threading.Semaphore] = {}
        self._sem_lock = threading.Lock()

    def _semaphore(self, descriptor: BackendDescriptor) -> threading.Semaphore:
        key = (descriptor.endpoint, descriptor.capability)
        with self._sem_lock:
            if key not in self._semaphores:
                self._semaphores[key] = threading.Semaphore(self._max_inflight)
            return self._semaphores[key]

    def _backoff_delay(self, retry_index: int) -> float:
        ceiling = min(BACKOFF_CAP, BACKOFF_BASE * BACKOFF_FACTOR ** (retry_index - 1))
        return self._rng.uniform(0.0, ceiling)

    def call(self, descriptor: BackendDescriptor, request: BackendRequest) -> BackendResponse:
        """POST the envelope with at most 1 + max_retries attempts.

        5xx and transport failures retry with exponential backoff and full
        jitter; 422 and other 4xx do not.
        """
        if request.capability is not descriptor.capability:
            raise SchemaMismatch(
                f"request capability {request.capability.value} != "
                f"descriptor capability {descriptor.capability.value}"
            )
        url = f"{descriptor.endpoint.rstrip('/')}/v1/{descriptor.capability.value}"
        body = {
            "schema": BACKEND_SCHEMA,
            "capability": descriptor.capability.value,
            "model_id": descriptor.model_id,
            "payload": request.payload,
        }
        headers = {}
        if descriptor.bearer_token:
            headers["authorization"] = f"Bearer {descriptor.bearer_token}"

        attempts = 1 + descriptor.max_retries
        last_error: Exception | None = None
        with self._semaphore(descriptor):
            for attempt in range(1, attempts + 1):
                if attempt > 1:
                    self._sleep(self._backoff_delay(attempt - 1))
                try:
                    raw = self._http.post(
                        url, json=body, headers=headers, timeout=descriptor.timeout
                    )
                except httpx.TimeoutException as exc:
                    last_error = BackendTimeout(f"{url}: {exc}")
                    logger.warning("backend %s attempt %d/%d timed out",
                                   descriptor.capability.value, attempt, attempts)
                    continue
                except httpx.HTTPError as exc:
                    last_error = BackendUnreachable(f"{url}: {exc}")
                    logger.warning("backend %s attempt %d/%d unreachable: %s",
                                   descriptor.capability.value, attempt, attempts, exc)
                    continue
                if raw.status_code >= 500:
                    last_error = BackendRejected(raw.status_code, raw.text[:500])
                    logger.warning("backend %s attempt %d/%d returned %d",
                                   descriptor.capability.value, attempt, attempts,
                                   raw.status_code)
                    continue
                if raw.status_code == 422:
                    raise self._rejection(raw)
                if raw.status_code >= 400:
                    raise BackendRejected(raw.status_code, raw.text[:500])
                logger.info("backend %s attempt %d/%d ok",
                            descriptor.capability.value, attempt, attempts)
                return self._parse_response(descriptor, raw)
        assert last_error is not None
        raise last_error

    @staticmethod
    def _rejection(raw: httpx.Response) -> Exception:
        code = None
        message = raw.text[:500]
        try:
            doc = raw.json()
            code = doc.get("code")
            message = doc.get("message", message)
        except ValueError:
            pass
        error_type = _REJECTION_CODES.get(code)
        if error_type is not None:
            return error_type(message)
        return BackendRejected(raw.status_code, message, code=code)

    @staticmethod
    def _parse_response(descriptor: BackendDescriptor, raw: httpx.Response) -> BackendResponse:
        try:
            doc = raw.json()
        except ValueError as exc:
            raise SchemaMismatch(f"response is not JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("schema") != BACKEND_SCHEMA:
            raise SchemaMismatch(f"bad response schema: {doc.get('schema')!r}")
        if doc.get("capability") != descriptor.capability.value:
            raise SchemaMismatch(
                f"response capability {doc.get('capability')!r} != "
                f"{descriptor.capability.value!r}"
            )
        for key in ("model_id", "latency_ms", "content_digest", "payload"):
            if key not in doc:
                raise SchemaMismatch(f"response missing {key!r}")
        if not isinstance(doc["payload"], dict):
            raise SchemaMismatch("response payload must be an object")
        return BackendResponse(
            capability=descriptor.capability,
            payload=doc["payload"],
            model_id=doc["model_id"],
            latency_ms=float(doc["latency_ms"]),
            content_digest=doc["content_digest"],
        )

    # ---- capability wrappers -------------------------------------------

    def remove_background(self, image: Image, matting: BackendDescriptor) -> Image:
        """Matting call; alpha 0 marks removed background."""
        response = self.call(matting, BackendRequest(
            Capability.MATTING, {"image": png_base64(image)}
        ))
        out = self._payload_image(response, "image")
        if out.channels != 4:
            raise SchemaMismatch("matting backend must return RGBA")
        if (out.width, out.height) != (image.width, image.height):
            raise SchemaMismatch(
                f"matting changed dimensions: {out.width}x{out.height} != "
                f"{image.width}x{image.height}"
            )
        return out

    def generate_first_frame(
        self,
        face_rgba: Image,
        spatial: SpatialPrompt,
        t2i: BackendDescriptor,
        *,
        width: int = 512,
        height: int = 512,
    ) -> Image:
        if not spatial.rendered:
            raise ValueError("spatial prompt must be rendered before generation")
        response = self.call(t2i, BackendRequest(Capability.TEXT_TO_IMAGE, {
            "face": png_base64(face_rgba),
            "prompt": spatial.rendered,
            "width": width,
            "height": height,
        }))
        return self._payload_image(response, "image")

    def generate_video(self, vcu: VCU, i2v: BackendDescriptor, *, fps: int = 16) -> VideoArtifact:
        violations = validate(vcu)
        if violations:
            raise InvalidVcu(violations)
        response = self.call(i2v, BackendRequest(Capability.IMAGE_TO_VIDEO, {
            "vcu": vcu_to_envelope(vcu),
            "fps": fps,
        }))
        raw_frames = response.payload.get("frames")
        if not isinstance(raw_frames, list) or not raw_frames:
            raise SchemaMismatch("image-to-video payload must carry frames")
        try:
            frames = [image_from_base64(f) for f in raw_frames]
        except Exception as exc:
            raise SchemaMismatch(f"undecodable frame: {exc}") from exc
        n = generated_frame_count(vcu)
        expected = n + 1 if i2v.returns_conditioning_frame else n
        if len(frames) != expected:
            raise FrameCountMismatch(
                f"backend returned {len(frames)} frames, expected {expected} "
                f"(n={n}, returns_conditioning_frame={i2v.returns_conditioning_frame})"
            )
        if not i2v.returns_conditioning_frame:
            conditioning = vcu.frames[0].image
            assert conditioning is not None
            frames = [conditioning] + frames
        return VideoArtifact(
            frames=tuple(frames),
            fps=fps,
            prompt_used=vcu.text,
            vcu_digest=vcu_digest(vcu),
        )

    def face_embed(self, image: Image, descriptor: BackendDescriptor) -> EmbeddingVector:
        response = self.call(descriptor, BackendRequest(
            Capability.FACE_EMBEDDING, {"image": png_base64(image)}
        ))
        return self._payload_embedding(response)

    def video_text_embed(
        self,
        descriptor: BackendDescriptor,
        *,
        frames: list[Image] | None = None,
        text: str | None = None,
    ) -> EmbeddingVector:
        if (frames is None) == (text is None):
            raise ValueError("provide exactly one of frames or text")
        payload: dict = {}
        if frames is not None:
            payload["frames"] = [png_base64(f) for f in frames]
        else:
            payload["text"] = text
        response = self.call(descriptor, BackendRequest(
            Capability.VIDEO_TEXT_EMBEDDING, payload
        ))
        return self._payload_embedding(response)

    def optical_flow(self, frame_a: Image, frame_b: Image, descriptor: BackendDescriptor) -> FlowField:
        response = self.call(descriptor, BackendRequest(Capability.OPTICAL_FLOW, {
            "frame_a": png_base64(frame_a),
            "frame_b": png_base64(frame_b),
        }))
        payload = response.payload
        try:
            return FlowField(
                width=int(payload["width"]),
                height=int(payload["height"]),
                magnitudes=tuple(float(m) for m in payload["magnitudes"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"bad flow payload: {exc}") from exc

    def aesthetic_score(self, image: Image, descriptor: BackendDescriptor) -> float:
        return self._score(image, descriptor, Capability.AESTHETIC_SCORE)

    def imaging_quality_score(self, image: Image, descriptor: BackendDescriptor) -> float:
        return self._score(image, descriptor, Capability.IMAGING_QUALITY_SCORE)

    def interpolate(self, frame_a: Image, frame_b: Image, descriptor: BackendDescriptor) -> Image:
        response = self.call(descriptor, BackendRequest(Capability.FRAME_INTERPOLATION, {
            "frame_a": png_base64(frame_a),
            "frame_b": png_base64(frame_b),
        }))
        return self._payload_image(response, "image")

    def _score(self, image: Image, descriptor: BackendDescriptor, capability: Capability) -> float:
        response = self.call(descriptor, BackendRequest(capability, {"image": png_base64(image)}))
        try:
            score = float(response.payload["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"bad score payload: {exc}") from exc
        if not 0.0 <= score <= 1.0:
            raise SchemaMismatch(f"score {score} outside [0, 1]")
        return score

    @staticmethod
    def _payload_image(response: BackendResponse, key: str) -> Image:
        try:
            return image_from_base64(response.payload[key])
        except Exception as exc:
            raise SchemaMismatch(f"bad image payload: {exc}") from exc

    @staticmethod
    def _payload_embedding(response: BackendResponse) -> EmbeddingVector:
        payload = response.payload
        try:
            vector = EmbeddingVector(
                values=tuple(float(v) for v in payload["values"]),
                dimension=int(payload["dimension"]),
                normalized=bool(payload.get("normalized", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"bad embedding payload: {exc}") from exc
        return vector


def response_content_digest(payload: dict) -> str:
    """Digest servers advertise: SHA-256 over the key-sorted payload JSON."""
    return sha256_hex(payload_digest_json(payload))


class LlmHandle:
    """prompts.TextCompletion backed by the LLM capability."""

    def __init__(self, client: BackendClient, descriptor: BackendDescriptor):
        self._client = client
        self._descriptor = descriptor

    def complete(self, prompt: str) -> str:
        try:
            response = self._client.call(self._descriptor, BackendRequest(
                Capability.LLM, {"prompt": prompt}
            ))
        except (BackendTimeout, BackendUnreachable) as exc:
            raise LlmUnavailable(str(exc)) from exc
        except BackendRejected as exc:
            if exc.status >= 500:
                raise LlmUnavailable(str(exc)) from exc
            raise
        text = response.payload.get("text")
        if not isinstance(text, str):
            raise SchemaMismatch("llm payload must carry text")
        return text


class FaceAnalysisHandle:
    """prompts.FaceGenderOracle backed by the face-analysis capability."""

    def __init__(self, client: BackendClient, descriptor: BackendDescriptor):
        self._client = client
        self._descriptor = descriptor

    def gender(self, image: Image) -> str:
        response = self._client.call(self._descriptor, BackendRequest(
            Capability.FACE_ANALYSIS, {"image": png_base64(image)}
        ))
        verdict = response.payload.get("gender")
        if verdict not in ("male", "female", "unknown"):
            raise SchemaMismatch(f"bad face-analysis verdict: {verdict!r}")
        return verdict


class InterpolatorHandle:
    """Frame-interpolation callable for the metrics reducers."""

    def __init__(self, client: BackendClient, descriptor: BackendDescriptor):
        self._client = client
        self._descriptor = descriptor

    def __call__(self, frame_a: Image, frame_b: Image) -> Image:
        return self._client.interpolate(frame_a, frame_b, self._descriptor)
