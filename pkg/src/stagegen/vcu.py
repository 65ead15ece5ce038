"""Video condition unit: prompt text, frame prefix, and preserve/generate masks.

The unit is the single conditioning input handed to image-to-video
backends: a given first frame followed by empty slots, with a mask plane
per slot saying whether the backend must preserve or generate it.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass
from enum import Enum

from .canonical import canonical_json_bytes, sha256_hex
from .media import Image, decode_png, encode_png

VCU_SCHEMA = "vcu/1"


class VcuError(Exception):
    """Base for condition-unit construction and codec failures."""


class ZeroLength(VcuError):
    """A single-image 'video' (n = 0) is rejected."""


class EmptyPrompt(VcuError):
    pass


class InvalidImage(VcuError):
    pass


class InvalidVcu(VcuError):
    def __init__(self, violations: list["Violation"]):
        super().__init__(f"condition unit violates invariants: {violations}")
        self.violations = violations


class MalformedPayload(VcuError):
    pass


class SchemaVersionUnsupported(VcuError):
    pass


class TaskKind(str, Enum):
    """Whether frame 0 conditions a first frame (i2v) or a reference face (r2v)."""

    I2V = "i2v"
    R2V = "r2v"


class MaskPlane(str, Enum):
    """Uniform mask plane: preserve the slot's content or generate it."""

    PRESERVE = "preserve"
    GENERATE = "generate"


@dataclass(frozen=True)
class FrameSlot:
    """Either a given image or an empty slot awaiting generation."""

    image: Image | None = None

    @property
    def is_given(self) -> bool:
        return self.image is not None

    @classmethod
    def given(cls, image: Image) -> "FrameSlot":
        return cls(image=image)

    @classmethod
    def empty(cls) -> "FrameSlot":
        return cls(image=None)


@dataclass(frozen=True)
class VCU:
    """Immutable conditioning unit; safe to share across concurrent jobs."""

    text: str
    frames: tuple[FrameSlot, ...]
    masks: tuple[MaskPlane, ...]
    height: int
    width: int
    task: TaskKind = TaskKind.I2V


class ViolationKind(Enum):
    # Declaration order is the deterministic reporting order.
    LENGTH_MISMATCH = "length_mismatch"
    MASK_FRAME_MISMATCH = "mask_frame_mismatch"
    EMPTY_TEXT = "empty_text"
    FRAME_DIMENSION_MISMATCH = "frame_dimension_mismatch"
    INVALID_FRAME_IMAGE = "invalid_frame_image"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    index: int | None = None
    detail: str = ""

    def __repr__(self) -> str:
        where = "" if self.index is None else f"({self.index})"
        return f"{self.kind.value}{where}"


def validate(vcu: VCU) -> list[Violation]:
    """Report every violated invariant; never raises.

    Order: by invariant (declaration order above), then by frame index.
    """
    violations: list[Violation] = []
    if len(vcu.frames) != len(vcu.masks):
        violations.append(Violation(
            ViolationKind.LENGTH_MISMATCH,
            detail=f"{len(vcu.frames)} frames vs {len(vcu.masks)} masks",
        ))
    for i, (frame, mask) in enumerate(zip(vcu.frames, vcu.masks)):
        if frame.is_given != (mask is MaskPlane.PRESERVE):
            violations.append(Violation(
                ViolationKind.MASK_FRAME_MISMATCH, index=i,
                detail=f"frame is {'given' if frame.is_given else 'empty'} "
                       f"but mask is {mask.value}",
            ))
    if not vcu.text:
        violations.append(Violation(ViolationKind.EMPTY_TEXT))
    for i, frame in enumerate(vcu.frames):
        if frame.image is not None and (frame.image.width, frame.image.height) != (vcu.width, vcu.height):
            violations.append(Violation(
                ViolationKind.FRAME_DIMENSION_MISMATCH, index=i,
                detail=f"{frame.image.width}x{frame.image.height} != "
                       f"{vcu.width}x{vcu.height}",
            ))
    for i, frame in enumerate(vcu.frames):
        if frame.image is not None:
            problem = frame.image.check()
            if problem is not None:
                violations.append(Violation(
                    ViolationKind.INVALID_FRAME_IMAGE, index=i, detail=problem,
                ))
    return violations


def _build(prefix: Image, n: int, prompt: str, task: TaskKind) -> VCU:
    problem = prefix.check()
    if problem is not None:
        raise InvalidImage(problem)
    if n < 1:
        raise ZeroLength(f"need >= 1 frame to generate, got n={n}")
    if not prompt.strip():
        raise EmptyPrompt("prompt must be non-empty")
    frames = (FrameSlot.given(prefix),) + tuple(FrameSlot.empty() for _ in range(n))
    masks = (MaskPlane.PRESERVE,) + (MaskPlane.GENERATE,) * n
    return VCU(
        text=prompt,
        frames=frames,
        masks=masks,
        height=prefix.height,
        width=prefix.width,
        task=task,
    )


def build_i2v_vcu(first_frame: Image, n: int, prompt: str) -> VCU:
    """First frame as prefix, n empty slots to generate after it."""
    return _build(first_frame, n, prompt, TaskKind.I2V)


def build_r2v_vcu(reference_face: Image, n: int, prompt: str) -> VCU:
    """Reference face as prefix; the tag tells backends frame 0 is not output."""
    return _build(reference_face, n, prompt, TaskKind.R2V)


def vcu_to_envelope(vcu: VCU) -> dict:
    """Wire envelope with keys in the canonical order."""
    violations = validate(vcu)
    if violations:
        raise InvalidVcu(violations)
    frames = []
    for slot in vcu.frames:
        if slot.image is not None:
            frames.append({
                "kind": "given",
                "png_base64": base64.b64encode(encode_png(slot.image)).decode("ascii"),
            })
        else:
            frames.append({"kind": "empty"})
    return {
        "schema": VCU_SCHEMA,
        "task": vcu.task.value,
        "text": vcu.text,
        "height": vcu.height,
        "width": vcu.width,
        "frames": frames,
        "masks": [m.value for m in vcu.masks],
    }


def serialize_vcu(vcu: VCU) -> bytes:
    return canonical_json_bytes(vcu_to_envelope(vcu))


def vcu_from_envelope(doc: object) -> VCU:
    if not isinstance(doc, dict):
        raise MalformedPayload("envelope must be an object")
    schema = doc.get("schema")
    if schema != VCU_SCHEMA:
        raise SchemaVersionUnsupported(f"unsupported schema: {schema!r}")
    try:
        task = TaskKind(doc["task"])
        text = doc["text"]
        height = doc["height"]
        width = doc["width"]
        raw_frames = doc["frames"]
        raw_masks = doc["masks"]
    except (KeyError, ValueError) as exc:
        raise MalformedPayload(f"bad envelope field: {exc}") from exc
    if not isinstance(text, str) or not isinstance(height, int) or not isinstance(width, int):
        raise MalformedPayload("text/height/width have wrong types")
    if not isinstance(raw_frames, list) or not isinstance(raw_masks, list):
        raise MalformedPayload("frames/masks must be arrays")
    frames: list[FrameSlot] = []
    for i, entry in enumerate(raw_frames):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise MalformedPayload(f"frame {i} is not a tagged object")
        kind = entry["kind"]
        if kind == "empty":
            frames.append(FrameSlot.empty())
        elif kind == "given":
            try:
                png = base64.b64decode(entry["png_base64"].encode("ascii"), validate=True)
                frames.append(FrameSlot.given(decode_png(png)))
            except (KeyError, AttributeError, binascii.Error, OSError, ValueError) as exc:
                raise MalformedPayload(f"frame {i} image undecodable: {exc}") from exc
        else:
            raise MalformedPayload(f"frame {i} has unknown kind {kind!r}")
    try:
        masks = tuple(MaskPlane(m) for m in raw_masks)
    except ValueError as exc:
        raise MalformedPayload(f"bad mask value: {exc}") from exc
    vcu = VCU(text=text, frames=tuple(frames), masks=masks,
              height=height, width=width, task=task)
    violations = validate(vcu)
    if violations:
        raise MalformedPayload(f"decoded unit violates invariants: {violations}")
    return vcu


def deserialize_vcu(raw: bytes) -> VCU:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedPayload(f"not valid JSON: {exc}") from exc
    return vcu_from_envelope(doc)


def vcu_digest(vcu: VCU) -> str:
    return sha256_hex(serialize_vcu(vcu))


def generated_frame_count(vcu: VCU) -> int:
    """Number of slots the backend must generate (the n in the layout)."""
    return sum(1 for m in vcu.masks if m is MaskPlane.GENERATE)
