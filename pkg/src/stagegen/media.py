"""Pixel-space media primitives shared across the pipeline.

Images stay in plain 8-bit pixel space; anything latent is a backend
concern and never crosses these types.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass

from PIL import Image as _PILImage

from .canonical import canonical_json_bytes, sha256_hex


@dataclass(frozen=True)
class Image:
    """8-bit RGB or RGBA raster, row-major samples."""

    width: int
    height: int
    channels: int
    data: bytes

    def check(self) -> str | None:
        """Return a description of the first violated invariant, or None."""
        if self.width < 1 or self.height < 1:
            return f"dimensions must be >= 1, got {self.width}x{self.height}"
        if self.channels not in (3, 4):
            return f"channels must be 3 (RGB) or 4 (RGBA), got {self.channels}"
        expected = self.width * self.height * self.channels
        if len(self.data) != expected:
            return f"data length {len(self.data)} != {expected}"
        return None

    @property
    def mode(self) -> str:
        return "RGBA" if self.channels == 4 else "RGB"

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, ...]) -> "Image":
        """Solid-color image; channel count follows len(color)."""
        return cls(width, height, len(color), bytes(color) * (width * height))


def encode_png(image: Image) -> bytes:
    problem = image.check()
    if problem is not None:
        raise ValueError(f"cannot encode invalid image: {problem}")
    pil = _PILImage.frombytes(image.mode, (image.width, image.height), image.data)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(payload: bytes) -> Image:
    pil = _PILImage.open(io.BytesIO(payload))
    pil.load()
    if pil.mode not in ("RGB", "RGBA"):
        pil = pil.convert("RGBA" if "A" in pil.mode or "transparency" in pil.info else "RGB")
    channels = 4 if pil.mode == "RGBA" else 3
    return Image(pil.width, pil.height, channels, pil.tobytes())


def png_base64(image: Image) -> str:
    """PNG bytes as base64 text, no line wrapping."""
    return base64.b64encode(encode_png(image)).decode("ascii")


def image_from_base64(text: str) -> Image:
    return decode_png(base64.b64decode(text.encode("ascii"), validate=True))


def image_digest(image: Image) -> str:
    return sha256_hex(encode_png(image))


VIDEO_SCHEMA = "video/1"


@dataclass(frozen=True)
class VideoArtifact:
    """Generated clip: ordered frames plus the prompt and conditioning lineage."""

    frames: tuple[Image, ...]
    fps: int
    prompt_used: str
    vcu_digest: str

    def __post_init__(self) -> None:
        if len(self.frames) < 2:
            raise ValueError(f"video needs >= 2 frames, got {len(self.frames)}")
        first = self.frames[0]
        for i, frame in enumerate(self.frames):
            if (frame.width, frame.height) != (first.width, first.height):
                raise ValueError(
                    f"frame {i} is {frame.width}x{frame.height}, "
                    f"expected {first.width}x{first.height}"
                )


def serialize_video(video: VideoArtifact) -> bytes:
    envelope = {
        "schema": VIDEO_SCHEMA,
        "fps": video.fps,
        "prompt_used": video.prompt_used,
        "vcu_digest": video.vcu_digest,
        "frames": [base64.b64encode(encode_png(f)).decode("ascii") for f in video.frames],
    }
    return canonical_json_bytes(envelope)


def deserialize_video(raw: bytes) -> VideoArtifact:
    doc = json.loads(raw.decode("utf-8"))
    if doc.get("schema") != VIDEO_SCHEMA:
        raise ValueError(f"unsupported video schema: {doc.get('schema')!r}")
    frames = tuple(image_from_base64(f) for f in doc["frames"])
    return VideoArtifact(
        frames=frames,
        fps=int(doc["fps"]),
        prompt_used=doc["prompt_used"],
        vcu_digest=doc["vcu_digest"],
    )
