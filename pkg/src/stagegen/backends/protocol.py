"""Typed wire protocol for remote model capabilities.

One uniform envelope covers every capability so any real model can be
wrapped by a thin adapter; the orchestrator never sees model internals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

BACKEND_SCHEMA = "backend/1"


class Capability(str, Enum):
    MATTING = "matting"
    TEXT_TO_IMAGE = "text_to_image"
    IMAGE_TO_VIDEO = "image_to_video"
    LLM = "llm"
    FACE_EMBEDDING = "face_embedding"
    FACE_ANALYSIS = "face_analysis"
    OPTICAL_FLOW = "optical_flow"
    VIDEO_TEXT_EMBEDDING = "video_text_embedding"
    AESTHETIC_SCORE = "aesthetic_score"
    IMAGING_QUALITY_SCORE = "imaging_quality_score"
    FRAME_INTERPOLATION = "frame_interpolation"


@dataclass(frozen=True)
class BackendDescriptor:
    """An opaque remote model endpoint; model_id encodes any weight selection."""

    capability: Capability
    endpoint: str
    model_id: str = "default"
    timeout: float = 30.0
    max_retries: int = 2
    bearer_token: str | None = None
    # Whether the image-to-video backend echoes the conditioning frame as
    # frame 0 of its output (only meaningful for IMAGE_TO_VIDEO).
    returns_conditioning_frame: bool = True

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class BackendRequest:
    capability: Capability
    payload: dict


@dataclass(frozen=True)
class BackendResponse:
    capability: Capability
    payload: dict
    model_id: str
    latency_ms: float
    content_digest: str


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int
    normalized: bool = False

    def __post_init__(self) -> None:
        if self.dimension != len(self.values):
            raise ValueError(f"dimension {self.dimension} != {len(self.values)} values")
        if self.normalized:
            norm = math.sqrt(sum(v * v for v in self.values))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"normalized vector has norm {norm}")

    @classmethod
    def of(cls, values, normalized: bool = False) -> "EmbeddingVector":
        values = tuple(float(v) for v in values)
        return cls(values=values, dimension=len(values), normalized=normalized)


@dataclass(frozen=True)
class FlowField:
    """Per-pixel flow magnitudes, already reduced from 2-vector flow."""

    width: int
    height: int
    magnitudes: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.magnitudes) != self.width * self.height:
            raise ValueError(
                f"{len(self.magnitudes)} magnitudes != {self.width}x{self.height}"
            )
        if any(m < 0 for m in self.magnitudes):
            raise ValueError("flow magnitudes must be non-negative")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)
