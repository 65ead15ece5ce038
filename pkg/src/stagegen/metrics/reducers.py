"""Pure aggregation math for the six evaluation metrics.

Backends supply features (embeddings, scores, flow magnitudes,
reconstructed frames); everything here is deterministic reduction.

Frame order matters only where time does: arc_sim and frame_score_mean
are permutation-invariant, while motion_smoothness and the dynamic-degree
flow pooling read consecutive-frame structure and may change under
reordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from ..backends.protocol import EmbeddingVector, FlowField
from ..media import Image


class MetricError(Exception):
    pass


class DimensionMismatch(MetricError):
    pass


class NoFacesInVideo(MetricError):
    pass


class EmptyInput(MetricError):
    pass


class TooFewFrames(MetricError):
    pass


class FacelessFramePolicy(str, Enum):
    SKIP = "skip"
    FAIL = "fail"


class FlowPooling(str, Enum):
    GLOBAL = "global"
    PER_PAIR = "per_pair"


@dataclass(frozen=True)
class MetricConfig:
    # Flow magnitudes are normalized by the frame diagonal before pooling,
    # so the threshold is dimensionless (a pure p-pixel translation scores
    # p / diagonal).
    dd_threshold: float = 0.01
    dd_top_fraction: float = 0.05
    ms_normalizer: float = 255.0
    faceless_frame_policy: FacelessFramePolicy = FacelessFramePolicy.SKIP
    flow_pooling: FlowPooling = FlowPooling.GLOBAL

    def __post_init__(self) -> None:
        if not 0 < self.dd_top_fraction <= 1:
            raise ValueError("dd_top_fraction must be in (0, 1]")
        if self.dd_threshold <= 0:
            raise ValueError("dd_threshold must be > 0")
        if self.ms_normalizer <= 0:
            raise ValueError("ms_normalizer must be > 0")

    def to_dict(self) -> dict:
        return {
            "dd_threshold": self.dd_threshold,
            "dd_top_fraction": self.dd_top_fraction,
            "ms_normalizer": self.ms_normalizer,
            "faceless_frame_policy": self.faceless_frame_policy.value,
            "flow_pooling": self.flow_pooling.value,
        }


def _cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dimension != b.dimension:
        raise DimensionMismatch(f"{a.dimension} != {b.dimension}")
    va = np.asarray(a.values, dtype=np.float64)
    vb = np.asarray(b.values, dtype=np.float64)
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise MetricError("cannot take cosine of a zero-norm embedding")
    return float(np.dot(va, vb) / (norm_a * norm_b))


def arc_sim(ref_embedding: EmbeddingVector, frame_embeddings: Sequence[EmbeddingVector]) -> float:
    """Mean cosine similarity between the reference face and each frame face."""
    if not frame_embeddings:
        raise NoFacesInVideo("no frame embeddings to compare")
    return float(np.mean([_cosine(ref_embedding, f) for f in frame_embeddings]))


def overall_consistency(video_embedding: EmbeddingVector, text_embedding: EmbeddingVector) -> float:
    """Cosine similarity between whole-video and prompt-text embeddings."""
    return _cosine(video_embedding, text_embedding)


def frame_score_mean(scores: Sequence[float]) -> float:
    """Arithmetic mean of per-frame scores; serves both AQ and IQ."""
    if len(scores) == 0:
        raise EmptyInput("no frame scores")
    return float(np.mean(np.asarray(scores, dtype=np.float64)))


Interpolator = Callable[[Image, Image], Image]


def _samples(image: Image) -> np.ndarray:
    return np.frombuffer(image.data, dtype=np.uint8).astype(np.float64)


def motion_smoothness(frames: Sequence[Image], interp: Interpolator, cfg: MetricConfig) -> float:
    """Drop odd frames, reconstruct them from even neighbors, score by MAE.

    Only odd indices with both neighbors are reconstructed; a trailing odd
    frame is kept as-is. Score is 1 - MAE / ms_normalizer, clamped to [0, 1].
    """
    if len(frames) < 3:
        raise TooFewFrames(f"need >= 3 frames, got {len(frames)}")
    total_error = 0.0
    total_samples = 0
    for k in range(1, len(frames) - 1, 2):
        reconstructed = interp(frames[k - 1], frames[k + 1])
        original = frames[k]
        if (reconstructed.width, reconstructed.height, reconstructed.channels) != (
            original.width, original.height, original.channels,
        ):
            raise MetricError(f"reconstruction of frame {k} has wrong shape")
        total_error += float(np.abs(_samples(reconstructed) - _samples(original)).sum())
        total_samples += len(original.data)
    mae = total_error / total_samples
    return float(min(1.0, max(0.0, 1.0 - mae / cfg.ms_normalizer)))


def dynamic_degree_video(flows: Sequence[FlowField], cfg: MetricConfig) -> tuple[float, bool]:
    """Average the top fraction of diagonal-normalized flow magnitudes.

    Global pooling ranks all pairs together; per-pair pooling ranks within
    each pair and averages the per-pair means.
    """
    if not flows:
        raise EmptyInput("no flow fields")
    if cfg.flow_pooling is FlowPooling.GLOBAL:
        pooled = np.concatenate([
            np.asarray(f.magnitudes, dtype=np.float64) / f.diagonal for f in flows
        ])
        mean_top = _top_fraction_mean(pooled, cfg.dd_top_fraction)
    else:
        per_pair = [
            _top_fraction_mean(
                np.asarray(f.magnitudes, dtype=np.float64) / f.diagonal,
                cfg.dd_top_fraction,
            )
            for f in flows
        ]
        mean_top = float(np.mean(per_pair))
    return mean_top, mean_top > cfg.dd_threshold


def _top_fraction_mean(values: np.ndarray, fraction: float) -> float:
    k = math.ceil(fraction * values.size)
    top = np.partition(values, values.size - k)[values.size - k:]
    # Sequential sum in descending order keeps the result independent of
    # how the selection permuted equal elements.
    total = 0.0
    for value in sorted(top.tolist(), reverse=True):
        total += value
    return total / k


def dynamic_degree_set(dynamic_flags: Sequence[bool]) -> float:
    """Proportion of non-static videos."""
    if len(dynamic_flags) == 0:
        raise EmptyInput("no videos")
    return sum(1 for flag in dynamic_flags if flag) / len(dynamic_flags)
