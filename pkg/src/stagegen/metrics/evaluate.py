"""Per-video metric orchestration and report assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..backends.client import BackendClient, InterpolatorHandle
from ..backends.errors import BackendError, NoFaceDetected
from ..backends.protocol import BackendDescriptor, EmbeddingVector
from ..canonical import canonical_json_bytes
from ..media import Image, VideoArtifact
from .reducers import (
    FacelessFramePolicy,
    MetricConfig,
    MetricError,
    NoFacesInVideo,
    arc_sim,
    dynamic_degree_set,
    dynamic_degree_video,
    frame_score_mean,
    motion_smoothness,
    overall_consistency,
)

REPORT_SCHEMA = "report/1"

METRIC_FIELDS = ("arc_sim", "oc", "aq", "iq", "ms")


@dataclass
class MetricBackends:
    """Descriptor bundle for the evaluation stage; None means not configured."""

    client: BackendClient
    face_embedding: BackendDescriptor | None = None
    video_text_embedding: BackendDescriptor | None = None
    aesthetic: BackendDescriptor | None = None
    imaging: BackendDescriptor | None = None
    optical_flow: BackendDescriptor | None = None
    frame_interpolation: BackendDescriptor | None = None

    def model_ids(self) -> dict[str, str]:
        ids = {}
        for name in ("face_embedding", "video_text_embedding", "aesthetic",
                     "imaging", "optical_flow", "frame_interpolation"):
            descriptor = getattr(self, name)
            if descriptor is not None:
                ids[name] = descriptor.model_id
        return ids


@dataclass
class MetricRow:
    """One evaluated video; absent fields carry their reason in `errors`."""

    arc_sim: float | None = None
    oc: float | None = None
    aq: float | None = None
    iq: float | None = None
    ms: float | None = None
    mean_top_flow: float | None = None
    dynamic: bool | None = None
    errors: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "arc_sim": self.arc_sim,
            "oc": self.oc,
            "aq": self.aq,
            "iq": self.iq,
            "ms": self.ms,
            "mean_top_flow": self.mean_top_flow,
            "dynamic": self.dynamic,
            "errors": dict(sorted(self.errors.items())),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricRow":
        return cls(
            arc_sim=doc.get("arc_sim"),
            oc=doc.get("oc"),
            aq=doc.get("aq"),
            iq=doc.get("iq"),
            ms=doc.get("ms"),
            mean_top_flow=doc.get("mean_top_flow"),
            dynamic=doc.get("dynamic"),
            errors=dict(doc.get("errors", {})),
        )


def evaluate_video(
    video: VideoArtifact,
    reference_face: Image,
    prompt_text: str,
    backends: MetricBackends,
    cfg: MetricConfig,
) -> MetricRow:
    """Run every configured metric; failures mark the row instead of raising."""
    row = MetricRow()
    client = backends.client
    frames = list(video.frames)

    if backends.face_embedding is None:
        row.errors["arc_sim"] = "face_embedding backend not configured"
    else:
        try:
            ref = client.face_embed(reference_face, backends.face_embedding)
            frame_embeddings: list[EmbeddingVector] = []
            for index, frame in enumerate(frames):
                try:
                    frame_embeddings.append(client.face_embed(frame, backends.face_embedding))
                except NoFaceDetected as exc:
                    if cfg.faceless_frame_policy is FacelessFramePolicy.FAIL:
                        raise NoFacesInVideo(f"frame {index} has no face: {exc}") from exc
            row.arc_sim = arc_sim(ref, frame_embeddings)
        except (MetricError, BackendError) as exc:
            row.errors["arc_sim"] = f"{type(exc).__name__}: {exc}"

    if backends.video_text_embedding is None:
        row.errors["oc"] = "video_text_embedding backend not configured"
    else:
        try:
            video_embedding = client.video_text_embed(
                backends.video_text_embedding, frames=frames)
            text_embedding = client.video_text_embed(
                backends.video_text_embedding, text=prompt_text)
            row.oc = overall_consistency(video_embedding, text_embedding)
        except (MetricError, BackendError) as exc:
            row.errors["oc"] = f"{type(exc).__name__}: {exc}"

    for name, descriptor, method in (
        ("aq", backends.aesthetic, client.aesthetic_score),
        ("iq", backends.imaging, client.imaging_quality_score),
    ):
        if descriptor is None:
            row.errors[name] = f"{name} backend not configured"
            continue
        try:
            scores = [method(frame, descriptor) for frame in frames]
            setattr(row, name, frame_score_mean(scores))
        except (MetricError, BackendError) as exc:
            row.errors[name] = f"{type(exc).__name__}: {exc}"

    if backends.frame_interpolation is None:
        row.errors["ms"] = "frame_interpolation backend not configured"
    else:
        try:
            interpolator = InterpolatorHandle(client, backends.frame_interpolation)
            row.ms = motion_smoothness(frames, interpolator, cfg)
        except (MetricError, BackendError) as exc:
            row.errors["ms"] = f"{type(exc).__name__}: {exc}"

    if backends.optical_flow is None:
        row.errors["dynamic"] = "optical_flow backend not configured"
    else:
        try:
            flows = [
                client.optical_flow(frames[i], frames[i + 1], backends.optical_flow)
                for i in range(len(frames) - 1)
            ]
            row.mean_top_flow, row.dynamic = dynamic_degree_video(flows, cfg)
        except (MetricError, BackendError) as exc:
            row.errors["dynamic"] = f"{type(exc).__name__}: {exc}"

    return row


def compute_aggregate(rows: dict[str, MetricRow]) -> dict[str, float | None]:
    """Means per metric over present values; dd is the dynamic proportion."""
    aggregate: dict[str, float | None] = {}
    for name in METRIC_FIELDS:
        values = [getattr(row, name) for row in rows.values() if getattr(row, name) is not None]
        aggregate[name] = sum(values) / len(values) if values else None
    flags = [row.dynamic for row in rows.values() if row.dynamic is not None]
    aggregate["dd"] = dynamic_degree_set(flags) if flags else None
    return aggregate


@dataclass
class MetricReport:
    per_video: dict[str, MetricRow]
    aggregate: dict[str, float | None]
    provenance: dict

    def is_self_consistent(self) -> bool:
        return compute_aggregate(self.per_video) == self.aggregate


def build_report(
    rows: dict[str, MetricRow],
    backends: MetricBackends | None,
    cfg: MetricConfig,
    notes: list[str] | None = None,
) -> MetricReport:
    provenance = {
        "model_ids": backends.model_ids() if backends is not None else {},
        "config": cfg.to_dict(),
        "notes": list(notes or []),
    }
    return MetricReport(
        per_video=dict(rows),
        aggregate=compute_aggregate(rows),
        provenance=provenance,
    )


def serialize_report(report: MetricReport) -> bytes:
    envelope = {
        "schema": REPORT_SCHEMA,
        "provenance": {
            "model_ids": dict(sorted(report.provenance.get("model_ids", {}).items())),
            "config": report.provenance.get("config", {}),
            "notes": report.provenance.get("notes", []),
        },
        "per_video": {
            video_id: report.per_video[video_id].to_dict()
            for video_id in sorted(report.per_video)
        },
        "aggregate": report.aggregate,
    }
    return canonical_json_bytes(envelope)


def deserialize_report(raw: bytes) -> MetricReport:
    doc = json.loads(raw.decode("utf-8"))
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema: {doc.get('schema')!r}")
    return MetricReport(
        per_video={vid: MetricRow.from_dict(row) for vid, row in doc["per_video"].items()},
        aggregate=doc["aggregate"],
        provenance=doc["provenance"],
    )
