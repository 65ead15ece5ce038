"""Job records for the stage-wise generation state machine."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from ..media import Image
from ..prompts.types import RawPrompt


class JobState(str, Enum):
    PENDING = "pending"
    PREPROCESSING = "preprocessing"
    SPATIAL_PARSING = "spatial_parsing"
    FIRST_FRAME_GEN = "first_frame_gen"
    TEMPORAL_POLISHING = "temporal_polishing"
    VIDEO_GEN = "video_gen"
    EVALUATING = "evaluating"
    DONE = "done"
    FAILED = "failed"


# Executable stages in their fixed order; a state value of STAGE_ORDER[i]
# means that stage completed and its artifact digest is persisted.
STAGE_ORDER = (
    JobState.PREPROCESSING,
    JobState.SPATIAL_PARSING,
    JobState.FIRST_FRAME_GEN,
    JobState.TEMPORAL_POLISHING,
    JobState.VIDEO_GEN,
    JobState.EVALUATING,
)

TERMINAL_STATES = frozenset({JobState.DONE, JobState.FAILED})


def next_stage(state: JobState, *, evaluate: bool) -> JobState | None:
    """The stage advance() must execute next, or None when complete."""
    if state is JobState.PENDING:
        return STAGE_ORDER[0]
    if state not in STAGE_ORDER:
        raise ValueError(f"no next stage from state {state.value}")
    index = STAGE_ORDER.index(state)
    if state is JobState.VIDEO_GEN and not evaluate:
        return None
    if index + 1 < len(STAGE_ORDER):
        return STAGE_ORDER[index + 1]
    return None


@dataclass(frozen=True)
class ReferenceInput:
    identity_id: str
    reference_face: Image
    raw_prompt: RawPrompt

    def __post_init__(self) -> None:
        if not self.identity_id:
            raise ValueError("identity_id must be non-empty")
        problem = self.reference_face.check()
        if problem is not None:
            raise ValueError(f"reference face invalid: {problem}")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class JobRecord:
    job_id: str
    identity_id: str
    face_digest: str
    raw_prompt: str
    input_digest: str = ""
    state: JobState = JobState.PENDING
    stage_outputs: dict[str, str] = field(default_factory=dict)
    created_at: str = field(default_factory=utc_now)
    updated_at: str = field(default_factory=utc_now)
    error: dict | None = None
    cancel_requested: bool = False
    evaluate: bool = True
    polish: bool = True
    idempotency_key: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "identity_id": self.identity_id,
            "face_digest": self.face_digest,
            "raw_prompt": self.raw_prompt,
            "input_digest": self.input_digest,
            "state": self.state.value,
            "stage_outputs": dict(self.stage_outputs),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "error": self.error,
            "cancel_requested": self.cancel_requested,
            "evaluate": self.evaluate,
            "polish": self.polish,
            "idempotency_key": self.idempotency_key,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "JobRecord":
        return cls(
            job_id=doc["job_id"],
            identity_id=doc["identity_id"],
            face_digest=doc["face_digest"],
            raw_prompt=doc["raw_prompt"],
            input_digest=doc.get("input_digest", ""),
            state=JobState(doc["state"]),
            stage_outputs=dict(doc.get("stage_outputs", {})),
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
            error=doc.get("error"),
            cancel_requested=bool(doc.get("cancel_requested", False)),
            evaluate=bool(doc.get("evaluate", True)),
            polish=bool(doc.get("polish", True)),
            idempotency_key=doc.get("idempotency_key"),
        )
