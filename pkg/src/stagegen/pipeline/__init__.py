"""Stage-wise job orchestration with a content-addressed artifact store."""

from ..media import VideoArtifact
from .artifacts import ArtifactNotFound, ArtifactStore, StoreUnavailable, TransitionConflict
from .jobs import JobRecord, JobState, ReferenceInput, STAGE_ORDER, TERMINAL_STATES, next_stage
from .orchestrator import (
    Cancelled,
    DuplicateIdempotencyKey,
    JobNotFound,
    JobTerminal,
    MissingBackend,
    Orchestrator,
)
from .service import create_service_app

__all__ = [
    "ArtifactNotFound",
    "ArtifactStore",
    "Cancelled",
    "DuplicateIdempotencyKey",
    "JobNotFound",
    "JobRecord",
    "JobState",
    "JobTerminal",
    "MissingBackend",
    "Orchestrator",
    "ReferenceInput",
    "STAGE_ORDER",
    "StoreUnavailable",
    "TERMINAL_STATES",
    "TransitionConflict",
    "VideoArtifact",
    "create_service_app",
    "next_stage",
]
