"""Typed wire protocol, resilient clients, and deterministic mock backends."""

from .client import (
    BackendClient,
    FaceAnalysisHandle,
    InterpolatorHandle,
    LlmHandle,
    response_content_digest,
)
from .errors import (
    BackendError,
    BackendRejected,
    BackendTimeout,
    BackendUnreachable,
    FrameCountMismatch,
    GenerationRejected,
    NoFaceDetected,
    SchemaMismatch,
)
from .mock import MOCK_MODEL_ID, create_mock_app
from .protocol import (
    BACKEND_SCHEMA,
    BackendDescriptor,
    BackendRequest,
    BackendResponse,
    Capability,
    EmbeddingVector,
    FlowField,
)

__all__ = [
    "BACKEND_SCHEMA",
    "BackendClient",
    "BackendDescriptor",
    "BackendError",
    "BackendRejected",
    "BackendRequest",
    "BackendResponse",
    "BackendTimeout",
    "BackendUnreachable",
    "Capability",
    "EmbeddingVector",
    "FaceAnalysisHandle",
    "FlowField",
    "FrameCountMismatch",
    "GenerationRejected",
    "InterpolatorHandle",
    "LlmHandle",
    "MOCK_MODEL_ID",
    "NoFaceDetected",
    "SchemaMismatch",
    "create_mock_app",
    "response_content_digest",
]
