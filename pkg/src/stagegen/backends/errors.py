"""Protocol-level failures shared by every capability client."""

from __future__ import annotations


class BackendError(Exception):
    pass


class BackendTimeout(BackendError):
    pass


class BackendUnreachable(BackendError):
    pass


class BackendRejected(BackendError):
    def __init__(self, status: int, message: str, code: str | None = None):
        super().__init__(f"backend rejected request ({status}): {message}")
        self.status = status
        self.message = message
        self.code = code


class SchemaMismatch(BackendError):
    """Capability or envelope disagreement, detected client side."""


class NoFaceDetected(BackendError):
    """The backend found no subject in the input image."""


class GenerationRejected(BackendError):
    """Content policy refusal from a generator backend."""


class FrameCountMismatch(BackendError):
    pass
