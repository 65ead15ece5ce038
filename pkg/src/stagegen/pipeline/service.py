"""HTTP surface over the orchestrator."""

from __future__ import annotations

import base64

from fastapi import FastAPI
from fastapi.requests import Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from ..media import decode_png, serialize_video
from ..prompts.types import RawPrompt
from ..vcu import vcu_digest
from .artifacts import ArtifactNotFound
from .jobs import ReferenceInput
from .orchestrator import (
    DuplicateIdempotencyKey,
    JobNotFound,
    JobTerminal,
    Orchestrator,
)


class SubmitBody(BaseModel):
    identity_id: str = Field(min_length=1)
    face_png_base64: str
    prompt: str = Field(min_length=1)
    evaluate: bool | None = None
    polish: bool = True
    idempotency_key: str | None = None


class AdvanceBody(BaseModel):
    retry: bool = False


class BaselineBody(BaseModel):
    identity_id: str = Field(min_length=1)
    face_png_base64: str
    prompt: str = Field(min_length=1)


def _reference_input(identity_id: str, face_b64: str, prompt: str) -> ReferenceInput:
    face = decode_png(base64.b64decode(face_b64.encode("ascii"), validate=True))
    return ReferenceInput(
        identity_id=identity_id,
        reference_face=face,
        raw_prompt=RawPrompt(prompt),
    )


def create_service_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="stagegen pipeline service")

    @app.exception_handler(JobNotFound)
    async def job_not_found(_request: Request, exc: JobNotFound) -> JSONResponse:
        return JSONResponse({"error": "job_not_found", "message": str(exc)}, status_code=404)

    @app.exception_handler(JobTerminal)
    async def job_terminal(_request: Request, exc: JobTerminal) -> JSONResponse:
        return JSONResponse({"error": "job_terminal", "message": str(exc)}, status_code=409)

    @app.exception_handler(DuplicateIdempotencyKey)
    async def duplicate_key(_request: Request, exc: DuplicateIdempotencyKey) -> JSONResponse:
        return JSONResponse(
            {"error": "duplicate_idempotency_key", "existing_job_id": exc.existing_job_id},
            status_code=409,
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/jobs")
    def submit(body: SubmitBody) -> JSONResponse:
        try:
            ref = _reference_input(body.identity_id, body.face_png_base64, body.prompt)
        except Exception as exc:
            return JSONResponse({"error": "bad_input", "message": str(exc)}, status_code=422)
        job_id = orchestrator.submit(
            ref,
            evaluate=body.evaluate,
            polish=body.polish,
            idempotency_key=body.idempotency_key,
        )
        record = orchestrator.get_job(job_id)
        return JSONResponse({"job_id": job_id, "state": record.state.value})

    @app.get("/jobs/{job_id}")
    def status(job_id: str) -> dict:
        return orchestrator.get_job(job_id).to_dict()

    @app.post("/jobs/{job_id}/advance")
    def advance(job_id: str, body: AdvanceBody | None = None) -> dict:
        state = orchestrator.advance(job_id, retry=bool(body and body.retry))
        record = orchestrator.get_job(job_id)
        return {"job_id": job_id, "state": state.value, "error": record.error}

    @app.post("/jobs/{job_id}/cancel")
    def cancel(job_id: str) -> dict:
        orchestrator.cancel(job_id)
        return {"job_id": job_id, "cancel_requested": True}

    @app.get("/artifacts/{digest}")
    def artifact(digest: str) -> Response:
        try:
            data = orchestrator.store.get(digest)
        except ArtifactNotFound:
            return JSONResponse({"error": "artifact_not_found"}, status_code=404)
        return Response(content=data, media_type="application/octet-stream")

    @app.post("/baseline/r2v")
    def baseline(body: BaselineBody) -> JSONResponse:
        try:
            ref = _reference_input(body.identity_id, body.face_png_base64, body.prompt)
        except Exception as exc:
            return JSONResponse({"error": "bad_input", "message": str(exc)}, status_code=422)
        video = orchestrator.baseline_r2v(ref)
        video_bytes = serialize_video(video)
        digest = orchestrator.store.put(video_bytes)
        return JSONResponse({
            "video_digest": digest,
            "vcu_digest": video.vcu_digest,
            "frames": len(video.frames),
            "fps": video.fps,
        })

    return app
