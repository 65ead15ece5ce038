"""Drives generation jobs through the two-stage pipeline, one stage per advance.

Every stage output is content-addressed in the store before the state
moves forward, so a crash between stages loses nothing and a retry re-runs
only the failed stage.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from collections import defaultdict

from ..backends.client import BackendClient, FaceAnalysisHandle, LlmHandle
from ..backends.protocol import BackendDescriptor, Capability
from ..canonical import canonical_json_bytes, payload_digest_json, sha256_hex
from ..config import AppConfig
from ..media import (
    VideoArtifact,
    decode_png,
    deserialize_video,
    encode_png,
    serialize_video,
)
from ..metrics.evaluate import MetricBackends, build_report, evaluate_video, serialize_report
from ..prompts import (
    Gender,
    RawPrompt,
    TemplateStore,
    TemporalPrompt,
    apply_spatial_filters,
    extract_spatial_entities,
    load_lexicon,
    polish_temporal,
    predict_gender,
    render_spatial,
)
from ..prompts.rules import SPATIAL_RULES_VERSION, TEMPORAL_RULES_VERSION
from ..prompts.types import (
    spatial_prompt_from_dict,
    spatial_prompt_to_dict,
    temporal_prompt_from_dict,
    temporal_prompt_to_dict,
)
from ..vcu import build_i2v_vcu, build_r2v_vcu, serialize_vcu
from .artifacts import ArtifactNotFound, ArtifactStore
from .jobs import JobRecord, JobState, ReferenceInput, TERMINAL_STATES, next_stage, utc_now

logger = logging.getLogger(__name__)


class JobNotFound(Exception):
    pass


class JobTerminal(Exception):
    pass


class DuplicateIdempotencyKey(Exception):
    def __init__(self, existing_job_id: str):
        super().__init__(f"idempotency key already used by job {existing_job_id}")
        self.existing_job_id = existing_job_id


class MissingBackend(Exception):
    def __init__(self, capability: Capability):
        super().__init__(f"no backend configured for capability {capability.value}")
        self.capability = capability


class Cancelled(Exception):
    pass


class Orchestrator:
    """Stateless over the store: a new instance resumes everything mid-flight."""

    def __init__(
        self,
        config: AppConfig,
        store: ArtifactStore | None = None,
        client: BackendClient | None = None,
    ):
        self.config = config
        self.store = store or ArtifactStore(config.store_root)
        self.client = client or BackendClient(max_inflight=config.max_inflight)
        self._lexicon = load_lexicon(config.lexicon_path)
        self._templates = TemplateStore(config.templates_dir)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock(self, job_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[job_id]

    def _descriptor(self, capability: Capability) -> BackendDescriptor:
        descriptor = self.config.descriptor(capability)
        if descriptor is None:
            raise MissingBackend(capability)
        return descriptor

    def _llm(self) -> LlmHandle | None:
        if not self.config.llm_enabled():
            return None
        return LlmHandle(self.client, self._descriptor(Capability.LLM))

    # ---- submission -------------------------------------------------------

    def submit(
        self,
        ref: ReferenceInput,
        *,
        evaluate: bool | None = None,
        polish: bool = True,
        idempotency_key: str | None = None,
    ) -> str:
        face_bytes = encode_png(ref.reference_face)
        input_digest = sha256_hex(payload_digest_json({
            "identity_id": ref.identity_id,
            "face": sha256_hex(face_bytes),
            "prompt": ref.raw_prompt.text,
        }))
        if idempotency_key is not None:
            existing = self.store.idempotency_lookup(idempotency_key)
            if existing is not None:
                record = self._load(existing)
                if record.input_digest == input_digest:
                    return existing
                raise DuplicateIdempotencyKey(existing)
        face_digest = self.store.put(face_bytes)
        record = JobRecord(
            job_id=uuid.uuid4().hex,
            identity_id=ref.identity_id,
            face_digest=face_digest,
            raw_prompt=ref.raw_prompt.text,
            input_digest=input_digest,
            evaluate=self.config.evaluate if evaluate is None else evaluate,
            polish=polish,
            idempotency_key=idempotency_key,
        )
        self.store.save_job(record.to_dict(), is_new=True)
        if idempotency_key is not None:
            self.store.idempotency_record(idempotency_key, record.job_id)
        logger.info("job %s submitted for identity %s", record.job_id, ref.identity_id)
        return record.job_id

    def _load(self, job_id: str) -> JobRecord:
        try:
            return JobRecord.from_dict(self.store.load_job(job_id))
        except ArtifactNotFound as exc:
            raise JobNotFound(job_id) from exc

    def get_job(self, job_id: str) -> JobRecord:
        return self._load(job_id)

    def cancel(self, job_id: str) -> None:
        with self._lock(job_id):
            record = self._load(job_id)
            if record.state in TERMINAL_STATES:
                raise JobTerminal(f"job {job_id} is already {record.state.value}")
            record.cancel_requested = True
            record.updated_at = utc_now()
            self.store.save_job(record.to_dict(), expected_state=record.state.value)

    # ---- the state machine -------------------------------------------------

    def advance(self, job_id: str, *, retry: bool = False) -> JobState:
        """Execute exactly one stage (or finalize a finished job to done)."""
        with self._lock(job_id):
            record = self._load(job_id)
            previous_state = record.state

            if record.state is JobState.DONE:
                raise JobTerminal(f"job {job_id} is done")
            if record.state is JobState.FAILED:
                if not retry or not record.error:
                    raise JobTerminal(f"job {job_id} failed; pass retry to re-run")
                stage = JobState(record.error["stage"])
            else:
                if record.cancel_requested:
                    return self._fail(record, previous_state,
                                      next_stage(record.state, evaluate=record.evaluate)
                                      or record.state,
                                      Cancelled("cancelled by request"))
                stage = next_stage(record.state, evaluate=record.evaluate)
                if stage is None:
                    record.state = JobState.DONE
                    record.updated_at = utc_now()
                    self.store.save_job(record.to_dict(), expected_state=previous_state.value)
                    logger.info("job %s done", job_id)
                    return record.state

            try:
                artifact = self._run_stage(stage, record)
            except Exception as exc:  # every stage error lands in the record
                return self._fail(record, previous_state, stage, exc)

            digest = self.store.put(artifact)
            record.stage_outputs[stage.value] = digest
            record.state = stage
            record.error = None
            record.updated_at = utc_now()
            self.store.save_job(record.to_dict(), expected_state=previous_state.value)
            logger.info("job %s completed stage %s -> %s", job_id, stage.value, digest[:12])
            return record.state

    def _fail(self, record: JobRecord, previous_state: JobState,
              stage: JobState, exc: Exception) -> JobState:
        record.state = JobState.FAILED
        record.error = {
            "stage": stage.value,
            "kind": type(exc).__name__,
            "message": str(exc),
        }
        record.updated_at = utc_now()
        self.store.save_job(record.to_dict(), expected_state=previous_state.value)
        logger.warning("job %s failed at %s: %s", record.job_id, stage.value, exc)
        return record.state

    def run_to_completion(self, job_id: str) -> JobState:
        while True:
            state = self.advance(job_id)
            if state in TERMINAL_STATES:
                return state

    # ---- stages -------------------------------------------------------------

    def _run_stage(self, stage: JobState, record: JobRecord) -> bytes:
        if stage is JobState.PREPROCESSING:
            return self._stage_preprocess(record)
        if stage is JobState.SPATIAL_PARSING:
            return self._stage_spatial(record)
        if stage is JobState.FIRST_FRAME_GEN:
            return self._stage_first_frame(record)
        if stage is JobState.TEMPORAL_POLISHING:
            return self._stage_temporal(record)
        if stage is JobState.VIDEO_GEN:
            return self._stage_video(record)
        if stage is JobState.EVALUATING:
            return self._stage_evaluate(record)
        raise ValueError(f"unknown stage {stage}")

    def _stage_artifact(self, record: JobRecord, stage: JobState) -> bytes:
        digest = record.stage_outputs.get(stage.value)
        if digest is None:
            raise RuntimeError(f"stage {stage.value} has no persisted artifact")
        return self.store.get(digest)

    def _stage_preprocess(self, record: JobRecord) -> bytes:
        face = decode_png(self.store.get(record.face_digest))
        rgba = self.client.remove_background(face, self._descriptor(Capability.MATTING))
        return encode_png(rgba)

    def _cache_key(self, kind: str, fields: dict) -> str:
        return sha256_hex(payload_digest_json({"kind": kind, **fields}))

    def _cached_stage(self, record: JobRecord, kind: str, fields: dict, compute) -> bytes:
        """Memoize prompt optimization by (raw prompt digest, engine version)."""
        if not self.config.prompt_cache:
            return compute()
        key = self._cache_key(kind, fields)
        cached = self.store.cache_get(key)
        if cached is not None and self.store.has(cached):
            logger.info("job %s %s served from prompt cache", record.job_id, kind)
            return self.store.get(cached)
        artifact = compute()
        self.store.cache_put(key, self.store.put(artifact))
        return artifact

    def _stage_spatial(self, record: JobRecord) -> bytes:
        llm = self._llm()
        engine = self._descriptor(Capability.LLM).model_id if llm else "rules"

        def compute() -> bytes:
            raw = RawPrompt(record.raw_prompt)
            entities = extract_spatial_entities(
                raw, llm, lexicon=self._lexicon, templates=self._templates)
            spatial = apply_spatial_filters(entities, lexicon=self._lexicon)
            spatial = render_spatial(spatial)
            return canonical_json_bytes(spatial_prompt_to_dict(spatial))

        return self._cached_stage(record, "spatial", {
            "prompt": record.raw_prompt,
            "engine": engine,
            "version": SPATIAL_RULES_VERSION,
        }, compute)

    def _stage_first_frame(self, record: JobRecord) -> bytes:
        rgba = decode_png(self._stage_artifact(record, JobState.PREPROCESSING))
        spatial = spatial_prompt_from_dict(
            json.loads(self._stage_artifact(record, JobState.SPATIAL_PARSING)))
        image = self.client.generate_first_frame(
            rgba, spatial, self._descriptor(Capability.TEXT_TO_IMAGE),
            width=self.config.video_width, height=self.config.video_height,
        )
        return encode_png(image)

    def _stage_temporal(self, record: JobRecord) -> bytes:
        raw = RawPrompt(record.raw_prompt)
        if not record.polish:
            # Polisher bypassed: the I2V stage sees the raw instruction.
            passthrough = TemporalPrompt(gender=Gender.unspecified(), rendered=raw.text)
            return canonical_json_bytes(temporal_prompt_to_dict(passthrough))
        face = decode_png(self.store.get(record.face_digest))
        face_descriptor = self.config.descriptor(Capability.FACE_ANALYSIS)
        face_handle = (FaceAnalysisHandle(self.client, face_descriptor)
                       if face_descriptor else None)
        gender = predict_gender(face, face_handle, raw, lexicon=self._lexicon)
        llm = self._llm()
        engine = self._descriptor(Capability.LLM).model_id if llm else "rules"

        def compute() -> bytes:
            temporal = polish_temporal(
                raw, gender, llm, lexicon=self._lexicon, templates=self._templates)
            return canonical_json_bytes(temporal_prompt_to_dict(temporal))

        return self._cached_stage(record, "temporal", {
            "prompt": record.raw_prompt,
            "gender": gender.value.value,
            "engine": engine,
            "version": TEMPORAL_RULES_VERSION,
        }, compute)

    def _stage_video(self, record: JobRecord) -> bytes:
        first_frame = decode_png(self._stage_artifact(record, JobState.FIRST_FRAME_GEN))
        temporal = temporal_prompt_from_dict(
            json.loads(self._stage_artifact(record, JobState.TEMPORAL_POLISHING)))
        vcu = build_i2v_vcu(first_frame, self.config.video_frames, temporal.rendered)
        self.store.put(serialize_vcu(vcu))  # resolvable via its digest
        video = self.client.generate_video(
            vcu, self._descriptor(Capability.IMAGE_TO_VIDEO), fps=self.config.video_fps)
        return serialize_video(video)

    def metric_backends(self) -> MetricBackends:
        get = self.config.descriptor
        return MetricBackends(
            client=self.client,
            face_embedding=get(Capability.FACE_EMBEDDING),
            video_text_embedding=get(Capability.VIDEO_TEXT_EMBEDDING),
            aesthetic=get(Capability.AESTHETIC_SCORE),
            imaging=get(Capability.IMAGING_QUALITY_SCORE),
            optical_flow=get(Capability.OPTICAL_FLOW),
            frame_interpolation=get(Capability.FRAME_INTERPOLATION),
        )

    def _stage_evaluate(self, record: JobRecord) -> bytes:
        video = deserialize_video(self._stage_artifact(record, JobState.VIDEO_GEN))
        face = decode_png(self.store.get(record.face_digest))
        backends = self.metric_backends()
        row = evaluate_video(video, face, video.prompt_used, backends, self.config.metrics)
        report = build_report({record.identity_id: row}, backends, self.config.metrics)
        return serialize_report(report)

    # ---- baseline -------------------------------------------------------------

    def baseline_r2v(self, ref: ReferenceInput) -> VideoArtifact:
        """Single-stage reference-to-video path; no matting, parsing, or T2I."""
        self.store.put(encode_png(ref.reference_face))
        vcu = build_r2v_vcu(ref.reference_face, self.config.video_frames, ref.raw_prompt.text)
        self.store.put(serialize_vcu(vcu))
        video = self.client.generate_video(
            vcu, self._descriptor(Capability.IMAGE_TO_VIDEO), fps=self.config.video_fps)
        self.store.put(serialize_video(video))
        return video
