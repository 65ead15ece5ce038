"""Application configuration: backend endpoints, video defaults, store layout."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backends.protocol import BackendDescriptor, Capability
from .metrics.reducers import FacelessFramePolicy, FlowPooling, MetricConfig

ENV_CONFIG_PATH = "STAGEGEN_CONFIG"


class ConfigError(Exception):
    pass


@dataclass
class AppConfig:
    backends: dict[Capability, BackendDescriptor] = field(default_factory=dict)
    video_frames: int = 80
    video_fps: int = 16
    video_width: int = 512
    video_height: int = 512
    evaluate: bool = True
    lexicon_path: str | None = None
    templates_dir: str | None = None
    use_llm: bool | None = None  # None: use the LLM backend iff configured
    prompt_cache: bool = True
    max_inflight: int = 4
    store_root: Path = Path("stagegen-store")
    metrics: MetricConfig = field(default_factory=MetricConfig)

    def descriptor(self, capability: Capability) -> BackendDescriptor | None:
        return self.backends.get(capability)

    def llm_enabled(self) -> bool:
        if self.use_llm is None:
            return Capability.LLM in self.backends
        return self.use_llm


def _parse_backend(name: str, doc: dict) -> BackendDescriptor:
    try:
        capability = Capability(name)
    except ValueError as exc:
        raise ConfigError(f"unknown backend capability {name!r}") from exc
    if "endpoint" not in doc:
        raise ConfigError(f"backend {name!r} needs an endpoint")
    return BackendDescriptor(
        capability=capability,
        endpoint=str(doc["endpoint"]),
        model_id=str(doc.get("model_id", "default")),
        timeout=float(doc.get("timeout", 30.0)),
        max_retries=int(doc.get("max_retries", 2)),
        bearer_token=doc.get("bearer_token"),
        returns_conditioning_frame=bool(doc.get("returns_conditioning_frame", True)),
    )


def parse_config(doc: dict) -> AppConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    config = AppConfig()

    backends = doc.get("backends", {})
    if not isinstance(backends, dict):
        raise ConfigError("backends must be a mapping of capability -> settings")
    for name, backend_doc in backends.items():
        descriptor = _parse_backend(name, backend_doc or {})
        config.backends[descriptor.capability] = descriptor

    video = doc.get("video", {}) or {}
    config.video_frames = int(video.get("frames", config.video_frames))
    config.video_fps = int(video.get("fps", config.video_fps))
    config.video_width = int(video.get("width", config.video_width))
    config.video_height = int(video.get("height", config.video_height))
    if config.video_frames < 1:
        raise ConfigError("video.frames must be >= 1")

    job = doc.get("job", {}) or {}
    config.evaluate = bool(job.get("evaluate", config.evaluate))

    prompt = doc.get("prompt", {}) or {}
    config.lexicon_path = prompt.get("lexicon_path")
    config.templates_dir = prompt.get("templates_dir")
    if "use_llm" in prompt:
        config.use_llm = bool(prompt["use_llm"])
    config.prompt_cache = bool(prompt.get("cache", config.prompt_cache))

    backend = doc.get("backend", {}) or {}
    config.max_inflight = int(backend.get("max_inflight", config.max_inflight))

    store = doc.get("store", {}) or {}
    config.store_root = Path(store.get("root", config.store_root))

    metrics = doc.get("metrics", {}) or {}
    config.metrics = MetricConfig(
        dd_threshold=float(metrics.get("dd_threshold", 0.01)),
        dd_top_fraction=float(metrics.get("dd_top_fraction", 0.05)),
        ms_normalizer=float(metrics.get("ms_normalizer", 255.0)),
        faceless_frame_policy=FacelessFramePolicy(
            metrics.get("faceless_frame_policy", "skip")),
        flow_pooling=FlowPooling(metrics.get("flow_pooling", "global")),
    )
    return config


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load YAML config; falls back to $STAGEGEN_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return AppConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    return parse_config(doc)
