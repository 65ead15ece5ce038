"""Spatial/temporal prompt decomposition with deterministic rule layers."""

from .lexicon import Lexicon, default_lexicon, load_lexicon
from .spatial import apply_spatial_filters, extract_spatial_entities, render_spatial
from .templates import TemplateStore
from .temporal import polish_temporal, predict_gender
from .types import (
    AllEntitiesExcluded,
    Correction,
    EntityCategory,
    Exclusion,
    ExclusionReason,
    FaceGenderOracle,
    Gender,
    GenderSource,
    GenderValue,
    LlmUnavailable,
    MalformedLlmOutput,
    NoEntitiesFound,
    PromptError,
    RawPrompt,
    SpatialEntity,
    SpatialPrompt,
    SubjectRole,
    TemporalPrompt,
    TextCompletion,
)

__all__ = [
    "AllEntitiesExcluded",
    "Correction",
    "EntityCategory",
    "Exclusion",
    "ExclusionReason",
    "FaceGenderOracle",
    "Gender",
    "GenderSource",
    "GenderValue",
    "Lexicon",
    "LlmUnavailable",
    "MalformedLlmOutput",
    "NoEntitiesFound",
    "PromptError",
    "RawPrompt",
    "SpatialEntity",
    "SpatialPrompt",
    "SubjectRole",
    "TemplateStore",
    "TemporalPrompt",
    "TextCompletion",
    "apply_spatial_filters",
    "default_lexicon",
    "extract_spatial_entities",
    "load_lexicon",
    "polish_temporal",
    "predict_gender",
    "render_spatial",
]
