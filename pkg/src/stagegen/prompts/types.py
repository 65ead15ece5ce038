"""Prompt-side domain types for the spatial/temporal decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol

from ..media import Image


class PromptError(Exception):
    pass


class LlmUnavailable(PromptError):
    pass


class MalformedLlmOutput(PromptError):
    pass


class NoEntitiesFound(PromptError):
    pass


class AllEntitiesExcluded(PromptError):
    """The prompt has no usable spatial content after filtering."""


class EntityCategory(str, Enum):
    FACE_CLOSEUP = "face_closeup"
    CLOTHING = "clothing"
    ENVIRONMENT = "environment"
    SUBJECT_ATTRIBUTE = "subject_attribute"
    OTHER = "other"


class SubjectRole(str, Enum):
    PRIMARY = "primary"
    BACKGROUND = "background"


class ExclusionReason(str, Enum):
    IRRELEVANT_DETAIL = "irrelevant_detail"
    BACKGROUND_CHARACTER = "background_character"


PERSON_CATEGORIES = frozenset({EntityCategory.SUBJECT_ATTRIBUTE, EntityCategory.FACE_CLOSEUP})


@dataclass(frozen=True)
class RawPrompt:
    """The instruction as provided, before any optimization."""

    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("raw prompt must be non-empty after trimming")


@dataclass(frozen=True)
class SpatialEntity:
    category: EntityCategory
    text: str
    subject_role: SubjectRole = SubjectRole.PRIMARY


@dataclass(frozen=True)
class Exclusion:
    entity: SpatialEntity
    reason: ExclusionReason


@dataclass(frozen=True)
class SpatialPrompt:
    """Filtered static entities plus the text handed to the T2I backend."""

    entities: tuple[SpatialEntity, ...]
    excluded: tuple[Exclusion, ...] = ()
    rendered: str = ""


class GenderValue(str, Enum):
    MASCULINE = "masculine"
    FEMININE = "feminine"
    UNSPECIFIED = "unspecified"


class GenderSource(str, Enum):
    REFERENCE_IMAGE = "reference_image"
    PROMPT_TEXT = "prompt_text"
    DEFAULT = "default"


@dataclass(frozen=True)
class Gender:
    value: GenderValue
    source: GenderSource

    @classmethod
    def unspecified(cls) -> "Gender":
        return cls(GenderValue.UNSPECIFIED, GenderSource.DEFAULT)


@dataclass(frozen=True)
class Correction:
    original: str
    replacement: str
    reason: str


@dataclass(frozen=True)
class TemporalPrompt:
    """Motion-stage prompt with gender binding and injected dynamic cues."""

    gender: Gender
    rendered: str
    corrections: tuple[Correction, ...] = ()
    injected_cues: tuple[str, ...] = ()


class TextCompletion(Protocol):
    """Minimal LLM handle; implementations raise LlmUnavailable on transport failure."""

    def complete(self, prompt: str) -> str: ...


class FaceGenderOracle(Protocol):
    """Face-analysis handle returning 'male', 'female', or 'unknown'."""

    def gender(self, image: Image) -> str: ...


SPATIAL_SCHEMA = "spatial/1"
TEMPORAL_SCHEMA = "temporal/1"


def spatial_prompt_to_dict(prompt: SpatialPrompt) -> dict:
    return {
        "schema": SPATIAL_SCHEMA,
        "entities": [
            {"category": e.category.value, "role": e.subject_role.value, "text": e.text}
            for e in prompt.entities
        ],
        "excluded": [
            {
                "category": x.entity.category.value,
                "role": x.entity.subject_role.value,
                "text": x.entity.text,
                "reason": x.reason.value,
            }
            for x in prompt.excluded
        ],
        "rendered": prompt.rendered,
    }


def spatial_prompt_from_dict(doc: dict) -> SpatialPrompt:
    if doc.get("schema") != SPATIAL_SCHEMA:
        raise ValueError(f"unsupported spatial prompt schema: {doc.get('schema')!r}")
    entities = tuple(
        SpatialEntity(EntityCategory(e["category"]), e["text"], SubjectRole(e["role"]))
        for e in doc["entities"]
    )
    excluded = tuple(
        Exclusion(
            SpatialEntity(EntityCategory(x["category"]), x["text"], SubjectRole(x["role"])),
            ExclusionReason(x["reason"]),
        )
        for x in doc["excluded"]
    )
    return SpatialPrompt(entities=entities, excluded=excluded, rendered=doc["rendered"])


def temporal_prompt_to_dict(prompt: TemporalPrompt) -> dict:
    return {
        "schema": TEMPORAL_SCHEMA,
        "gender": {"value": prompt.gender.value.value, "source": prompt.gender.source.value},
        "rendered": prompt.rendered,
        "corrections": [
            {"original": c.original, "replacement": c.replacement, "reason": c.reason}
            for c in prompt.corrections
        ],
        "injected_cues": list(prompt.injected_cues),
    }


def temporal_prompt_from_dict(doc: dict) -> TemporalPrompt:
    if doc.get("schema") != TEMPORAL_SCHEMA:
        raise ValueError(f"unsupported temporal prompt schema: {doc.get('schema')!r}")
    return TemporalPrompt(
        gender=Gender(GenderValue(doc["gender"]["value"]), GenderSource(doc["gender"]["source"])),
        rendered=doc["rendered"],
        corrections=tuple(
            Correction(c["original"], c["replacement"], c["reason"]) for c in doc["corrections"]
        ),
        injected_cues=tuple(doc["injected_cues"]),
    )
