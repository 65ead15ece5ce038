"""Static entity extraction, filtering, and rendering for the T2I stage."""

from __future__ import annotations

import logging

from . import rules
from .lexicon import Lexicon, default_lexicon
from .templates import TemplateStore
from .types import (
    AllEntitiesExcluded,
    EntityCategory,
    Exclusion,
    ExclusionReason,
    MalformedLlmOutput,
    NoEntitiesFound,
    PERSON_CATEGORIES,
    RawPrompt,
    SpatialEntity,
    SpatialPrompt,
    SubjectRole,
    TextCompletion,
)

logger = logging.getLogger(__name__)

DEFAULT_SUBJECT = "a person"
_FACE_TEMPLATE = "{subject}, rendered in sharp facial detail"


def _parse_entity_lines(reply: str) -> list[SpatialEntity]:
    entities: list[SpatialEntity] = []
    for line in reply.splitlines():
        line = line.strip()
        if not line:
            continue
        if not line.startswith("entity:"):
            raise MalformedLlmOutput(f"unexpected line: {line!r}")
        parts = [p.strip() for p in line[len("entity:"):].split("|")]
        if len(parts) != 3:
            raise MalformedLlmOutput(f"entity line needs 3 fields: {line!r}")
        category_raw, role_raw, text = parts
        try:
            category = EntityCategory(category_raw)
            role = SubjectRole(role_raw)
        except ValueError as exc:
            raise MalformedLlmOutput(str(exc)) from exc
        if not text:
            raise MalformedLlmOutput("entity text is empty")
        entities.append(SpatialEntity(category=category, text=text, subject_role=role))
    if not entities:
        raise MalformedLlmOutput("reply contains no entity lines")
    return entities


def extract_spatial_entities(
    raw: RawPrompt,
    llm: TextCompletion | None,
    *,
    lexicon: Lexicon | None = None,
    templates: TemplateStore | None = None,
) -> list[SpatialEntity]:
    """Extract static entities via the LLM, or the rule lexicon when llm is None.

    LLM replies are re-parsed with strict schema checks and retried once on
    malformed output.
    """
    lexicon = lexicon or default_lexicon()
    if llm is None:
        entities = rules.extract_entities(raw.text, lexicon)
        if not entities:
            raise NoEntitiesFound(f"no spatial entities in {raw.text!r}")
        return entities

    templates = templates or TemplateStore()
    last_error: MalformedLlmOutput | None = None
    for attempt, strict in enumerate((False, True)):
        instruction = templates.render("spatial_parser", strict_retry=strict, raw_prompt=raw.text)
        reply = llm.complete(instruction)
        try:
            return _parse_entity_lines(reply)
        except MalformedLlmOutput as exc:
            logger.warning("spatial parser reply malformed (attempt %d): %s", attempt + 1, exc)
            last_error = exc
    raise last_error  # type: ignore[misc]


def apply_spatial_filters(
    entities: list[SpatialEntity] | tuple[SpatialEntity, ...],
    *,
    lexicon: Lexicon | None = None,
) -> SpatialPrompt:
    """Drop irrelevant details and background characters, preserving order."""
    if not entities:
        raise ValueError("entity list must be non-empty")
    lexicon = lexicon or default_lexicon()
    survivors: list[SpatialEntity] = []
    excluded: list[Exclusion] = []
    for entity in entities:
        if rules.is_irrelevant_detail(entity, lexicon):
            excluded.append(Exclusion(entity, ExclusionReason.IRRELEVANT_DETAIL))
        elif entity.subject_role is SubjectRole.BACKGROUND and entity.category in PERSON_CATEGORIES:
            excluded.append(Exclusion(entity, ExclusionReason.BACKGROUND_CHARACTER))
        else:
            survivors.append(entity)
    if not survivors:
        raise AllEntitiesExcluded(
            f"all {len(entities)} entities filtered out; prompt has no usable spatial content"
        )
    return SpatialPrompt(entities=tuple(survivors), excluded=tuple(excluded))


def render_spatial(prompt: SpatialPrompt) -> SpatialPrompt:
    """Compose the T2I text: faces first, then clothing, environment, other."""
    if not prompt.entities:
        raise ValueError("cannot render an empty spatial prompt")
    by_category: dict[EntityCategory, list[str]] = {c: [] for c in EntityCategory}
    for entity in prompt.entities:
        by_category[entity.category].append(entity.text)
    subjects = by_category[EntityCategory.FACE_CLOSEUP] + by_category[EntityCategory.SUBJECT_ATTRIBUTE]
    rendered = _FACE_TEMPLATE.format(subject=", ".join(subjects) if subjects else DEFAULT_SUBJECT)
    if by_category[EntityCategory.CLOTHING]:
        rendered += ", wearing " + ", ".join(by_category[EntityCategory.CLOTHING])
    if by_category[EntityCategory.ENVIRONMENT]:
        rendered += ", in " + ", ".join(by_category[EntityCategory.ENVIRONMENT])
    if by_category[EntityCategory.OTHER]:
        rendered += ", " + ", ".join(by_category[EntityCategory.OTHER])
    return SpatialPrompt(entities=prompt.entities, excluded=prompt.excluded, rendered=rendered)
