"""Gender binding, pronoun repair, and dynamic-cue injection for the I2V stage."""

from __future__ import annotations

import logging

from . import rules
from ..media import Image
from .lexicon import Lexicon, default_lexicon
from .templates import TemplateStore
from .types import (
    Correction,
    FaceGenderOracle,
    Gender,
    GenderSource,
    GenderValue,
    MalformedLlmOutput,
    RawPrompt,
    TemporalPrompt,
    TextCompletion,
)

logger = logging.getLogger(__name__)

_GENDER_WIRE = {"male": GenderValue.MASCULINE, "female": GenderValue.FEMININE}


def predict_gender(
    reference_face: Image | None,
    face_backend: FaceGenderOracle | None,
    raw: RawPrompt,
    *,
    lexicon: Lexicon | None = None,
) -> Gender:
    """Face analysis first, prompt scan second, unspecified last. Never raises."""
    lexicon = lexicon or default_lexicon()
    if face_backend is not None and reference_face is not None:
        try:
            verdict = face_backend.gender(reference_face)
        except Exception as exc:
            logger.warning("face-analysis backend failed, degrading to prompt scan: %s", exc)
        else:
            value = _GENDER_WIRE.get(verdict)
            if value is not None:
                return Gender(value, GenderSource.REFERENCE_IMAGE)
    scanned = rules.scan_gender(raw.text, lexicon)
    if scanned is not GenderValue.UNSPECIFIED:
        return Gender(scanned, GenderSource.PROMPT_TEXT)
    return Gender.unspecified()


def _parse_polisher_reply(reply: str) -> tuple[GenderValue, str, list[str]]:
    lines = [line.strip() for line in reply.splitlines() if line.strip()]
    if len(lines) != 3:
        raise MalformedLlmOutput(f"expected 3 lines, got {len(lines)}")
    fields: dict[str, str] = {}
    for line, key in zip(lines, ("gender", "rewritten", "cues")):
        prefix = key + ":"
        if not line.startswith(prefix):
            raise MalformedLlmOutput(f"expected {prefix!r} line, got {line!r}")
        fields[key] = line[len(prefix):].strip()
    try:
        gender = GenderValue(fields["gender"])
    except ValueError as exc:
        raise MalformedLlmOutput(str(exc)) from exc
    if not fields["rewritten"]:
        raise MalformedLlmOutput("rewritten text is empty")
    cues = [c.strip() for c in fields["cues"].split(";") if c.strip()]
    if not cues:
        raise MalformedLlmOutput("no cues returned")
    return gender, fields["rewritten"], cues


def polish_temporal(
    raw: RawPrompt,
    gender: Gender,
    llm: TextCompletion | None,
    *,
    lexicon: Lexicon | None = None,
    templates: TemplateStore | None = None,
) -> TemporalPrompt:
    """Produce the motion-stage prompt.

    The rule layer runs on top of either path, so pronoun agreement and the
    at-least-one-cue guarantee hold even when the LLM strays.
    """
    lexicon = lexicon or default_lexicon()
    corrections: list[Correction] = []
    cues: list[str]

    if llm is None:
        base_text = raw.text
        cues = []
    else:
        templates = templates or TemplateStore()
        last_error: MalformedLlmOutput | None = None
        parsed = None
        for attempt, strict in enumerate((False, True)):
            instruction = templates.render(
                "temporal_polisher",
                strict_retry=strict,
                raw_prompt=raw.text,
                gender=gender.value.value,
            )
            reply = llm.complete(instruction)
            try:
                parsed = _parse_polisher_reply(reply)
                break
            except MalformedLlmOutput as exc:
                logger.warning("polisher reply malformed (attempt %d): %s", attempt + 1, exc)
                last_error = exc
        if parsed is None:
            raise last_error  # type: ignore[misc]
        llm_gender, base_text, cues = parsed
        if gender.value is GenderValue.UNSPECIFIED and llm_gender is not GenderValue.UNSPECIFIED:
            gender = Gender(llm_gender, GenderSource.PROMPT_TEXT)
        stripped_base = _strip_cues(base_text, cues)
        fixed_raw, raw_fixes = rules.enforce_pronoun_agreement(raw.text, gender.value)
        if stripped_base == fixed_raw:
            # rewrite is pure pronoun binding: log each replacement itemized
            corrections.extend(raw_fixes)
        elif stripped_base != raw.text:
            corrections.append(Correction(raw.text, stripped_base, "logical-restructuring"))

    text, pronoun_fixes = rules.enforce_pronoun_agreement(base_text, gender.value)
    corrections.extend(pronoun_fixes)

    injected = [c for c in cues if c in text]
    if not injected:
        cue = rules.pick_cue(text, lexicon.dynamic_cues)
        text = f"{text}, {cue}"
        injected = [cue]

    return TemporalPrompt(
        gender=gender,
        rendered=text,
        corrections=tuple(corrections),
        injected_cues=tuple(injected),
    )


def _strip_cues(text: str, cues: list[str]) -> str:
    """Remove appended cue phrases so restructuring detection sees core text."""
    for cue in cues:
        for suffix in (f", {cue}", f" {cue}", cue):
            if text.endswith(suffix):
                text = text[: -len(suffix)].rstrip(" ,")
                break
    return text
