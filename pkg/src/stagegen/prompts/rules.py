"""Deterministic rule engines behind the two prompt-optimization modules.

These are the hermetic fallbacks: pure functions of (text, lexicon), so
the same input always yields byte-identical output. The mock LLM backend
reuses them so wire-level runs stay deterministic too.
"""

from __future__ import annotations

import re

from .lexicon import Lexicon
from .types import (
    Correction,
    EntityCategory,
    GenderValue,
    PERSON_CATEGORIES,
    SpatialEntity,
    SubjectRole,
)

SPATIAL_RULES_VERSION = "spatial-rules/1"
TEMPORAL_RULES_VERSION = "temporal-rules/1"

_WORD = re.compile(r"[A-Za-z]+(?:[-'][A-Za-z]+)*")

# Category priority when one phrase appears in several tables.
_CATEGORY_ORDER = (
    EntityCategory.FACE_CLOSEUP,
    EntityCategory.SUBJECT_ATTRIBUTE,
    EntityCategory.CLOTHING,
    EntityCategory.ENVIRONMENT,
    EntityCategory.OTHER,
)


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    """Word tokens with their character spans."""
    return [(m.group(0), m.start(), m.end()) for m in _WORD.finditer(text)]


def _is_gerund(token: str) -> bool:
    return len(token) >= 6 and token.lower().endswith("ing")


def extract_entities(text: str, lexicon: Lexicon) -> list[SpatialEntity]:
    """Scan left to right for lexicon heads, growing phrases over modifiers
    (left) and gerunds (right). Each token feeds at most one entity."""
    tokens = _tokenize(text)
    lowered = [t.lower() for t, _, _ in tokens]

    # phrase -> category, longest phrases first so compounds win
    phrase_table: dict[tuple[str, ...], EntityCategory] = {}
    for category in _CATEGORY_ORDER:
        for phrase in lexicon.categories.get(category, ()):
            key = tuple(phrase.split())
            phrase_table.setdefault(key, category)
    max_len = max((len(k) for k in phrase_table), default=1)

    consumed = [False] * len(tokens)
    entities: list[SpatialEntity] = []
    seen_person = False
    i = 0
    while i < len(tokens):
        if consumed[i]:
            i += 1
            continue
        match_len = 0
        category = None
        for length in range(min(max_len, len(tokens) - i), 0, -1):
            key = tuple(lowered[i : i + length])
            if key in phrase_table and not any(consumed[i : i + length]):
                match_len = length
                category = phrase_table[key]
                break
        if category is None:
            i += 1
            continue
        start, end = i, i + match_len
        while start > 0 and not consumed[start - 1] and lowered[start - 1] in lexicon.modifiers:
            start -= 1
        while end < len(tokens) and not consumed[end] and _is_gerund(lowered[end]) \
                and tuple(lowered[end : end + 1]) not in phrase_table:
            end += 1
        for k in range(start, end):
            consumed[k] = True
        phrase_text = " ".join(tokens[k][0] for k in range(start, end))
        role = SubjectRole.PRIMARY
        if category in PERSON_CATEGORIES:
            owned = start > 0 and lowered[start - 1] in lexicon.possessive_cues
            if seen_person and not owned:
                role = SubjectRole.BACKGROUND
            seen_person = True
        entities.append(SpatialEntity(category=category, text=phrase_text, subject_role=role))
        i = end
    return entities


def is_irrelevant_detail(entity: SpatialEntity, lexicon: Lexicon) -> bool:
    words = {t.lower() for t, _, _ in _tokenize(entity.text)}
    return bool(words & lexicon.irrelevant_details)


def scan_gender(text: str, lexicon: Lexicon) -> GenderValue:
    """Gendered-token scan; ambiguous or silent prompts stay unspecified."""
    words = [t.lower() for t, _, _ in _tokenize(text)]
    masc = sum(1 for w in words if w in lexicon.masculine_terms)
    fem = sum(1 for w in words if w in lexicon.feminine_terms)
    if masc and not fem:
        return GenderValue.MASCULINE
    if fem and not masc:
        return GenderValue.FEMININE
    return GenderValue.UNSPECIFIED


# Pronoun forms by slot. "her" and "his" need positional disambiguation
# between determiner and object/standalone-possessive use.
_FEMININE_FORMS = {"she", "her", "hers", "herself"}
_MASCULINE_FORMS = {"he", "him", "his", "himself"}

_SIMPLE_TO_MASCULINE = {"she": "he", "hers": "his", "herself": "himself"}
_SIMPLE_TO_FEMININE = {"he": "she", "him": "her", "himself": "herself"}

# Words that signal the following token is NOT the start of a noun phrase,
# so a preceding "her"/"his" reads as object/standalone possessive.
_NON_NOMINAL_FOLLOWERS = {
    "and", "or", "but", "then", "while", "when", "as", "with", "at", "on",
    "in", "to", "from", "into", "for", "of", "by", "over", "under",
    "through", "again", "now", "there", "here", "because", "so", "is",
    "was", "are", "were", "be", "too", "closely", "quickly", "slowly",
    "gently", "warmly", "softly",
}


def opposite_pronouns(gender: GenderValue) -> frozenset[str]:
    if gender is GenderValue.MASCULINE:
        return frozenset(_FEMININE_FORMS)
    if gender is GenderValue.FEMININE:
        return frozenset(_MASCULINE_FORMS)
    return frozenset()


def _match_case(original: str, replacement: str) -> str:
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def enforce_pronoun_agreement(
    text: str, gender: GenderValue,
) -> tuple[str, list[Correction]]:
    """Rewrite third-person pronouns to agree with the bound gender."""
    if gender is GenderValue.UNSPECIFIED:
        return text, []
    tokens = _tokenize(text)
    corrections: list[Correction] = []
    pieces: list[str] = []
    cursor = 0
    for idx, (token, start, end) in enumerate(tokens):
        low = token.lower()
        replacement: str | None = None
        if gender is GenderValue.MASCULINE and low in _FEMININE_FORMS:
            if low == "her":
                replacement = "his" if _starts_noun_phrase(tokens, idx) else "him"
            else:
                replacement = _SIMPLE_TO_MASCULINE[low]
        elif gender is GenderValue.FEMININE and low in _MASCULINE_FORMS:
            if low == "his":
                replacement = "her" if _starts_noun_phrase(tokens, idx) else "hers"
            else:
                replacement = _SIMPLE_TO_FEMININE[low]
        if replacement is None:
            continue
        replacement = _match_case(token, replacement)
        pieces.append(text[cursor:start])
        pieces.append(replacement)
        cursor = end
        corrections.append(Correction(token, replacement, "pronoun-gender-agreement"))
    pieces.append(text[cursor:])
    return "".join(pieces), corrections


def _starts_noun_phrase(tokens: list[tuple[str, int, int]], idx: int) -> bool:
    """True when the token after idx plausibly begins a noun phrase."""
    if idx + 1 >= len(tokens):
        return False
    following = tokens[idx + 1][0].lower()
    return following not in _NON_NOMINAL_FOLLOWERS


def pick_cue(text: str, cues: tuple[str, ...]) -> str:
    """First cue that adds new content words; falls back to the first cue."""
    if not cues:
        raise ValueError("cue table is empty")
    prompt_words = {t.lower() for t, _, _ in _tokenize(text)}
    for cue in cues:
        cue_words = {t.lower() for t, _, _ in _tokenize(cue) if len(t) > 3}
        if not cue_words & prompt_words:
            return cue
    return cues[0]
