"""Lexicon and cue-table loading; immutable after load."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import yaml

from .types import EntityCategory

LEXICON_SCHEMA = "lexicon/1"


@dataclass(frozen=True)
class Lexicon:
    categories: dict[EntityCategory, tuple[str, ...]]
    modifiers: frozenset[str]
    irrelevant_details: frozenset[str]
    masculine_terms: frozenset[str]
    feminine_terms: frozenset[str]
    possessive_cues: frozenset[str]
    dynamic_cues: tuple[str, ...]


def _load_yaml(path: Path | None) -> dict:
    if path is None:
        ref = importlib.resources.files("stagegen.prompts").joinpath("data/lexicon.yaml")
        text = ref.read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or doc.get("schema") != LEXICON_SCHEMA:
        raise ValueError(f"lexicon file must declare schema {LEXICON_SCHEMA!r}")
    return doc


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load a lexicon file; None loads the packaged default."""
    doc = _load_yaml(Path(path) if path else None)
    categories: dict[EntityCategory, tuple[str, ...]] = {}
    for name, terms in doc["categories"].items():
        categories[EntityCategory(name)] = tuple(t.lower() for t in terms)
    for category in EntityCategory:
        categories.setdefault(category, ())
    return Lexicon(
        categories=categories,
        modifiers=frozenset(t.lower() for t in doc.get("modifiers", [])),
        irrelevant_details=frozenset(t.lower() for t in doc.get("irrelevant_details", [])),
        masculine_terms=frozenset(t.lower() for t in doc.get("masculine_terms", [])),
        feminine_terms=frozenset(t.lower() for t in doc.get("feminine_terms", [])),
        possessive_cues=frozenset(t.lower() for t in doc.get("possessive_cues", [])),
        dynamic_cues=tuple(doc.get("dynamic_cues", [])),
    )


_DEFAULT: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_lexicon(None)
    return _DEFAULT
