"""Instruction templates; operators can restate them without code changes."""

from __future__ import annotations

import importlib.resources
from pathlib import Path

_RETRY_SUFFIX = (
    "\nSTRICT: the previous reply was malformed. "
    "Reply with exactly the specified lines and nothing else."
)


class TemplateStore:
    """Loads instruction templates from a directory (packaged by default)."""

    def __init__(self, directory: str | Path | None = None):
        self._directory = Path(directory) if directory else None
        self._cache: dict[str, str] = {}

    def _read(self, name: str) -> str:
        if name not in self._cache:
            filename = f"{name}.txt"
            if self._directory is not None:
                text = (self._directory / filename).read_text(encoding="utf-8")
            else:
                ref = importlib.resources.files("stagegen.prompts").joinpath(
                    f"templates/{filename}"
                )
                text = ref.read_text(encoding="utf-8")
            self._cache[name] = text
        return self._cache[name]

    def render(self, name: str, *, strict_retry: bool = False, **fields: str) -> str:
        instruction = self._read(name).format(**fields)
        if strict_retry:
            instruction += _RETRY_SUFFIX
        return instruction
