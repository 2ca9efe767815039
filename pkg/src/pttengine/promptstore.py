"""Prompt template store.

Templates live as plain text files in a directory; the key is the filename
without its ``.txt`` extension (e.g. ``reason.update.txt`` -> ``reason.update``).
Placeholders use ``{{name}}``. The bundled defaults ship as package data and
can be overridden with any directory of the same shape.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .errors import InvalidArgument, NotFound

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")

REQUIRED_KEYS = (
    "system.reasoning",
    "system.generation",
    "system.parsing",
    "reason.init",
    "reason.update",
    "reason.select",
    "reason.manual",
    "gen.expand",
    "gen.concretize",
    "parse.user-intention",
    "parse.tool-output",
    "parse.http-web",
    "parse.source-code",
    "parse.merge",
)


class PromptStore:
    def __init__(self, templates: dict[str, str]):
        self._templates = dict(templates)

    @classmethod
    def from_dir(cls, directory: str | Path) -> "PromptStore":
        directory = Path(directory)
        if not directory.is_dir():
            raise NotFound(f"prompt directory {directory} does not exist")
        templates = {
            path.name[: -len(".txt")]: path.read_text(encoding="utf-8")
            for path in sorted(directory.glob("*.txt"))
        }
        return cls(templates)

    @classmethod
    def default(cls) -> "PromptStore":
        root = resources.files("pttengine") / "prompts"
        templates = {
            entry.name[: -len(".txt")]: entry.read_text(encoding="utf-8")
            for entry in root.iterdir()
            if entry.name.endswith(".txt")
        }
        return cls(templates)

    def keys(self) -> list[str]:
        return sorted(self._templates)

    def raw(self, key: str) -> str:
        if key not in self._templates:
            raise NotFound(f"no prompt template for key {key!r}")
        return self._templates[key]

    def render(self, key: str, **values: str) -> str:
        template = self.raw(key)

        def substitute(match: re.Match) -> str:
            name = match.group(1)
            if name not in values:
                raise InvalidArgument(f"template {key!r} needs a value for {{{{{name}}}}}")
            return str(values[name])

        return _PLACEHOLDER_RE.sub(substitute, template).strip("\n")

    def validate(self, required=REQUIRED_KEYS) -> None:
        missing = [key for key in required if key not in self._templates]
        if missing:
            raise NotFound(f"prompt store is missing templates: {', '.join(missing)}")
