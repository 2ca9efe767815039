"""Engine configuration, loadable from a JSON file.

The CLI resolves the file from ``--config`` or the ``PTT_CONFIG`` environment
variable; live backends read their API key from ``PTT_LLM_API_KEY``. Paths
beginning with ``bundled:`` resolve to files shipped inside the package
(e.g. ``bundled:demo_script.json``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict
from decimal import Decimal
from pathlib import Path

from .bench import bundled_path
from .errors import InvalidArgument, NotFound, ParseError
from .generation import DEFAULT_PROHIBITED_TOOLS

API_KEY_ENV = "PTT_LLM_API_KEY"
CONFIG_ENV = "PTT_CONFIG"


def resolve_path(value: str) -> Path:
    if value.startswith("bundled:"):
        return bundled_path(value[len("bundled:"):])
    return Path(value)


@dataclass
class EngineConfig:
    backend_name: str = "scripted"
    script_path: str = "bundled:demo_script.json"
    model: str = "gpt-4"
    base_url: str = "https://api.openai.com/v1"
    window: int = 8000
    reply_reserve: int = 1000
    chunk_budget: int = 3000
    summary_budget: int = 600
    retries: int = 3
    price_in_per_1k: Decimal = Decimal("0.03")
    price_out_per_1k: Decimal = Decimal("0.06")
    prompt_dir: str | None = None
    session_dir: str = "./sessions"
    listen_host: str = "127.0.0.1"
    listen_port: int = 8714
    target_os: str = "linux"
    attacker_distro: str = "kali"
    prohibited_tools: tuple[str, ...] = DEFAULT_PROHIBITED_TOOLS

    def validate(self) -> None:
        numeric = {
            "window": self.window,
            "reply_reserve": self.reply_reserve,
            "chunk_budget": self.chunk_budget,
            "summary_budget": self.summary_budget,
            "retries": self.retries,
            "listen_port": self.listen_port,
        }
        for name, value in numeric.items():
            if not isinstance(value, int) or value <= 0:
                raise InvalidArgument(f"config field {name} must be a positive integer")
        if self.reply_reserve >= self.window:
            raise InvalidArgument("reply_reserve must be smaller than window")
        if self.price_in_per_1k < 0 or self.price_out_per_1k < 0:
            raise InvalidArgument("prices must be non-negative")
        if self.backend_name not in ("scripted", "http"):
            raise InvalidArgument(f"unknown backend {self.backend_name!r}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["price_in_per_1k"] = str(self.price_in_per_1k)
        data["price_out_per_1k"] = str(self.price_out_per_1k)
        data["prohibited_tools"] = list(self.prohibited_tools)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        data = dict(data)
        # nested form: {"backend": {"name": ..., "script": ..., "model": ..., "base_url": ...}}
        backend = data.pop("backend", None)
        if isinstance(backend, dict):
            aliases = {"name": "backend_name", "script": "script_path",
                       "model": "model", "base_url": "base_url"}
            for key, field_name in aliases.items():
                if key in backend:
                    data[field_name] = backend[key]
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        for price_key in ("price_in_per_1k", "price_out_per_1k"):
            if price_key in kwargs:
                kwargs[price_key] = Decimal(str(kwargs[price_key]))
        if "prohibited_tools" in kwargs:
            kwargs["prohibited_tools"] = tuple(kwargs["prohibited_tools"])
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        path = Path(path)
        if not path.exists():
            raise NotFound(f"config file {path} does not exist")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_env_or_file(cls, path: str | None) -> "EngineConfig":
        path = path or os.environ.get(CONFIG_ENV)
        if path:
            return cls.from_file(path)
        config = cls()
        config.validate()
        return config
