"""Serving configuration: one TOML file plus BUGDEDUP_* env overrides.

Override variables follow BUGDEDUP_<SECTION>_<KEY>, e.g. BUGDEDUP_APP_PORT
or BUGDEDUP_MODEL_MODEL for the model file path.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class AppConfig:
    host: str = "127.0.0.1"
    port: int = 8100
    corpus: str = ""
    model_url: str = "http://127.0.0.1:8101"
    embed_url: str = "http://127.0.0.1:8102"
    top_k: int = 10
    ttl_seconds: float = 900.0
    ui_dir: str = ""
    persist: bool = True


@dataclass
class ModelConfig:
    host: str = "127.0.0.1"
    port: int = 8101
    model: str = ""


@dataclass
class EmbedConfig:
    host: str = "127.0.0.1"
    port: int = 8102
    vectors: str = ""


@dataclass
class TextConfig:
    stopwords: str = ""
    synonyms: str = ""
    pos_lexicon: str = ""


@dataclass
class ServeConfig:
    app: AppConfig
    model: ModelConfig
    embed: EmbedConfig
    text: TextConfig


_SECTIONS = {
    "app": AppConfig,
    "model": ModelConfig,
    "embed": EmbedConfig,
    "text": TextConfig,
}


def _coerce(value: str, target_type: type):
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    if target_type is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> ServeConfig:
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        with Path(path).open("rb") as fh:
            raw = tomllib.load(fh)
    sections = {}
    for name, cls in _SECTIONS.items():
        values = dict(raw.get(name, {}))
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(values) - set(known)
        if unknown:
            raise ValueError(f"unknown [{name}] config keys: {sorted(unknown)}")
        for field_obj in fields(cls):
            env_key = f"BUGDEDUP_{name.upper()}_{field_obj.name.upper()}"
            if env_key in env:
                values[field_obj.name] = _coerce(env[env_key], type(getattr(cls(), field_obj.name)))
        sections[name] = cls(**values)
    return ServeConfig(**sections)
