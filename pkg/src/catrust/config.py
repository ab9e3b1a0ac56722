"""Flat ``key = value`` override files for the four parameter records."""
from __future__ import annotations

import dataclasses
from pathlib import Path

from .ca import CaParams
from .fire import FireParams
from .world import DynamicsConfig, WorldConfig

SECTIONS = {
    "world": WorldConfig,
    "dynamics": DynamicsConfig,
    "ca_params": CaParams,
    "fire_params": FireParams,
}


class ConfigError(ValueError):
    pass


def _owner(key: str) -> tuple[str, type]:
    for section, cls in SECTIONS.items():
        for f in dataclasses.fields(cls):
            if f.name == key:
                return section, f.type
    raise ConfigError(f"unknown config key {key!r}")


def parse_config(text: str, source: str = "<config>") -> dict[str, dict]:
    """Parse override text into ``{section: {field: value}}``.

    Blank lines and ``#`` comments are ignored; each remaining line must be
    ``name = value`` with ``name`` a field of one of the parameter records.
    """
    out: dict[str, dict] = {s: {} for s in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        try:
            section, typ = _owner(key)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        try:
            out[section][key] = int(value) if typ == "int" else float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad {typ} value {value!r} for {key}") from None
    return out


def load_config(path) -> dict[str, dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))


def apply_overrides(spec, overrides: dict[str, dict]):
    """Return a copy of an ExperimentSpec with the overrides applied (and validated)."""
    changes = {}
    for section, values in overrides.items():
        if values:
            try:
                changes[section] = dataclasses.replace(getattr(spec, section), **values)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    return dataclasses.replace(spec, **changes)
