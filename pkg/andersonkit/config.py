from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple

import yaml

from .constants import DEFAULTS, MATRIX_DIR_ENV
from .errors import ConfigError

try:
    from dotenv import load_dotenv
except ImportError:  # python-dotenv is optional at runtime
    load_dotenv = None


@dataclass
class Config:
    raw: Dict[str, Any] = field(default_factory=dict)

    def get(self, path: str, default: Any = None) -> Any:
        node: Any = self.raw
        for key in path.split("."):
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node

    def set(self, path: str, value: Any) -> None:
        keys = path.split(".")
        node = self.raw
        for key in keys[:-1]:
            child = node.get(key)
            if not isinstance(child, dict):
                child = {}
                node[key] = child
            node = child
        node[keys[-1]] = value

    def merged(self, other: Mapping[str, Any]) -> "Config":
        """Return a copy with `other` layered on top (other wins)."""
        out = copy.deepcopy(self.raw)
        _deep_update(out, other)
        return Config(raw=out)

    def flatten(self) -> Iterator[Tuple[str, Any]]:
        yield from _flatten("", self.raw)


def _deep_update(base: Dict[str, Any], update: Mapping[str, Any]) -> None:
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = copy.deepcopy(value)


def _flatten(prefix: str, node: Any) -> Iterator[Tuple[str, Any]]:
    if isinstance(node, dict):
        for key in sorted(node):
            yield from _flatten(f"{prefix}.{key}" if prefix else str(key), node[key])
    else:
        yield prefix, node


def _parse_key_value(text: str, source: Path) -> Dict[str, Any]:
    cfg = Config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(str(source), f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(str(source), f"line {lineno}: empty key")
        cfg.set(key, yaml.safe_load(value) if value else None)
    return cfg.raw


def load_config(path: Path) -> Config:
    """Read a YAML file (.yaml/.yml) or a plain key=value file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "config file not found")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError(str(path), "top level must be a mapping")
    else:
        data = _parse_key_value(text, path)
    return Config(raw=data)


def default_config() -> Config:
    return Config(raw=copy.deepcopy(DEFAULTS))


def env_overrides() -> Dict[str, Any]:
    if load_dotenv is not None:
        load_dotenv()
    out: Dict[str, Any] = {}
    matrix_dir = os.getenv(MATRIX_DIR_ENV)
    if matrix_dir:
        out["bench"] = {"matrix_dir": matrix_dir}
    return out


def resolve_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> Config:
    """Defaults <- config file <- environment <- overrides (command-line flags)."""
    cfg = default_config()
    if path is not None:
        cfg = cfg.merged(load_config(path).raw)
    cfg = cfg.merged(env_overrides())
    if overrides:
        cfg = cfg.merged(overrides)
    return cfg
