"""Run configuration: a JSON document with ``model``, ``params``, ``command``, ``options``."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from .model import EpidynError, MODELS, Params, make_params, validate_params


class ConfigError(EpidynError, ValueError):
    """Malformed or invalid run configuration."""


@dataclass
class RunConfig:
    model: str
    params: dict
    command: Optional[str] = None
    options: dict = field(default_factory=dict)

    def build_params(self, allow_zero_phi: bool = False) -> Params:
        try:
            p = make_params(self.model, self.params)
        except EpidynError as exc:
            raise ConfigError(str(exc)) from None
        problems = validate_params(p, allow_zero_phi=allow_zero_phi)
        if problems:
            raise ConfigError("invalid parameters: " + "; ".join(problems))
        return p

    def as_dict(self) -> dict:
        d = {"model": self.model, "params": dict(self.params)}
        if self.command:
            d["command"] = self.command
        d["options"] = copy.deepcopy(self.options)
        return d


def preset_names() -> list[str]:
    root = resources.files("epidyn") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _load_json(text: str, origin: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{origin}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{origin}: top level must be an object")
    return doc


def from_dict(doc: dict) -> RunConfig:
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]  # a JSON report echoes its run configuration
    model = doc.get("model")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
    params = doc.get("params")
    if not isinstance(params, dict):
        raise ConfigError("params must be an object of named values")
    options = doc.get("options", {}) or {}
    if not isinstance(options, dict):
        raise ConfigError("options must be an object")
    return RunConfig(model, {k: float(v) for k, v in params.items()}, doc.get("command"),
                     copy.deepcopy(options))


def load(path: Optional[str] = None, preset: Optional[str] = None) -> RunConfig:
    if (path is None) == (preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    if preset is not None:
        res = resources.files("epidyn") / "configs" / f"{preset}.json"
        if not res.is_file():
            raise ConfigError(f"unknown preset {preset!r}; available: {', '.join(preset_names())}")
        return from_dict(_load_json(res.read_text(), f"preset {preset}"))
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return from_dict(_load_json(text, str(path)))


def parse_number(text: str) -> float:
    """Float or exact fraction such as ``1/360``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


def _parse_value(text: str):
    try:
        return parse_number(text)
    except ConfigError:
        pass
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: RunConfig, assignments: list[str]) -> RunConfig:
    """Apply ``name=value`` overrides; ``options.key=value`` targets options."""
    cfg = RunConfig(cfg.model, dict(cfg.params), cfg.command, copy.deepcopy(cfg.options))
    for item in assignments or []:
        if "=" not in item:
            raise ConfigError(f"--set expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        name = name.strip()
        if name.startswith("options."):
            cfg.options[name[len("options."):]] = _parse_value(value)
        elif name == "model":
            if value not in MODELS:
                raise ConfigError(f"model must be one of {MODELS}")
            cfg.model = value
        else:
            cfg.params[name] = parse_number(value)
    return cfg
