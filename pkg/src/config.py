"""Engine settings.

Precedence, lowest first: built-in defaults, ``softchase.yml`` (or the file named
by ``SOFTCHASE_CONFIG``), environment variables, then explicit overrides from the
command line.
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .errors import ConfigError


load_dotenv()

ENGINE_VERSION = "0.3.0"
DEFAULT_CONFIG_FILE = "softchase.yml"

_ENV_OVERRIDES = {
    "SOFTCHASE_LOG": ("log_level", str),
    "SOFTCHASE_SEED": ("seed", int),
    "SOFTCHASE_BUDGET": ("grounding_budget", int),
}


@dataclass(frozen=True)
class Settings:
    step_budget: int = 200000
    grounding_budget: int = 5000
    iterations: int = 10000
    jump_rate: float = 5.0
    backward_threshold: float = 0.5
    seed: int = 0
    relax_aggregate_strata: bool = False
    jobs: int = 1
    log_level: str = "WARNING"

    def __post_init__(self):
        if self.step_budget <= 0:
            raise ConfigError(f"step_budget must be positive, got {self.step_budget}")
        if self.grounding_budget <= 0:
            raise ConfigError(f"grounding_budget must be positive, got {self.grounding_budget}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be at least 1, got {self.iterations}")
        if self.jump_rate <= 0:
            raise ConfigError(f"jump_rate must be positive, got {self.jump_rate}")
        if not 0.0 <= self.backward_threshold <= 1.0:
            raise ConfigError(
                f"backward_threshold must lie in [0, 1], got {self.backward_threshold}"
            )
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        if logging.getLevelName(str(self.log_level).upper()) not in (
            logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR, logging.CRITICAL,
        ):
            raise ConfigError(f"unknown log level: {self.log_level}")

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _coerce(name: str, value: Any) -> Any:
    target = {f.name: f.type for f in fields(Settings)}[name]
    try:
        if target in ("bool", bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if target in ("int", int):
            return int(value)
        if target in ("float", float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for {name}: {type(e).__name__}: {str(e)}")


def _read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {path} is not valid YAML: {str(e)}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    known = {f.name for f in fields(Settings)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return {k: _coerce(k, v) for k, v in data.items()}


def load_settings(overrides: Optional[Dict[str, Any]] = None,
                  config_path: Optional[str] = None) -> Settings:
    """Resolve settings from file, environment and explicit overrides."""
    values: Dict[str, Any] = {}

    path = config_path or os.getenv("SOFTCHASE_CONFIG")
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}")
        values.update(_read_config_file(path))
    elif os.path.exists(DEFAULT_CONFIG_FILE):
        values.update(_read_config_file(DEFAULT_CONFIG_FILE))

    for env_name, (key, _) in _ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw:
            values[key] = _coerce(key, raw)

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)

    return replace(Settings(), **values)


def setup_logging(level: str = "WARNING") -> None:
    """Route engine logs to stderr so stdout carries results only."""
    root = logging.getLogger("src")
    root.setLevel(str(level).upper())
    for handler in root.handlers:
        if getattr(handler, "_softchase", False):
            handler.setStream(sys.stderr)
            return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    handler._softchase = True
    root.addHandler(handler)
