"""Configuration resolution: CLI flag > environment > config file > default.

The config file is a flat key/value format, one ``key = value`` per line,
``#`` comments, values optionally quoted. Recognized keys mirror the CLI
flags: api_base, api_key, cache_dir, model, encoder, encoder_model,
max_inflight, timeout, offline, tau, threshold.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidInputError

logger = logging.getLogger(__name__)

ENV_API_BASE = "FACTSIM_API_BASE"
ENV_API_KEY = "FACTSIM_API_KEY"
ENV_CACHE_DIR = "FACTSIM_CACHE_DIR"

DEFAULT_CONFIG_FILE = "factsim.toml"

KNOWN_KEYS = {
    "api_base", "api_key", "cache_dir", "model", "encoder", "encoder_model",
    "max_inflight", "timeout", "offline", "tau", "threshold",
}


@dataclass
class Settings:
    api_base: str | None = None
    api_key: str | None = None
    cache_dir: str | None = None
    model: str = "gpt-4"
    encoder: str = "test"
    encoder_model: str = ""
    max_inflight: int = 4
    timeout: float = 60.0
    offline: bool = False
    tau: str = "b"
    threshold: float = 0.75


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key=value config file."""
    values: dict[str, str] = {}
    path = Path(path)
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InvalidInputError(f"{path}, line {line_no}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if key not in KNOWN_KEYS:
            logger.warning("%s, line %d: ignoring unknown key %r", path, line_no, key)
            continue
        values[key] = value
    return values


def _as_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise InvalidInputError(f"config key {key!r}: expected a boolean, got {value!r}")


def resolve_settings(
    flags: Mapping[str, Any],
    env: Mapping[str, str] | None = None,
    config_path: str | Path | None = None,
) -> Settings:
    """Merge flag/env/file/default values into one Settings object.

    ``flags`` maps setting names to CLI-provided values, with None meaning
    "not given". When ``config_path`` is None, ./factsim.toml is used if
    it exists.
    """
    env = os.environ if env is None else env
    if config_path is None and Path(DEFAULT_CONFIG_FILE).is_file():
        config_path = DEFAULT_CONFIG_FILE
    file_values = load_config_file(config_path) if config_path else {}

    def pick(key: str, env_name: str | None = None) -> Any:
        if flags.get(key) is not None:
            return flags[key]
        if env_name and env.get(env_name):
            return env[env_name]
        if key in file_values:
            return file_values[key]
        return None

    settings = Settings()
    value = pick("api_base", ENV_API_BASE)
    if value is not None:
        settings.api_base = str(value)
    value = pick("api_key", ENV_API_KEY)
    if value is not None:
        settings.api_key = str(value)
    value = pick("cache_dir", ENV_CACHE_DIR)
    if value is not None:
        settings.cache_dir = str(value)
    value = pick("model")
    if value is not None:
        settings.model = str(value)
    value = pick("encoder")
    if value is not None:
        settings.encoder = str(value)
    value = pick("encoder_model")
    if value is not None:
        settings.encoder_model = str(value)
    value = pick("max_inflight")
    if value is not None:
        try:
            settings.max_inflight = int(value)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"max_inflight must be an integer, got {value!r}") from exc
        if settings.max_inflight < 1:
            raise InvalidInputError("max_inflight must be >= 1")
    value = pick("timeout")
    if value is not None:
        try:
            settings.timeout = float(value)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"timeout must be a number, got {value!r}") from exc
    value = pick("offline")
    if value is not None:
        settings.offline = value if isinstance(value, bool) else _as_bool(str(value), "offline")
    value = pick("tau")
    if value is not None:
        settings.tau = str(value)
        if settings.tau not in ("a", "b"):
            raise InvalidInputError(f"tau must be 'a' or 'b', got {settings.tau!r}")
    value = pick("threshold")
    if value is not None:
        try:
            settings.threshold = float(value)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"threshold must be a number, got {value!r}") from exc
    return settings
