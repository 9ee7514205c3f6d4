"""Resolution of the pipeline configuration from files, environment and flags.

Precedence, lowest first: model defaults, the `key = value` config file, the
FMCAF_SEED environment variable, the --seed flag, command-specific flags.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from pydantic import ValidationError

from .errors import ConfigError
from .models import FusionConfig

logger = logging.getLogger(__name__)

SEED_ENV = "FMCAF_SEED"
NONE_VALUES = ("none", "null")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse `key = value` lines; `#` starts a comment, blank lines are skipped."""
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}")
        if key not in FusionConfig.__fields__:
            raise ConfigError(f"{source}:{number}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r}")
        values[key] = None if value.lower() in NONE_VALUES else value
    return values


def build_config(values: Mapping[str, Any], source: str = "config") -> FusionConfig:
    try:
        return FusionConfig(**values)
    except ValidationError as err:
        raise ConfigError(f"invalid {source}: {err}") from err


def load_config(path: Union[str, Path]) -> FusionConfig:
    return build_config(parse_config_text(_read(path), str(path)), str(path))


def with_overrides(config: FusionConfig, **updates: Any) -> FusionConfig:
    """Copy of `config` with `updates` applied and every constraint re-checked."""
    updates = {key: value for key, value in updates.items() if value is not None}
    unknown = sorted(set(updates) - set(FusionConfig.__fields__))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return build_config({**config.dict(), **updates}, "override")


def resolve_config(
    path: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    environ: Optional[Mapping[str, str]] = None,
    **overrides: Any,
) -> FusionConfig:
    """Merge defaults, an optional config file, FMCAF_SEED, --seed and flag overrides."""
    environ = os.environ if environ is None else environ
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(parse_config_text(_read(path), str(path)))
        logger.info("config file %s sets %s", path, ", ".join(sorted(values)) or "nothing")
    env_seed = environ.get(SEED_ENV)
    if env_seed is not None and env_seed.strip():
        try:
            values["seed"] = int(env_seed)
        except ValueError as err:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from err
        logger.info("seed %s taken from %s", values["seed"], SEED_ENV)
    if seed is not None:
        values["seed"] = seed
        logger.info("seed %s taken from --seed", seed)
    config = build_config(values, str(path) if path else "config")
    return with_overrides(config, **overrides) if overrides else config


def _read(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
