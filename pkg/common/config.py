"""
Configuration loading and logging setup.

The configuration lives in ``config.json`` at the repository root. A ``.env``
file, when present, is loaded first so that the ``TOEXPM_*`` environment
variables can override a handful of settings without editing the JSON.
"""

import copy
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from common.errors import InvalidArgumentError


DEFAULT_CONFIG: Dict[str, Any] = {
    "numerics": {
        "tol": 1e-12,
        "bessel": {"start_points": 64, "max_points": 1 << 20, "rel_tol": 1e-14},
        "block": {"t1_start": 16, "t1_max": 512, "phi_tol": 1e-12, "t2_tol": 1e-12},
    },
    "bench": {"trials": 3, "dense_cap_mb": 2048},
    "heat": {},
    "output": {"output_dir": "outputs", "formats": ["json", "markdown"]},
    "logging": {"level": "INFO", "file": None},
}

ENV_OVERRIDES = {
    "TOEXPM_LOG_LEVEL": ("logging", "level", str),
    "TOEXPM_OUTPUT_DIR": ("output", "output_dir", str),
    "TOEXPM_DENSE_CAP_MB": ("bench", "dense_cap_mb", float),
}

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Optional[str] = "config.json", env_file: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from a JSON file layered over the built-in defaults.

    Args:
        config_path: Path of the JSON document. ``None`` returns the defaults.
        env_file: Optional ``.env`` file; the default search path is used otherwise.

    Returns:
        The merged configuration dictionary.
    """
    load_dotenv(dotenv_path=env_file, override=False)

    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            try:
                config = _merge(config, json.load(f))
            except json.JSONDecodeError as e:
                raise InvalidArgumentError(f"Malformed configuration file {path}: {e}") from e

    for env_name, (section, key, cast) in ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw:
            try:
                config[section][key] = cast(raw)
            except ValueError as e:
                raise InvalidArgumentError(f"Bad value for {env_name}: {raw!r}") from e

    return config


def setup_logging(config: Dict[str, Any]) -> None:
    """Setup logging configuration."""
    log_config = config.get("logging", {})
    level_name = str(log_config.get("level", "INFO")).upper()
    log_level = getattr(logging, level_name, None)
    if not isinstance(log_level, int):
        raise InvalidArgumentError(f"Unknown logging level: {level_name}")

    handlers = [logging.StreamHandler(sys.stderr)]

    # Create logs directory if specified
    log_file = log_config.get("file")
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path))

    logging.basicConfig(level=log_level, format=LOG_FORMAT, handlers=handlers, force=True)
