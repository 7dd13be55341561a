"""Campaign configuration loading with environment overrides."""

import json
import os
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

import structlog
from dotenv import dotenv_values

from ..models import CampaignConfig
from ..validation import ConfigurationError

logger = structlog.get_logger(__name__)

ENV_PREFIX = "RVLOOPFUZZ_"

# Environment variable suffix -> (config field, parser)
ENV_OVERRIDES: Dict[str, tuple[str, Callable[[str], Any]]] = {
    "MASTER_SEED": ("master_seed", int),
    "OUTPUT_DIR": ("output_dir", str),
    "LOG_LEVEL": ("log_level", str),
}


def environment(
    env_file: Optional[Path | str] = None, environ: Optional[Mapping[str, str]] = None
) -> Dict[str, str]:
    """Variables from ``env_file`` (or ``.env`` when present) overlaid by the process environment."""
    values: Dict[str, str] = {}
    path = Path(env_file) if env_file is not None else Path(".env")
    if env_file is not None and not path.exists():
        raise ConfigurationError(f"env file {path} does not exist", config_key="env_file")
    if path.exists():
        values.update({k: v for k, v in dotenv_values(path).items() if v is not None})
    values.update(os.environ if environ is None else environ)
    return values


def apply_env_overrides(config: CampaignConfig, env: Mapping[str, str]) -> CampaignConfig:
    """Copy of ``config`` with the ``RVLOOPFUZZ_*`` overrides found in ``env`` applied.

    Raises:
        ConfigurationError: If an override does not parse
    """
    update: Dict[str, Any] = {}
    for suffix, (field, parse) in ENV_OVERRIDES.items():
        name = ENV_PREFIX + suffix
        if name not in env:
            continue
        try:
            update[field] = parse(env[name])
        except ValueError as e:
            raise ConfigurationError(
                f"{name}={env[name]!r} is not a valid {field}", config_key=name, cause=e
            ) from e
    if not update:
        return config
    logger.info("config_overrides_applied", fields=sorted(update))
    document = config.model_dump(mode="json")
    document.update(update)
    return CampaignConfig.from_mapping(document)


def load_campaign_config(
    path: Optional[Path | str] = None,
    env_file: Optional[Path | str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> CampaignConfig:
    """Validated config from ``path`` (defaults when None) with environment overrides.

    Raises:
        ConfigurationError: If the file or an override cannot be read
        ValidationError: Listing every invalid field
    """
    config = CampaignConfig.load(path) if path is not None else CampaignConfig()
    return apply_env_overrides(config, environment(env_file, environ))


def effective_config_json(config: CampaignConfig) -> str:
    """The config as it will run, plus its hash, as indented JSON."""
    document = config.model_dump(mode="json")
    document["config_hash"] = config.config_hash()
    return json.dumps(document, indent=2, sort_keys=True)


__all__ = [
    "ENV_OVERRIDES",
    "ENV_PREFIX",
    "apply_env_overrides",
    "effective_config_json",
    "environment",
    "load_campaign_config",
]
