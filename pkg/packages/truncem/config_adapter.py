"""
Truncem Configuration Adapter
Loads the `experiment:` section of a YAML file, applies TRUNCEM_* environment
overrides and validates the result as an ExperimentConfig.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv

from .errors import ConfigurationError
from .harness import ExperimentConfig

logger = logging.getLogger(__name__)

SEARCH_PATHS = ("./truncem.yaml", "./config/truncem.yaml")

# Environment variable -> (config field, parser)
ENV_OVERRIDES = {
    "TRUNCEM_SAMPLES": ("samples", int),
    "TRUNCEM_WORKERS": ("workers", int),
    "TRUNCEM_SEED": ("base_seed", int),
    "TRUNCEM_LOG_LEVEL": ("log_level", str),
}

DEFAULT_EXPERIMENT: Dict[str, Any] = {
    "model_id": "cubic-vol",
    "model_params": {"a0": 3.0, "a1": 10.0, "a2": 53.0, "tau": 1.0, "xi": 0.05},
    "horizon_t": 10.0,
    "ref_exp": 12,
    "step_exps": [7, 8, 9, 10, 11],
    "samples": 200,
    "base_seed": 42,
    "varrho": 1.0 / 3.0,
    "h_scale": 1.0,
    "error_norm": "segment-sup",
    "truncate": True,
    "workers": 1,
    "moment_cap": 6.0,
    "log_level": "INFO",
}


class ConfigLoader:
    """Finds, reads and validates the experiment configuration."""

    def __init__(self, config_path: Optional[Union[str, Path]] = None, use_env: bool = True):
        if use_env:
            # .env values never override variables already set
            load_dotenv(override=False)
        self.use_env = use_env
        self.config_path = Path(config_path) if config_path else self._find_config_file()

    def _find_config_file(self) -> Optional[Path]:
        """First existing file among the standard locations, if any."""
        for candidate in SEARCH_PATHS:
            if Path(candidate).exists():
                return Path(candidate)
        return None

    def read_file(self) -> Dict[str, Any]:
        """The `experiment:` mapping of the config file ({} without a file)."""
        if self.config_path is None:
            return {}
        if not self.config_path.exists():
            raise ConfigurationError(f"Config file not found: {self.config_path}")
        try:
            with open(self.config_path, "r") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{self.config_path}: invalid YAML: {exc}") from exc

        if not isinstance(data, dict):
            raise ConfigurationError(f"{self.config_path}: expected a mapping at the top level")
        section = data.get("experiment", {})
        if not isinstance(section, dict):
            raise ConfigurationError(f"{self.config_path}: 'experiment' must be a mapping")
        logger.debug(f"Loaded {len(section)} experiment settings from {self.config_path}")
        return dict(section)

    def env_overrides(self) -> Dict[str, Any]:
        overrides: Dict[str, Any] = {}
        if not self.use_env:
            return overrides
        for variable, (key, parse) in ENV_OVERRIDES.items():
            raw = os.getenv(variable)
            if raw is None or raw == "":
                continue
            try:
                overrides[key] = parse(raw)
            except ValueError as exc:
                raise ConfigurationError(f"{variable}={raw!r} is not a valid {key}") from exc
        return overrides

    def load(self, **cli_overrides: Any) -> ExperimentConfig:
        """File values, then environment, then explicit (non-None) CLI values."""
        data = self.read_file()
        data.update(self.env_overrides())
        params = cli_overrides.pop("model_params", None) or {}
        model_id = cli_overrides.get("model_id")
        if model_id is not None and model_id != data.get("model_id", "cubic-vol"):
            # file parameters belong to another model
            data["model_params"] = {}
        if params:
            data["model_params"] = {**(data.get("model_params") or {}), **params}
        return ExperimentConfig.from_mapping(data, **cli_overrides)


def load_experiment_config(config_path: Optional[Union[str, Path]] = None, **cli_overrides: Any) -> ExperimentConfig:
    """Load the experiment configuration from file, environment and overrides."""
    return ConfigLoader(config_path).load(**cli_overrides)


def write_default_config(path: Union[str, Path] = "./config/truncem.yaml") -> Path:
    """Write the default (cubic volatility, 2^-12 reference) experiment as YAML."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump({"experiment": DEFAULT_EXPERIMENT}, f, default_flow_style=False, sort_keys=False)
    logger.info(f"Wrote default configuration to {path}")
    return path
