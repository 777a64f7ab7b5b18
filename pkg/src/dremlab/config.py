"""Configuration loader for run defaults, check suites and scenario files."""

import os
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

from dremlab.errors import ConfigError
from dremlab.models import ScenarioSpec, SuiteSpec
from dremlab.presets import PRESETS, get_preset
from dremlab.signals import load_scenario

CONFIG_DIR_ENV = "DREMLAB_CONFIG_DIR"


def _read_yaml(path: Path) -> dict[str, Any]:
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return data


class LabConfig(BaseModel):
    """Lab configuration."""

    defaults: dict[str, Any] = Field(
        default_factory=dict, description="RunConfig field defaults"
    )
    excitation: dict[str, Any] = Field(
        default_factory=dict, description="ExcitationConfig overrides"
    )
    suites: dict[str, SuiteSpec] = Field(default_factory=dict)
    scenario_dir: Optional[Path] = None

    @classmethod
    def load(cls, config_dir: Path | str | None = None) -> "LabConfig":
        """Load configuration from YAML files.

        Args:
            config_dir: Directory containing defaults.yaml and suites.yaml;
                falls back to $DREMLAB_CONFIG_DIR, then "config"

        Returns:
            Loaded configuration object

        Raises:
            ConfigError: If a file cannot be parsed or fails validation
        """
        config_path = Path(config_dir or os.environ.get(CONFIG_DIR_ENV) or "config")

        # Run defaults, with the excitation block split off
        defaults_file = config_path / "defaults.yaml"
        defaults = _read_yaml(defaults_file) if defaults_file.exists() else {}
        excitation = defaults.pop("excitation", None) or {}
        # delta_min: null means ten integration steps
        if excitation.get("delta_min") is None:
            excitation.pop("delta_min", None)

        # Check suites
        suites_file = config_path / "suites.yaml"
        suites_data = _read_yaml(suites_file).get("suites", {}) if suites_file.exists() else {}

        scenario_dir = config_path / "scenarios"
        try:
            return cls(
                defaults=defaults,
                excitation=excitation,
                suites=suites_data,
                scenario_dir=scenario_dir if scenario_dir.is_dir() else None,
            )
        except ValidationError as e:
            raise ConfigError(f"{config_path}: {e}") from e

    def resolve_scenario(self, name: str, horizon: Optional[float] = None) -> ScenarioSpec:
        """Find a scenario by preset name, file path, or file in the scenario directory.

        Embedded presets take precedence over files of the same name.
        """
        if name in PRESETS:
            return get_preset(name, horizon)
        if horizon is not None:
            raise ConfigError("--horizon only applies to embedded presets")
        path = Path(name)
        if not path.exists() and self.scenario_dir is not None:
            candidate = self.scenario_dir / f"{name}.yaml"
            if candidate.exists():
                path = candidate
        if not path.exists():
            raise ConfigError(f"no preset or scenario file named {name!r}")
        return load_scenario(path)
