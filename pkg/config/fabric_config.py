"""
Fabric configuration loader for HyperNAT runs.

Profiles are flat ``key=value`` files (dotenv syntax, ``#`` comments) whose
keys are exactly the :class:`~hypernat.simnet.fabric.FabricConfig` fields.
Values resolve as defaults < profile file < explicit overrides.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Union

from dotenv import dotenv_values

from hypernat.simnet.fabric import FabricConfig

DEFAULT_CONFIG_PATH = Path(__file__).with_name("hypernat.env")


class FabricConfigLoader:
    """
    Reads one profile and builds validated :class:`FabricConfig` objects from it.

    Args:
        config_path: Profile to load. Defaults to the bundled ``hypernat.env``.
    """

    def __init__(self, config_path: Union[str, os.PathLike] = DEFAULT_CONFIG_PATH):
        self.config_path = str(config_path)
        self.values = self._load_config()

    def _load_config(self) -> Dict[str, str]:
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        values = dotenv_values(self.config_path, interpolate=False)
        if not values:
            raise ValueError(f"Empty configuration file: {self.config_path}")

        valueless = [key for key, value in values.items() if value is None]
        if valueless:
            raise ValueError(f"Keys without a value in {self.config_path}: {valueless}")

        unknown = [key for key in values if key not in FabricConfig.model_fields]
        if unknown:
            raise ValueError(
                f"Unknown keys in {self.config_path}: {unknown}. Available: {self.list_keys()}"
            )
        return dict(values)

    def get(self, key: str) -> str:
        """
        Raw value of ``key`` as written in the profile.

        Raises:
            KeyError: If the profile does not set ``key``.
        """
        if key not in self.values:
            raise KeyError(f"'{key}' is not set in {self.config_path}. Set keys: {list(self.values)}")
        return self.values[key]

    def build(self, **overrides: Any) -> FabricConfig:
        """Validated config from this profile with ``overrides`` on top (raises ConfigError)."""
        return FabricConfig.build(self.values, **overrides)

    @staticmethod
    def list_keys() -> List[str]:
        return list(FabricConfig.model_fields)

    def reload_config(self) -> None:
        """Reload configuration from file."""
        self.values = self._load_config()


# Default instance for easy importing
default_config = FabricConfigLoader()
