import logging
from pathlib import Path
from typing import Any

import yaml

from ..models.custom_error import ConfigError

logger = logging.getLogger(__name__)

_MISSING = object()


class YamlEditor:
    """Editor for YAML configuration documents addressed by dot-notation paths."""

    def __init__(self, filename: str | Path, create: bool = False):
        self.filename = str(filename)
        if create and not Path(self.filename).exists():
            self.data: dict[str, Any] = {}
        else:
            self.data = self._load_yaml()

    def _load_yaml(self) -> dict[str, Any]:
        """Load YAML file and return as dict."""
        try:
            with open(self.filename, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except Exception as e:
            raise ConfigError(f"Failed to load YAML file: {str(e)}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Failed to load YAML file: {self.filename} is not a mapping")
        return data

    def _save_yaml(self) -> None:
        """Save current data back to YAML file."""
        try:
            with open(self.filename, "w", encoding="utf-8") as f:
                yaml.safe_dump(
                    self.data, f, default_flow_style=None, allow_unicode=True, sort_keys=False
                )
            logger.info("YAML file saved to %s", self.filename)
        except Exception as e:
            raise ConfigError(f"Failed to save YAML file: {str(e)}") from e

    def get(self, path: str, default: Any = None) -> Any:
        """Read a nested value using dot notation path."""
        current: Any = self.data
        for key in path.split("."):
            if not isinstance(current, dict) or key not in current:
                return default
            current = current[key]
        return current

    def require(self, path: str) -> Any:
        """Like `get`, but a missing key is a configuration error."""
        value = self.get(path, _MISSING)
        if value is _MISSING:
            raise ConfigError(f"{self.filename}: missing required key {path!r}")
        return value

    def update(self, path: str, value: Any) -> None:
        """Update a nested value using dot notation path."""
        keys = path.split(".")
        current = self.data

        for key in keys[:-1]:
            if key not in current:
                current[key] = {}
            current = current[key]

        current[keys[-1]] = value

    def save_changes(self) -> None:
        """Save changes to file."""
        self._save_yaml()
