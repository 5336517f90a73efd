"""
Configuration management for the insulation laboratory.
"""

import logging
import math
import os
import typing as t

import numpy as np

from robin_insulation.models.domain import DomainSpec
from robin_insulation.models.settings import LINEAR_SOLVERS, RunConfig
from robin_insulation.utils.error_handling import ConfigError, MeshError


def parse_bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def parse_grid(text: str) -> t.List[float]:
    """
    Parse '1.5,8' or the geometric form 'log:a:b:n' into a list of floats.
    """
    text = str(text).strip()
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"geometric grid must read log:a:b:n, got '{text}'")
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
        if lo <= 0.0 or hi <= 0.0 or n < 1:
            raise ValueError(f"geometric grid needs positive bounds and n >= 1, got '{text}'")
        return [float(v) for v in np.geomspace(lo, hi, n)]
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


def _optional_text(text: str) -> t.Optional[str]:
    text = str(text).strip()
    return text or None


# key -> (group, field, parser)
CONFIG_KEYS: t.Dict[str, t.Tuple[str, str, t.Callable[[str], t.Any]]] = {
    "domain": ("domain", "domain", str),
    "mesh_h": ("domain", "mesh_h", float),
    "beta": ("physics", "beta", float),
    "mass": ("physics", "mass", float),
    "beta_grid": ("physics", "beta_grid", parse_grid),
    "m_grid": ("physics", "m_grid", parse_grid),
    "tol": ("solver", "tol", float),
    "eig_tol": ("solver", "eig_tol", float),
    "max_iter": ("solver", "max_iter", int),
    "restarts": ("solver", "restarts", parse_bool),
    "linear_solver": ("solver", "linear_solver", str),
    "radiality_safety": ("solver", "radiality_safety", float),
    "h_const": ("layer", "h_const", float),
    "eps": ("layer", "eps_list", parse_grid),
    "eps_list": ("layer", "eps_list", parse_grid),
    "outer_condition": ("layer", "outer_condition", str),
    "jobs": ("run", "jobs", int),
    "out": ("run", "out", _optional_text),
    "seed": ("run", "seed", int),
    "refinements": ("run", "refinements", int),
}


class ConfigManager:
    """Builds validated run configurations from a key=value file and flag overrides."""

    def __init__(self):
        """Initialize the configuration manager."""
        self.logger = logging.getLogger(__name__)

    def create_default_settings(self) -> RunConfig:
        """Create default settings."""
        return RunConfig()

    def read_file(self, path: str) -> t.Dict[str, str]:
        """
        Read a flat key=value file; '#' starts a comment, blank lines are skipped
        and '-' in keys is read as '_'.
        """
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}")
        values = {}
        with open(path, "r", encoding="utf-8") as f:
            for number, raw in enumerate(f, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{number}: expected key=value, got '{raw.rstrip()}'")
                key, value = (part.strip() for part in line.split("=", 1))
                values[key.replace("-", "_")] = value
        self.logger.info(f"Read {len(values)} settings from {path}")
        return values

    def load_settings(self, path: t.Optional[str] = None,
                      overrides: t.Optional[t.Dict[str, t.Any]] = None) -> RunConfig:
        """
        Defaults, then the file, then the overrides (flags win); validated.

        Args:
            path: Optional key=value file
            overrides: Values from the command line; None entries are ignored

        Returns:
            RunConfig

        Raises:
            ConfigError: unknown key, unparsable or out-of-range value
        """
        settings = self.create_default_settings()
        if path:
            settings.update(self._grouped(self.read_file(path)))
        if overrides:
            settings.update(self._grouped({k: v for k, v in overrides.items() if v is not None}))
        return self.validate_settings(settings)

    def _grouped(self, values: t.Dict[str, t.Any]) -> t.Dict[str, t.Dict[str, t.Any]]:
        grouped: t.Dict[str, t.Dict[str, t.Any]] = {}
        for key, value in values.items():
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"Unknown setting '{key}'")
            group, field, parser = CONFIG_KEYS[key]
            try:
                parsed = parser(value) if isinstance(value, str) else value
            except ValueError as e:
                raise ConfigError(f"Invalid value for '{key}': {e}") from e
            grouped.setdefault(group, {})[field] = parsed
        return grouped

    def validate_settings(self, settings: RunConfig) -> RunConfig:
        """Validate settings; unlike a GUI, a bad value is an error, not a reset."""
        self.validate_range("beta", settings.beta, 0.0, math.inf, low_open=True)
        self.validate_range("mass", settings.mass, 0.0, math.inf)
        self.validate_range("mesh_h", settings.mesh_h, 0.0, math.inf, low_open=True)
        self.validate_range("tol", settings.tol, 0.0, 1.0, low_open=True)
        self.validate_range("eig_tol", settings.eig_tol, 0.0, 1.0, low_open=True)
        self.validate_range("max_iter", settings.max_iter, 1, 1_000_000)
        self.validate_range("radiality_safety", settings.radiality_safety, 1.0, math.inf)
        self.validate_range("h_const", settings.h_const, 0.0, math.inf, low_open=True)
        self.validate_range("jobs", settings.jobs, 1, 1024)
        self.validate_range("refinements", settings.refinements, 0, 8)
        for value in settings.beta_grid:
            self.validate_range("beta_grid", value, 0.0, math.inf, low_open=True)
        for value in settings.m_grid:
            self.validate_range("m_grid", value, 0.0, math.inf)
        for value in settings.eps_list:
            self.validate_range("eps", value, 0.0, math.inf, low_open=True)
        self.validate_option("linear_solver", settings.linear_solver, LINEAR_SOLVERS)
        self.validate_option("outer_condition", settings.outer_condition, ("weak", "strong"))
        try:
            DomainSpec.parse(settings.domain, settings.mesh_h).validated()
        except (MeshError, ValueError) as e:
            raise ConfigError(f"Invalid domain '{settings.domain}': {e}") from e
        return settings

    def validate_range(self, name, value, min_val, max_val, low_open=False):
        """Ensure a value is a number within a specified range."""
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) \
                or value < min_val or value > max_val or (low_open and value == min_val):
            bound = "(" if low_open else "["
            raise ConfigError(f"'{name}' must lie in {bound}{min_val}, {max_val}], got {value!r}")
        return value

    def validate_option(self, name, value, options):
        """Ensure a value is one of the allowed options."""
        if value not in options:
            raise ConfigError(f"'{name}' must be one of {list(options)}, got {value!r}")
        return value
