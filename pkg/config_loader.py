"""
Configuration Loader for graspstab
Solver tolerances and limits from config.yaml, merged over built-in defaults
"""

import copy
import logging
import math
import os
from typing import Any, Dict, Mapping, Optional

import yaml

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "solver": {
        "feasibility_tol": 1e-7,
        "integrality_tol": 1e-6,
        "relative_gap": 1e-6,
        "pivot_tol": 1e-9,
        "optimality_tol": 1e-9,
        "node_limit": 1_000_000,
        "degeneracy_limit": 50,
        "refactor_interval": 50,
        "iteration_limit": 50_000,
    },
    "planar": {"region_margin": 1e-7, "condition_limit": 1e12, "validation_tol": 1e-8},
    "spatial": {"open_margin": 1e-9},
    "iterative": {
        "gamma": 1.0,
        "epsilon": 1e-3,
        "max_iterations": 500,
        "stability_residual": 1e-3,
        "cone_resolution": 16,
        "characteristic_length": 0.1,
    },
    "relaxation": {"initial_angle": math.pi / 2, "q": 10, "eta": math.radians(2.5), "max_rounds": 200},
    "queries": {"cap": 1e3, "search_tol": 1e-2, "map_step_deg": 1.0, "workers": 0},
    "shield": {"step_cap": 0.05, "cone_edges": 8},
    "logging": {"level": "WARNING", "log_dir": None},
}


def _merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


class Config:
    """
    Configuration manager for graspstab

    Values present in the file win; anything it leaves out keeps the built-in
    default, so a config file may set a single section.
    """

    def __init__(self, config_path: Optional[str] = None):
        if config_path is None:
            config_path = os.getenv("GRASPSTAB_CONFIG") or os.path.join(os.path.dirname(__file__), "config.yaml")
        self.config_path = config_path
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        merged = copy.deepcopy(DEFAULTS)
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f)
        except FileNotFoundError:
            logger.warning(f"[WARN] Config file not found at {self.config_path}, using defaults")
            return merged
        except yaml.YAMLError as e:
            logger.error(f"[ERROR] Cannot parse {self.config_path}: {e}; using defaults")
            return merged
        if loaded is None:
            return merged
        if not isinstance(loaded, Mapping):
            logger.error(f"[ERROR] Top level of {self.config_path} is not a mapping; using defaults")
            return merged
        logger.debug(f"[OK] Configuration loaded from {self.config_path}")
        return _merge(merged, loaded)

    def get(self, *keys, default=None) -> Any:
        """
        Nested lookup, e.g. config.get("relaxation", "q")

        Returns default when any key along the path is missing.
        """
        value: Any = self.config
        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value

    @property
    def log_level(self) -> str:
        return str(self.get("logging", "level", default="WARNING")).upper()

    @property
    def log_dir(self) -> Optional[str]:
        return self.get("logging", "log_dir")

    @property
    def default_eta(self) -> float:
        """Normal uncertainty used by robust queries (radians)"""
        return float(self.get("relaxation", "eta", default=DEFAULTS["relaxation"]["eta"]))

    def reload(self) -> None:
        self.config = self._load_config()
        logger.info("Configuration reloaded")


# Global configuration instance
config = Config()
