"""
Planar Settings
Tolerances for region enumeration and per-state solves
"""

from dataclasses import dataclass
from typing import Optional

from config_loader import Config, config as default_config


@dataclass(frozen=True)
class PlanarSettings:
    region_margin: float = 1e-7
    condition_limit: float = 1e12
    validation_tol: float = 1e-8
    workers: int = 1

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None) -> "PlanarSettings":
        cfg = cfg or default_config
        base = cls()
        return cls(
            region_margin=float(cfg.get("planar", "region_margin", default=base.region_margin)),
            condition_limit=float(cfg.get("planar", "condition_limit", default=base.condition_limit)),
            validation_tol=float(cfg.get("planar", "validation_tol", default=base.validation_tol)),
            workers=int(cfg.get("planar", "workers", default=base.workers)),
        )
