"""
Solver Settings
Central tolerance record for the LP and MIP engines
"""

from dataclasses import dataclass
from typing import Optional

from config_loader import Config, config as default_config


@dataclass(frozen=True)
class SolverSettings:
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    relative_gap: float = 1e-6
    pivot_tol: float = 1e-9
    optimality_tol: float = 1e-9
    node_limit: int = 1_000_000
    degeneracy_limit: int = 50
    refactor_interval: int = 50
    iteration_limit: int = 50_000

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None) -> "SolverSettings":
        cfg = cfg or default_config
        base = cls()
        return cls(
            feasibility_tol=float(cfg.get("solver", "feasibility_tol", default=base.feasibility_tol)),
            integrality_tol=float(cfg.get("solver", "integrality_tol", default=base.integrality_tol)),
            relative_gap=float(cfg.get("solver", "relative_gap", default=base.relative_gap)),
            pivot_tol=float(cfg.get("solver", "pivot_tol", default=base.pivot_tol)),
            optimality_tol=float(cfg.get("solver", "optimality_tol", default=base.optimality_tol)),
            node_limit=int(cfg.get("solver", "node_limit", default=base.node_limit)),
            degeneracy_limit=int(cfg.get("solver", "degeneracy_limit", default=base.degeneracy_limit)),
            refactor_interval=int(cfg.get("solver", "refactor_interval", default=base.refactor_interval)),
            iteration_limit=int(cfg.get("solver", "iteration_limit", default=base.iteration_limit)),
        )
