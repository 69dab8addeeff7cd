"""
Iterative Solver
Net-wrench minimization with object motion restricted to the current net-wrench direction
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from config_loader import Config, config as default_config
from errors import InvalidInputError
from grasp_model import EquilibriumSolution, GraspModel
from optimization import SolverSettings, lin_sum, solve_mip
from spatial.constraints import ExprSource, SpatialSettings, assemble_core_constraints
from spatial.friction_cone import add_polygonal_cone

logger = logging.getLogger(__name__)


class IterativeStatus(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    NONCONVERGED = "nonconverged"


@dataclass(frozen=True)
class IterativeConfig:
    """
    gamma bounds the step s in r_k = r_{k-1} + s w_{k-1}; torques are divided by the characteristic length

    gamma is in m per N of net wrench. The default 1.0 is the step that cancels
    a unit net force against unit contact stiffness; scale it with 1 / stiffness,
    so 1e-3 fits contacts a thousand times stiffer than the default springs.
    """

    gamma: float = 1.0
    epsilon: float = 1e-3
    max_iterations: int = 500
    stability_residual: float = 1e-3
    cone_resolution: int = 16
    characteristic_length: float = 0.1

    def __post_init__(self):
        for name in ("gamma", "epsilon", "max_iterations", "stability_residual", "cone_resolution", "characteristic_length"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"iterative setting {name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None, **overrides) -> "IterativeConfig":
        cfg = cfg or default_config
        base = cls()
        values = {
            "gamma": float(cfg.get("iterative", "gamma", default=base.gamma)),
            "epsilon": float(cfg.get("iterative", "epsilon", default=base.epsilon)),
            "max_iterations": int(cfg.get("iterative", "max_iterations", default=base.max_iterations)),
            "stability_residual": float(cfg.get("iterative", "stability_residual", default=base.stability_residual)),
            "cone_resolution": int(cfg.get("iterative", "cone_resolution", default=base.cone_resolution)),
            "characteristic_length": float(
                cfg.get("iterative", "characteristic_length", default=base.characteristic_length)
            ),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def weights(self) -> np.ndarray:
        return np.array([1.0, 1.0, 1.0] + [1.0 / self.characteristic_length] * 3)

    def magnitude(self, wrench) -> float:
        return float(np.linalg.norm(self.weights() * np.asarray(wrench, dtype=float)))


@dataclass
class StepResult:
    feasible: bool
    solution: Optional[EquilibriumSolution] = None
    step: float = 0.0

    @property
    def w_net(self) -> np.ndarray:
        return self.solution.w_net if self.solution is not None else np.full(6, np.nan)


@dataclass
class IterativeResult:
    status: IterativeStatus
    solution: Optional[EquilibriumSolution]
    residual: float
    iterations: int
    trace: List[Dict[str, float]] = field(default_factory=list)
    step_infeasible: bool = False

    @property
    def stable(self) -> bool:
        return self.status == IterativeStatus.STABLE

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "status": self.status.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "step_infeasible": self.step_infeasible,
            "trace": self.trace,
        }
        if self.solution is not None:
            out["solution"] = self.solution.to_dict()
        return out


def movement_constrained_ep(
    grasp: GraspModel,
    f_c: Optional[ExprSource],
    w,
    r_prev,
    w_prev,
    config: Optional[IterativeConfig] = None,
    solver: Optional[SolverSettings] = None,
) -> StepResult:
    """
    One step: minimize the weighted L1 norm of w + G c with r = r_prev + s w_prev, 0 <= s <= gamma

    Object equilibrium is dropped from the core model; the residual is what the
    objective drives down. Friction uses the fixed inscribed polygonal cone.
    """
    config = config or IterativeConfig.from_config()
    w = np.asarray(w, dtype=float)
    r_prev = np.asarray(r_prev, dtype=float)
    w_prev = np.asarray(w_prev, dtype=float)
    if not np.all(np.isfinite(w_prev)):
        raise InvalidInputError("previous net wrench must be finite")

    problem = assemble_core_constraints(
        grasp, w, f_c, include_object_equilibrium=False, settings=SpatialSettings.from_config()
    )
    model = problem.model
    for i in range(grasp.m):
        add_polygonal_cone(problem, i, config.cone_resolution)

    s = model.add_var("s", lb=0.0, ub=config.gamma)
    for j in range(6):
        name = problem.note("movement", f"movement[{j}]")
        model.add_constraint(problem.r[j] - float(w_prev[j]) * s == float(r_prev[j]), name)

    net = problem.net_wrench()
    weights = config.weights()
    plus = model.add_vars(6, "e+", lb=0.0)
    minus = model.add_vars(6, "e-", lb=0.0)
    for j in range(6):
        model.add_constraint(net[j] - plus[j] + minus[j] == 0.0, f"residual[{j}]")
    model.minimize(lin_sum(float(weights[j]) * (plus[j] + minus[j]) for j in range(6)))

    result = solve_mip(model, solver)
    if not result.ok:
        logger.debug(f"Movement-constrained step infeasible ({result.status.value})")
        return StepResult(False)
    return StepResult(True, problem.solution(result), result.value(s))


def iterative_ep(
    grasp: GraspModel,
    f_c: Optional[ExprSource],
    w,
    config: Optional[IterativeConfig] = None,
    solver: Optional[SolverSettings] = None,
) -> IterativeResult:
    """
    Iterate movement-constrained steps until the net wrench stops changing

    Args:
        grasp: spatial grasp
        f_c: commanded actuator forces (default: the hand's)
        w: applied wrench (fx, fy, fz, tx, ty, tz)
        config: step bound, convergence and stability thresholds

    Returns:
        IterativeResult; stable iff the converged residual is within stability_residual
    """
    config = config or IterativeConfig.from_config()
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (6,):
        raise InvalidInputError(f"spatial wrench must have 6 components, got {w.shape[0]}")
    r_prev = np.zeros(6)
    w_prev = w.copy()
    trace: List[Dict[str, float]] = []
    last: Optional[EquilibriumSolution] = None

    for iteration in range(1, config.max_iterations + 1):
        step = movement_constrained_ep(grasp, f_c, w, r_prev, w_prev, config, solver)
        if not step.feasible:
            residual = config.magnitude(w_prev)
            logger.info(f"Iterative solver: step {iteration} infeasible, grasp unstable")
            return IterativeResult(IterativeStatus.UNSTABLE, last, residual, iteration, trace, step_infeasible=True)
        w_net = step.w_net
        change = config.magnitude(w_prev - w_net)
        residual = config.magnitude(w_net)
        trace.append({"iteration": iteration, "step": step.step, "residual": residual, "change": change})
        logger.debug(f"Iterative step {iteration}: s={step.step:.6g} residual={residual:.6g} change={change:.6g}")
        last = step.solution
        if change < config.epsilon:
            status = IterativeStatus.STABLE if residual <= config.stability_residual else IterativeStatus.UNSTABLE
            return IterativeResult(status, last, residual, iteration, trace)
        r_prev = last.r
        w_prev = w_net

    residual = config.magnitude(w_prev)
    logger.warning(f"[WARN] Iterative solver did not converge in {config.max_iterations} iterations")
    return IterativeResult(IterativeStatus.NONCONVERGED, last, residual, config.max_iterations, trace)
