"""
Queries
Stability checks, maximum resistible disturbance, actuator command
optimization, resistible-force maps and preload sweeps
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config_loader import Config, config as default_config
from errors import GraspStabError, InvalidInputError
from grasp_model import EquilibriumSolution, GraspModel
from optimization import LinearModel, SolverSettings
from planar import PlanarSettings, planar_stability
from spatial import IterativeConfig, IterativeStatus, RelaxationSettings, iterative_ep, solve_with_refinement

logger = logging.getLogger(__name__)

SOLVERS = ("relaxation", "iterative")

FORCE_PLANES = {
    "xy": (0, 1),
    "xz": (0, 2),
    "yz": (1, 2),
}
TORQUE_PLANES = {
    "txy": (3, 4),
    "txz": (3, 5),
    "tyz": (4, 5),
}


class Verdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    NONCONVERGED = "nonconverged"


class MagnitudeStatus(str, Enum):
    OK = "ok"
    CAPPED = "capped"
    INFEASIBLE = "infeasible"
    ERROR = "error"


@dataclass(frozen=True)
class QuerySettings:
    cap: float = 1e3
    search_tol: float = 1e-2
    map_step_deg: float = 1.0
    workers: int = 0

    def __post_init__(self):
        if self.cap <= 0 or self.search_tol <= 0 or self.map_step_deg <= 0:
            raise InvalidInputError("query cap, search tolerance and map step must be positive")

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None, **overrides) -> "QuerySettings":
        cfg = cfg or default_config
        base = cls()
        values = {
            "cap": float(cfg.get("queries", "cap", default=base.cap)),
            "search_tol": float(cfg.get("queries", "search_tol", default=base.search_tol)),
            "map_step_deg": float(cfg.get("queries", "map_step_deg", default=base.map_step_deg)),
            "workers": int(cfg.get("queries", "workers", default=base.workers)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def worker_count(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


@dataclass
class SolverOptions:
    """Which solver answers a query and how it is tuned"""

    solver: str = "relaxation"
    eta: Optional[float] = None
    relaxation: Optional[RelaxationSettings] = None
    iterative: Optional[IterativeConfig] = None
    planar: Optional[PlanarSettings] = None
    lp: Optional[SolverSettings] = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise InvalidInputError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


@dataclass
class StabilityVerdict:
    verdict: Verdict
    solution: Optional[EquilibriumSolution] = None
    detail: Optional[Dict[str, Any]] = None

    @property
    def stable(self) -> bool:
        return self.verdict == Verdict.STABLE

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"status": self.verdict.value}
        if self.solution is not None:
            out["solution"] = self.solution.to_dict()
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class DisturbanceResult:
    magnitude: float
    status: MagnitudeStatus
    solution: Optional[EquilibriumSolution] = None
    message: str = ""

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"status": self.status.value, "magnitude": self.magnitude}
        if self.message:
            out["message"] = self.message
        if self.solution is not None:
            out["solution"] = self.solution.to_dict()
        return out


def _wrench(grasp: GraspModel, values, label: str = "wrench") -> np.ndarray:
    w = np.asarray(values, dtype=float).reshape(-1)
    if w.shape != (grasp.wrench_dim,):
        raise InvalidInputError(f"{label} must have {grasp.wrench_dim} components, got {w.shape[0]}")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError(f"{label} has non-finite components")
    return w


def _direction(grasp: GraspModel, d) -> np.ndarray:
    d = _wrench(grasp, d, "direction")
    norm = float(np.linalg.norm(d))
    if norm == 0.0:
        raise InvalidInputError("disturbance direction must be nonzero")
    return d / norm


def _commanded(grasp: GraspModel, f_c) -> GraspModel:
    if f_c is None:
        return grasp
    values = np.asarray(f_c, dtype=float).reshape(-1)
    if values.shape != (grasp.actuator_count,):
        raise InvalidInputError(f"expected {grasp.actuator_count} commanded actuator forces, got {values.shape[0]}")
    return grasp.with_commanded(values)


def stability_check(
    grasp: GraspModel,
    w,
    f_c: Optional[Sequence[float]] = None,
    options: Optional[SolverOptions] = None,
    diagnostics: Optional[str] = None,
) -> StabilityVerdict:
    """
    Is there an equilibrium of the grasp under the applied wrench?

    Planar grasps are decided exactly by contact-state enumeration; spatial
    grasps use the relaxation solver (feasibility) or the iterative solver.
    """
    options = options or SolverOptions()
    w = _wrench(grasp, w)
    grasp = _commanded(grasp, f_c)

    if grasp.is_planar:
        planar = planar_stability(grasp, w, settings=options.planar, solver=options.lp)
        return StabilityVerdict(Verdict.STABLE if planar.stable else Verdict.UNSTABLE, planar.solution,
                                {"states_tried": planar.states_tried})

    if options.solver == "iterative":
        result = iterative_ep(grasp, None, w, options.iterative, options.lp)
        verdict = {
            IterativeStatus.STABLE: Verdict.STABLE,
            IterativeStatus.UNSTABLE: Verdict.UNSTABLE,
            IterativeStatus.NONCONVERGED: Verdict.NONCONVERGED,
        }[result.status]
        return StabilityVerdict(verdict, result.solution, {"iterations": result.iterations, "residual": result.residual})

    relaxed = solve_with_refinement(
        grasp, w, None, eta=options.eta, settings=options.relaxation, solver=options.lp, diagnostics=diagnostics
    )
    verdict = Verdict.STABLE if relaxed.feasible else Verdict.UNSTABLE
    return StabilityVerdict(verdict, relaxed.solution, {"rounds": len(relaxed.trace.rounds)})


def _binary_search(check: Callable[[float], StabilityVerdict], settings: QuerySettings) -> DisturbanceResult:
    base = check(0.0)
    if base.verdict == Verdict.NONCONVERGED:
        return DisturbanceResult(0.0, MagnitudeStatus.ERROR, None, "solver did not converge at zero disturbance")
    if not base.stable:
        return DisturbanceResult(0.0, MagnitudeStatus.INFEASIBLE, None, "no equilibrium without disturbance")
    top = check(settings.cap)
    if top.stable:
        return DisturbanceResult(settings.cap, MagnitudeStatus.CAPPED, top.solution)
    lo, hi, best = 0.0, settings.cap, base
    while hi - lo > settings.search_tol:
        mid = 0.5 * (lo + hi)
        trial = check(mid)
        if trial.stable:
            lo, best = mid, trial
        else:
            hi = mid
    return DisturbanceResult(lo, MagnitudeStatus.OK, best.solution)


def max_disturbance(
    grasp: GraspModel,
    direction,
    f_c: Optional[Sequence[float]] = None,
    options: Optional[SolverOptions] = None,
    settings: Optional[QuerySettings] = None,
) -> DisturbanceResult:
    """
    Largest s such that the grasp resists w = s d

    The relaxation solver maximizes s directly; the iterative and planar
    solvers bisect on stability_check. s reaching the cap is reported as capped.

    Args:
        grasp: planar or spatial grasp
        direction: disturbance direction (normalized here)
        f_c: commanded actuator forces (default: the grasp's)
        options: solver choice and tuning
        settings: cap and binary search tolerance

    Returns:
        DisturbanceResult with status ok, capped or infeasible
    """
    options = options or SolverOptions()
    settings = settings or QuerySettings.from_config()
    d = _direction(grasp, direction)
    grasp = _commanded(grasp, f_c)

    if grasp.is_planar or options.solver == "iterative":
        return _binary_search(lambda s: stability_check(grasp, s * d, None, options), settings)

    def prepare(model: LinearModel) -> Dict[str, Any]:
        return {"s": model.add_var("s", lb=0.0, ub=settings.cap)}

    def wrench(handles: Dict[str, Any]) -> List[Any]:
        return [float(d[k]) * handles["s"] for k in range(6)]

    def finalize(problem, handles: Dict[str, Any]) -> None:
        problem.model.maximize(handles["s"])

    relaxed = solve_with_refinement(
        grasp, wrench, None, prepare=prepare, finalize=finalize, eta=options.eta,
        settings=options.relaxation, solver=options.lp,
    )
    if not relaxed.feasible:
        return DisturbanceResult(0.0, MagnitudeStatus.INFEASIBLE, None, "no equilibrium without disturbance")
    s = relaxed.value(relaxed.handles["s"])
    solution = relaxed.solution
    if solution is not None:
        solution.magnitude = s
    if s >= settings.cap * (1.0 - 1e-9):
        return DisturbanceResult(settings.cap, MagnitudeStatus.CAPPED, solution)
    return DisturbanceResult(s, MagnitudeStatus.OK, solution)


@dataclass
class ActuatorOptimum:
    feasible: bool
    f_c: Optional[np.ndarray]
    objective: Optional[float]
    solution: Optional[EquilibriumSolution] = None

    @property
    def status(self) -> str:
        return "feasible" if self.feasible else "infeasible"

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"status": self.status, "objective": self.objective}
        if self.f_c is not None:
            out["f_c"] = [float(v) for v in self.f_c]
        if self.solution is not None:
            out["solution"] = self.solution.to_dict()
        return out


def optimize_actuators(
    grasp: GraspModel,
    w,
    options: Optional[SolverOptions] = None,
    torque_caps: Optional[Sequence[float]] = None,
    max_normal_force: Optional[float] = None,
) -> ActuatorOptimum:
    """
    Commanded actuator forces minimizing the largest single command

    min t  s.t.  0 <= f_c_j <= t (and <= torque_caps[j]),  c_n <= max_normal_force,
    with the grasp in equilibrium under w. Relaxation solver only.
    """
    options = options or SolverOptions()
    if grasp.is_planar:
        raise InvalidInputError("actuator optimization needs a spatial grasp")
    w = _wrench(grasp, w)
    a = grasp.actuator_count
    caps = [math.inf] * a if torque_caps is None else [float(v) for v in torque_caps]
    if len(caps) != a:
        raise InvalidInputError(f"expected {a} torque caps, got {len(caps)}")

    def prepare(model: LinearModel) -> Dict[str, Any]:
        fc = [model.add_var(f"fc[{j}]", lb=0.0, ub=caps[j]) for j in range(a)]
        return {"fc": fc, "t": model.add_var("t", lb=0.0)}

    def finalize(problem, handles: Dict[str, Any]) -> None:
        model = problem.model
        for j, var in enumerate(handles["fc"]):
            model.add_constraint(var - handles["t"] <= 0.0, f"epigraph[{j}]")
        if max_normal_force is not None:
            for i in range(grasp.m):
                model.add_constraint(problem.normal_force(i) <= float(max_normal_force), f"max_normal[{i}]")
        model.minimize(handles["t"])

    relaxed = solve_with_refinement(
        grasp, w, lambda handles: handles["fc"], prepare=prepare, finalize=finalize,
        eta=options.eta, settings=options.relaxation, solver=options.lp,
    )
    if not relaxed.feasible:
        logger.info(f"No actuator command holds {grasp.name!r} under w={w.tolist()}")
        return ActuatorOptimum(False, None, None)
    fc = relaxed.result.values(relaxed.handles["fc"]) if relaxed.result is not None else np.zeros(a)
    return ActuatorOptimum(True, fc, relaxed.value(relaxed.handles["t"]), relaxed.solution)


@dataclass
class MapRow:
    angle_deg: float
    magnitude: float
    status: MagnitudeStatus
    message: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"angle_deg": self.angle_deg, "magnitude": self.magnitude, "status": self.status.value}


def plane_basis(grasp: GraspModel, name: str) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal wrench directions spanning a named plane ("xy", "xz", "yz", "txy", ...)"""
    planes = {"xy": (0, 1)} if grasp.is_planar else {**FORCE_PLANES, **TORQUE_PLANES}
    if name not in planes:
        raise InvalidInputError(f"unknown plane {name!r}; choose from {sorted(planes)}")
    a, b = planes[name]
    u = np.zeros(grasp.wrench_dim)
    v = np.zeros(grasp.wrench_dim)
    u[a] = 1.0
    v[b] = 1.0
    return u, v


def check_plane(grasp: GraspModel, u, v, allow_mixed: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Validate an orthonormal plane; each vector must be pure force or pure torque unless allow_mixed"""
    u = _wrench(grasp, u, "plane vector")
    v = _wrench(grasp, v, "plane vector")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9 or abs(np.linalg.norm(v) - 1.0) > 1e-9 or abs(u @ v) > 1e-9:
        raise InvalidInputError("plane vectors must be orthonormal")
    if not allow_mixed:
        split = 2 if grasp.is_planar else 3
        for vec in (u, v):
            if np.any(vec[:split] != 0.0) and np.any(vec[split:] != 0.0):
                raise InvalidInputError("plane vectors mix force and torque; pass allow_mixed to accept")
    return u, v


def _run_rows(jobs: Sequence[Tuple[float, Callable[[], DisturbanceResult]]], workers: int) -> List[MapRow]:
    def run(job: Tuple[float, Callable[[], DisturbanceResult]]) -> MapRow:
        key, fn = job
        try:
            result = fn()
            return MapRow(key, result.magnitude, result.status, result.message)
        except GraspStabError as e:
            logger.error(f"[ERROR] Row {key:g} failed: {e}")
            return MapRow(key, math.nan, MagnitudeStatus.ERROR, str(e))

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def force_map(
    grasp: GraspModel,
    plane: Tuple[Sequence[float], Sequence[float]],
    f_c: Optional[Sequence[float]] = None,
    options: Optional[SolverOptions] = None,
    settings: Optional[QuerySettings] = None,
    step_deg: Optional[float] = None,
    allow_mixed: bool = False,
) -> List[MapRow]:
    """
    max_disturbance along cos(theta) u + sin(theta) v for theta = 0, step, ..., 360 - step

    Rows come back ordered by angle; a failing row is marked error and the sweep continues.
    """
    options = options or SolverOptions()
    settings = settings or QuerySettings.from_config()
    step = settings.map_step_deg if step_deg is None else float(step_deg)
    if not step > 0:
        raise InvalidInputError(f"map step must be positive, got {step}")
    count = int(round(360.0 / step))
    if count == 0 or abs(count * step - 360.0) > 1e-9:
        raise InvalidInputError(f"map step {step} must divide 360 degrees")
    u, v = check_plane(grasp, plane[0], plane[1], allow_mixed)
    grasp = _commanded(grasp, f_c)

    def job(angle: float) -> Callable[[], DisturbanceResult]:
        theta = math.radians(angle)
        d = math.cos(theta) * u + math.sin(theta) * v
        return lambda: max_disturbance(grasp, d, None, options, settings)

    angles = [k * step for k in range(count)]
    rows = _run_rows([(a, job(a)) for a in angles], settings.worker_count)
    logger.info(f"[OK] Force map of {grasp.name!r}: {count} rows")
    return rows


@dataclass
class SweepRow:
    value: float
    magnitude: float
    status: MagnitudeStatus

    def to_dict(self) -> Dict[str, Any]:
        return {"torque": self.value, "magnitude": self.magnitude, "status": self.status.value}


def preload_sweep(
    grasp: GraspModel,
    actuator: int,
    values: Sequence[float],
    direction,
    f_c: Optional[Sequence[float]] = None,
    options: Optional[SolverOptions] = None,
    settings: Optional[QuerySettings] = None,
) -> List[SweepRow]:
    """max_disturbance along direction as one actuator's command runs over values"""
    settings = settings or QuerySettings.from_config()
    if not 0 <= actuator < grasp.actuator_count:
        raise InvalidInputError(f"actuator index {actuator} out of range (0..{grasp.actuator_count - 1})")
    base = np.array(grasp.commanded if f_c is None else f_c, dtype=float)
    if base.shape != (grasp.actuator_count,):
        raise InvalidInputError(f"expected {grasp.actuator_count} commanded actuator forces")

    def job(value: float) -> Callable[[], DisturbanceResult]:
        fc = base.copy()
        fc[actuator] = value
        return lambda: max_disturbance(grasp, direction, fc, options, settings)

    rows = _run_rows([(float(v), job(float(v))) for v in values], settings.worker_count)
    return [SweepRow(r.angle_deg, r.magnitude, r.status) for r in rows]


def analytic_pullout_estimate(arm: float, mu: float, torque: float, fingers: int = 2) -> float:
    """Friction-limited pull-out force: each finger presses torque / arm and resists mu times that"""
    if arm <= 0:
        raise InvalidInputError("moment arm must be positive")
    return fingers * mu * torque / arm
