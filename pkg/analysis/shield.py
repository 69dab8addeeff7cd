"""
Shield
Minimal modification of a proposed setpoint change so the predicted grasp
keeps its contacts, stays inside the friction cones and holds its pose
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from analysis.compliance import LinearizedGrasp, ShieldState, orientation_angles, orientation_jacobian
from analysis.force_closure import force_closure_check
from config_loader import Config, config as default_config
from errors import InvalidInputError
from grasp_model import WORLD, GraspModel, ancestors
from optimization import LinearModel, LinExpr, SolverSettings, dot, lin_sum, solve_lp
from spatial.friction_cone import cone_facets

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9


class ShieldStatus(str, Enum):
    UNCHANGED = "unchanged"
    PROJECTED = "projected"
    INFEASIBLE = "shield-infeasible"


@dataclass(frozen=True)
class ShieldSettings:
    step_cap: float = 0.05
    cone_edges: int = 8
    min_shielded: int = 2
    workers: int = 1

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None, **overrides) -> "ShieldSettings":
        cfg = cfg or default_config
        base = cls()
        values = {
            "step_cap": float(cfg.get("shield", "step_cap", default=base.step_cap)),
            "cone_edges": int(cfg.get("shield", "cone_edges", default=base.cone_edges)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class ShieldConstraints:
    """Limits on the predicted state; None disables a family"""

    min_normal_force: float = 0.0
    pose_lower: Optional[Sequence[float]] = None
    pose_upper: Optional[Sequence[float]] = None
    max_tilt: Optional[float] = None

    def __post_init__(self):
        if self.pose_lower is not None and self.pose_upper is not None:
            if np.any(np.asarray(self.pose_lower, dtype=float) > np.asarray(self.pose_upper, dtype=float)):
                raise InvalidInputError("pose box lower bound exceeds upper bound")
        if self.max_tilt is not None and self.max_tilt < 0:
            raise InvalidInputError("max_tilt must be nonnegative")


@dataclass
class ShieldResult:
    action: Optional[np.ndarray]
    deviation: float
    shielded: Tuple[int, ...]
    status: ShieldStatus
    subsets_tried: int = 0
    candidates: List[Tuple[Tuple[int, ...], float]] = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return self.status != ShieldStatus.INFEASIBLE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "action": None if self.action is None else [float(v) for v in self.action],
            "deviation": self.deviation,
            "shielded": list(self.shielded),
            "subsets_tried": self.subsets_tried,
        }


def _contact_rows(grasp: GraspModel, i: int, cone_edges: int) -> List[np.ndarray]:
    """Rows g with g . c_i <= 0 describing the (inscribed) friction cone of contact i"""
    mu = grasp.contacts[i].mu
    rows: List[np.ndarray] = []
    if mu == 0.0:
        return rows
    if grasp.is_planar:
        for sign in (1.0, -1.0):
            rows.append(np.array([-mu, sign]))
    else:
        normals, depth = cone_facets(cone_edges)
        for n in normals:
            rows.append(np.array([-depth * mu, n[0], n[1]]))
    return rows


def pinned_joints(grasp: GraspModel, shielded: Sequence[int]) -> List[int]:
    """Joints on the chains of contacts left unshielded"""
    keep = set(shielded)
    pinned = set()
    for i, contact in enumerate(grasp.contacts):
        if i not in keep and contact.link != WORLD:
            pinned.update(ancestors(grasp.hand, contact.link))
    return sorted(pinned)


def constraint_violation(
    grasp: GraspModel,
    lin: LinearizedGrasp,
    state: ShieldState,
    action,
    shielded: Sequence[int],
    constraints: ShieldConstraints,
    settings: ShieldSettings,
) -> float:
    """Largest violation of the shield constraints by the exact predicted state"""
    a = np.asarray(action, dtype=float)
    worst = max(0.0, float(np.max(np.abs(a), initial=0.0)) - settings.step_cap)
    c = state.c + lin.E @ a
    u = state.u + lin.F @ a
    dim = grasp.contact_dim
    for i in shielded:
        ci = c[dim * i : dim * (i + 1)]
        worst = max(worst, constraints.min_normal_force - ci[0])
        rows = _contact_rows(grasp, i, settings.cone_edges)
        for g in rows:
            worst = max(worst, float(g @ ci))
    if constraints.pose_lower is not None:
        worst = max(worst, float(np.max(np.asarray(constraints.pose_lower, dtype=float) - u)))
    if constraints.pose_upper is not None:
        worst = max(worst, float(np.max(u - np.asarray(constraints.pose_upper, dtype=float))))
    if constraints.max_tilt is not None and not grasp.is_planar:
        worst = max(worst, float(np.max(np.abs(orientation_angles(u)))) - constraints.max_tilt)
    return worst


def _project_subset(
    grasp: GraspModel,
    lin: LinearizedGrasp,
    state: ShieldState,
    action: np.ndarray,
    shielded: Tuple[int, ...],
    constraints: ShieldConstraints,
    settings: ShieldSettings,
    solver: Optional[SolverSettings],
    pivot_pose: np.ndarray,
) -> Optional[np.ndarray]:
    l = lin.J.shape[1]
    dim = grasp.contact_dim
    model = LinearModel(f"shield{list(shielded)}")
    a_new = model.add_vars(l, "a", lb=-settings.step_cap, ub=settings.step_cap)
    plus = model.add_vars(l, "dev+", lb=0.0)
    minus = model.add_vars(l, "dev-", lb=0.0)
    for j in range(l):
        model.add_constraint(a_new[j] - plus[j] + minus[j] == float(action[j]), f"deviation[{j}]")
    for j in pinned_joints(grasp, shielded):
        model.add_constraint(a_new[j] == float(action[j]), f"pinned[{j}]")

    def predicted(matrix: np.ndarray, base: np.ndarray, row: int) -> LinExpr:
        return dot(matrix[row], a_new) + float(base[row])

    for i in shielded:
        c_rows = [predicted(lin.E, state.c, dim * i + a) for a in range(dim)]
        model.add_constraint(c_rows[0] >= constraints.min_normal_force, f"normal[{i}]")
        rows = _contact_rows(grasp, i, settings.cone_edges)
        for s, g in enumerate(rows):
            expr = LinExpr()
            for a in range(dim):
                expr.add_inplace(c_rows[a], float(g[a]))
            model.add_constraint(expr <= 0.0, f"friction[{i}][{s}]")

    pose = [predicted(lin.F, state.u, k) for k in range(lin.pose_dim)]
    for bound, sense in ((constraints.pose_lower, 1.0), (constraints.pose_upper, -1.0)):
        if bound is None:
            continue
        for k, value in enumerate(np.asarray(bound, dtype=float)):
            if not math.isfinite(value):
                continue
            if sense > 0:
                model.add_constraint(pose[k] >= float(value), f"pose_lo[{k}]")
            else:
                model.add_constraint(pose[k] <= float(value), f"pose_hi[{k}]")

    if constraints.max_tilt is not None and not grasp.is_planar:
        # angles(u') ~ angles(p) + D (u' - p) around the pivot pose p
        base = orientation_angles(pivot_pose)
        D = orientation_jacobian(pivot_pose)
        for r in range(2):
            expr = LinExpr(constant=float(base[r] - D[r] @ pivot_pose))
            for k in range(6):
                if D[r, k] != 0.0:
                    expr.add_inplace(pose[k], float(D[r, k]))
            model.add_constraint(expr <= constraints.max_tilt, f"tilt_hi[{r}]")
            model.add_constraint(expr >= -constraints.max_tilt, f"tilt_lo[{r}]")

    model.minimize(lin_sum(list(plus) + list(minus)))
    result = solve_lp(model, solver)
    if not result.ok:
        return None
    return result.values(a_new)


def _solve_subset(
    grasp: GraspModel,
    lin: LinearizedGrasp,
    state: ShieldState,
    action: np.ndarray,
    shielded: Tuple[int, ...],
    constraints: ShieldConstraints,
    settings: ShieldSettings,
    solver: Optional[SolverSettings],
) -> Optional[np.ndarray]:
    found = _project_subset(grasp, lin, state, action, shielded, constraints, settings, solver, state.u)
    if found is None or constraints.max_tilt is None or grasp.is_planar:
        return found
    # one Newton correction: re-linearize the tilt around the predicted pose
    corrected = _project_subset(
        grasp, lin, state, action, shielded, constraints, settings, solver, state.u + lin.F @ found
    )
    return found if corrected is None else corrected


def shielded_subsets(grasp: GraspModel, settings: ShieldSettings, edges: Optional[int] = None) -> List[Tuple[int, ...]]:
    """Contact subsets of admissible size whose contacts alone have force closure, largest first"""
    out: List[Tuple[int, ...]] = []
    for size in range(grasp.m, settings.min_shielded - 1, -1):
        for subset in itertools.combinations(range(grasp.m), size):
            if force_closure_check(grasp.subset(subset), edges or settings.cone_edges).closure:
                out.append(subset)
    return out


def shield_project(
    grasp: GraspModel,
    lin: LinearizedGrasp,
    state: ShieldState,
    action,
    constraints: Optional[ShieldConstraints] = None,
    settings: Optional[ShieldSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> ShieldResult:
    """
    Project a proposed setpoint change onto the safe set

    Args:
        grasp: grasp the linearization belongs to
        lin: linearization at the current state
        state: current contact forces and object pose
        action: proposed setpoint change, one entry per joint
        constraints: limits on the predicted state
        settings: step cap, cone edges, minimum shielded contacts, workers

    Returns:
        ShieldResult; the action unchanged when it is already safe for all contacts,
        otherwise the L1-closest safe action over every admissible contact subset
    """
    constraints = constraints or ShieldConstraints()
    settings = settings or ShieldSettings.from_config()
    action = np.asarray(action, dtype=float)
    if action.shape != (lin.J.shape[1],):
        raise InvalidInputError(f"action must have {lin.J.shape[1]} components, got {action.shape}")

    everyone = tuple(range(grasp.m))
    if grasp.m >= settings.min_shielded:
        if constraint_violation(grasp, lin, state, action, everyone, constraints, settings) <= FEAS_TOL:
            return ShieldResult(action.copy(), 0.0, everyone, ShieldStatus.UNCHANGED, 1)

    subsets = shielded_subsets(grasp, settings)

    def attempt(subset: Tuple[int, ...]) -> Optional[np.ndarray]:
        return _solve_subset(grasp, lin, state, action, subset, constraints, settings, solver)

    if settings.workers > 1 and len(subsets) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            outcomes = list(pool.map(attempt, subsets))
    else:
        outcomes = [attempt(s) for s in subsets]

    best: Optional[Tuple[float, Tuple[int, ...], np.ndarray]] = None
    candidates: List[Tuple[Tuple[int, ...], float]] = []
    for subset, found in zip(subsets, outcomes):
        if found is None:
            continue
        deviation = float(np.abs(found - action).sum())
        candidates.append((subset, deviation))
        if best is None or deviation < best[0] - 1e-12:
            best = (deviation, subset, found)

    if best is None:
        logger.warning(f"[WARN] Shield found no safe action for {grasp.name!r} over {len(subsets)} subsets")
        return ShieldResult(None, math.inf, (), ShieldStatus.INFEASIBLE, len(subsets), candidates)
    deviation, subset, found = best
    status = ShieldStatus.UNCHANGED if deviation <= FEAS_TOL else ShieldStatus.PROJECTED
    if status == ShieldStatus.UNCHANGED:
        found = action.copy()
    logger.debug(f"Shield kept contacts {subset} with deviation {deviation:.3g}")
    return ShieldResult(found, deviation, subset, status, len(subsets), candidates)
