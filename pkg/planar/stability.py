"""
Planar Stability
Per-state linear solves and the complete planar stability decision
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import InvalidInputError
from grasp_model import EquilibriumSolution, GraspModel
from optimization import LinearModel, SolverSettings, dot, solve_lp
from planar.contact_states import enumerate_detach_states, enumerate_slip_states
from planar.settings import PlanarSettings

logger = logging.getLogger(__name__)

ContactState = Tuple[Tuple[int, ...], Tuple[int, ...]]


@dataclass
class PlanarVerdict:
    stable: bool
    solution: Optional[EquilibriumSolution]
    states_tried: int
    detach_states: int
    slip_states: int

    @property
    def status(self) -> str:
        return "stable" if self.stable else "unstable"

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "status": self.status,
            "states_tried": self.states_tried,
            "detach_states": self.detach_states,
            "slip_states": self.slip_states,
        }
        if self.solution is not None:
            out["solution"] = self.solution.to_dict()
        return out


def _check_planar(grasp: GraspModel, w) -> np.ndarray:
    if not grasp.is_planar:
        raise InvalidInputError("planar stability needs a planar grasp")
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (3,):
        raise InvalidInputError(f"planar wrench must be (fx, fy, tz), got {w.shape[0]} components")
    return w


def _system(grasp: GraspModel, w: np.ndarray, state: ContactState, preloads: np.ndarray):
    """Square equality system A z = b over z = (c, r) and the state's inequalities G_in z >= h"""
    u, s = state
    m = grasp.m
    n = 2 * m + 3
    G = grasp.G
    k = grasp.stiffness
    mu = grasp.mu
    A = np.zeros((n, n))
    b = np.zeros(n)
    A[:3, : 2 * m] = G
    b[:3] = -w
    ineq: List[np.ndarray] = []
    rhs: List[float] = []
    for i in range(m):
        cn, ct = 2 * i, 2 * i + 1
        row_n, row_t = 3 + 2 * i, 4 + 2 * i
        a_n = G[:, cn]
        a_t = G[:, ct]
        if u[i] == 0:
            A[row_n, cn] = 1.0
            A[row_t, ct] = 1.0
            # separated: normal motion at or beyond the preload compression
            g = np.zeros(n)
            g[2 * m :] = a_n
            ineq.append(g)
            rhs.append(preloads[i] / k[i])
            continue
        A[row_n, cn] = 1.0
        A[row_n, 2 * m :] = k[i] * a_n
        b[row_n] = preloads[i]
        g = np.zeros(n)
        g[cn] = 1.0
        ineq.append(g)
        rhs.append(0.0)
        if s[i] == 0:
            A[row_t, 2 * m :] = a_t
            for sign in (1.0, -1.0):
                g = np.zeros(n)
                g[cn] = mu[i]
                g[ct] = -sign
                ineq.append(g)
                rhs.append(0.0)
        else:
            # slipping with d_t of sign s: c_t = -s mu c_n
            A[row_t, ct] = 1.0
            A[row_t, cn] = s[i] * mu[i]
            g = np.zeros(n)
            g[2 * m :] = s[i] * a_t
            ineq.append(g)
            rhs.append(0.0)
    G_in = np.array(ineq).reshape(-1, n)
    return A, b, G_in, np.array(rhs)


def _to_solution(grasp: GraspModel, w: np.ndarray, z: np.ndarray, state: ContactState) -> EquilibriumSolution:
    m = grasp.m
    c = z[: 2 * m]
    r = z[2 * m :]
    return EquilibriumSolution(c=c, r=r, w_net=grasp.G @ c + w, state=(tuple(state[0]), tuple(state[1])))


def solve_state(
    grasp: GraspModel,
    w,
    state: ContactState,
    preloads: Optional[Sequence[float]] = None,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> Optional[EquilibriumSolution]:
    """
    Contact forces and object motion for one (detach, slip) state, or None

    Args:
        grasp: planar grasp
        w: applied wrench (fx, fy, tz)
        state: (u, s) with u_i in {0, 1} and s_i in {-1, 0, 1}
        preloads: per-contact preload p_i (default: the grasp's)
        settings: condition limit and validation tolerance

    Returns:
        EquilibriumSolution carrying the state, or None when the state admits no equilibrium
    """
    settings = settings or PlanarSettings.from_config()
    w = _check_planar(grasp, w)
    u, s = (tuple(int(v) for v in part) for part in state)
    if len(u) != grasp.m or len(s) != grasp.m:
        raise InvalidInputError(f"contact state must have {grasp.m} entries per vector")
    p = grasp.preloads if preloads is None else np.asarray(preloads, dtype=float)
    A, b, G_in, h = _system(grasp, w, (u, s), p)
    tol = settings.validation_tol

    cond = np.linalg.cond(A) if A.size else 1.0
    if np.isfinite(cond) and cond < settings.condition_limit:
        z = np.linalg.solve(A, b)
        scale = max(1.0, float(np.max(np.abs(z), initial=0.0)))
        if G_in.size and np.min(G_in @ z - h) < -tol * scale:
            return None
        return _to_solution(grasp, w, z, (u, s))

    # singular system: the equalities leave freedom, search it with an LP
    model = LinearModel("planar_state")
    z_vars = model.add_vars(A.shape[1], "z", lb=-np.inf, ub=np.inf)
    for row, rhs in zip(A, b):
        if np.any(row != 0.0):
            model.add_constraint(dot(row, z_vars) == float(rhs))
        elif abs(rhs) > tol:
            return None
    for row, rhs in zip(G_in, h):
        model.add_constraint(dot(row, z_vars) >= float(rhs))
    result = solve_lp(model, solver)
    if not result.ok:
        return None
    return _to_solution(grasp, w, result.values(z_vars), (u, s))


def contact_states(
    grasp: GraspModel,
    preloads: Optional[Sequence[float]] = None,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> Tuple[List[ContactState], int, int]:
    """Product of detach and slip states, detachment-major, slip signs cleared on detached contacts"""
    p = grasp.preloads if preloads is None else np.asarray(preloads, dtype=float)
    detach = enumerate_detach_states(grasp, p, grasp.stiffness, settings, solver)
    slip = enumerate_slip_states(grasp, settings, solver)
    seen = set()
    states: List[ContactState] = []
    for d in detach:
        for sv in slip.states:
            key = (d.u, tuple(sv[i] if d.u[i] else 0 for i in range(grasp.m)))
            if key not in seen:
                seen.add(key)
                states.append(key)
    return states, len(detach), len(slip.states)


def planar_stability(
    grasp: GraspModel,
    w,
    preloads: Optional[Sequence[float]] = None,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> PlanarVerdict:
    """
    Decide stability by trying every state of detach x slip in order

    Returns the first state (in enumeration order) that admits an equilibrium;
    with settings.workers > 1 states are solved concurrently and the lowest
    index success is kept.
    """
    settings = settings or PlanarSettings.from_config()
    w = _check_planar(grasp, w)
    states, n_detach, n_slip = contact_states(grasp, preloads, settings, solver)

    def attempt(state: ContactState) -> Optional[EquilibriumSolution]:
        return solve_state(grasp, w, state, preloads, settings, solver)

    tried = 0
    found: Optional[EquilibriumSolution] = None
    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            for solution in pool.map(attempt, states):
                tried += 1
                if solution is not None:
                    found = solution
                    break
            pool.shutdown(wait=True, cancel_futures=True)
    else:
        for state in states:
            tried += 1
            found = attempt(state)
            if found is not None:
                break

    if found is not None:
        logger.info(f"[OK] Planar grasp {grasp.name!r} stable under w={w.tolist()} (state {found.state})")
    else:
        logger.info(f"Planar grasp {grasp.name!r} unstable under w={w.tolist()} after {tried} states")
    return PlanarVerdict(found is not None, found, tried, n_detach, n_slip)
