"""
Revised Simplex
Dense two-phase revised simplex for the linear programs behind every query
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from errors import InvalidModelError, ResourceLimitError
from optimization.linear_model import (
    LinearModel,
    ObjectiveSense,
    Sense,
    SolveResult,
    SolveStatus,
)
from optimization.settings import SolverSettings

logger = logging.getLogger(__name__)

LE, GE, EQ = 0, 1, 2
SENSE_CODE = {Sense.LE: LE, Sense.GE: GE, Sense.EQ: EQ}


@dataclass
class LPArrays:
    """Dense form: minimize c.x + constant s.t. A x (senses) b, lb <= x <= ub"""

    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    constant: float = 0.0
    maximize: bool = False


@dataclass
class LPOutcome:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0


def compile_model(model: LinearModel) -> LPArrays:
    """Flatten a LinearModel (ignoring indicators and SOS2 sets) into dense arrays"""
    n = model.num_vars
    rows = len(model.constraints)
    A = np.zeros((rows, n))
    b = np.zeros(rows)
    senses = np.zeros(rows, dtype=int)
    for i, con in enumerate(model.constraints):
        for k, v in con.terms.items():
            A[i, k] += v
        b[i] = con.rhs
        senses[i] = SENSE_CODE[con.sense]
    c = np.zeros(n)
    constant = 0.0
    maximize = model.objective_sense == ObjectiveSense.MAXIMIZE
    if model.objective is not None:
        for k, v in model.objective.terms.items():
            if not 0 <= k < n:
                raise InvalidModelError(f"objective references unknown variable index {k}")
            c[k] += v
        constant = model.objective.constant
        if maximize:
            c = -c
            constant = -constant
    lb = np.array([v.lb for v in model.variables], dtype=float)
    ub = np.array([v.ub for v in model.variables], dtype=float)
    return LPArrays(c, A, senses, b, lb, ub, constant, maximize)


def solve_lp(model: LinearModel, settings: Optional[SolverSettings] = None) -> SolveResult:
    """
    Solve a pure linear program

    Args:
        model: LinearModel without binaries, indicators or SOS2 sets
        settings: tolerances (default: from config)

    Returns:
        SolveResult with status, assignment, objective and row duals
    """
    if model.is_mip:
        raise InvalidModelError("solve_lp received binaries, indicators or SOS2 sets; use solve_mip")
    settings = settings or SolverSettings.from_config()
    arrays = compile_model(model)
    outcome = solve_arrays(arrays, settings)
    return _to_result(model, arrays, outcome)


def _to_result(model: LinearModel, arrays: LPArrays, outcome: LPOutcome) -> SolveResult:
    if outcome.status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
        return SolveResult(outcome.status, iterations=outcome.iterations)
    objective = None
    status = SolveStatus.FEASIBLE
    if model.objective is not None:
        status = SolveStatus.OPTIMAL
        objective = float(outcome.objective) + arrays.constant
        if arrays.maximize:
            objective = -objective
    duals = outcome.duals
    if duals is not None and arrays.maximize:
        duals = -duals
    return SolveResult(status, outcome.x, objective, duals, iterations=outcome.iterations)


def solve_arrays(arrays: LPArrays, settings: SolverSettings) -> LPOutcome:
    """Minimize arrays.c . x (constant excluded) with the two-phase method"""
    c, A, senses, b = arrays.c, arrays.A, arrays.senses, arrays.b
    lb, ub = arrays.lb, arrays.ub
    n = len(c)
    if A.shape[1] != n or len(b) != A.shape[0] or len(senses) != A.shape[0]:
        raise InvalidModelError(f"shape mismatch: A {A.shape}, b {len(b)}, c {n}")
    tol = settings.feasibility_tol

    # columns of the nonnegative standard form: x = shift + M y
    columns: List[Tuple[int, float]] = []
    shift = np.zeros(n)
    bound_rows: List[Tuple[int, float]] = []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if hi < lo - tol:
            return LPOutcome(SolveStatus.INFEASIBLE)
        if math.isfinite(lo):
            shift[j] = lo
            columns.append((j, 1.0))
            if math.isfinite(hi):
                bound_rows.append((len(columns) - 1, max(hi - lo, 0.0)))
        elif math.isfinite(hi):
            shift[j] = hi
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    n_std = len(columns)
    M = np.zeros((n, n_std))
    for col, (j, sign) in enumerate(columns):
        M[j, col] = sign

    base_rows = A.shape[0]
    A_y = A @ M
    b_y = b - A @ shift
    if bound_rows:
        U = np.zeros((len(bound_rows), n_std))
        for r, (col, _) in enumerate(bound_rows):
            U[r, col] = 1.0
        A_y = np.vstack([A_y, U])
        b_y = np.concatenate([b_y, [bound for _, bound in bound_rows]])
        senses = np.concatenate([senses, np.full(len(bound_rows), LE)])
    m = A_y.shape[0]

    slack_of_row = np.full(m, -1)
    slack_cols = []
    for i in range(m):
        if senses[i] == LE:
            slack_of_row[i] = n_std + len(slack_cols)
            slack_cols.append((i, 1.0))
        elif senses[i] == GE:
            slack_of_row[i] = n_std + len(slack_cols)
            slack_cols.append((i, -1.0))
    S = np.zeros((m, len(slack_cols)))
    for s, (i, sign) in enumerate(slack_cols):
        S[i, s] = sign
    T = np.hstack([A_y, S]) if m else np.zeros((0, n_std + len(slack_cols)))
    sigma = np.where(b_y < 0, -1.0, 1.0)
    T = T * sigma[:, None]
    rhs = b_y * sigma
    n_t = T.shape[1]
    cost = np.concatenate([c @ M, np.zeros(len(slack_cols))])

    # phase 1: slack columns with +1 start basic, other rows get artificials
    basis = np.zeros(m, dtype=int)
    artificial_rows = []
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0 and T[i, s] > 0:
            basis[i] = s
        else:
            artificial_rows.append(i)
    iterations = 0
    keep = np.ones(m, dtype=bool)
    if artificial_rows:
        n_art = len(artificial_rows)
        Art = np.zeros((m, n_art))
        for a, i in enumerate(artificial_rows):
            Art[i, a] = 1.0
            basis[i] = n_t + a
        A1 = np.hstack([T, Art])
        cost1 = np.concatenate([np.zeros(n_t), np.ones(n_art)])
        Binv = np.eye(m)
        x_B = rhs.copy()
        status, x_B, basis, Binv, iterations = _iterate(
            A1, rhs, cost1, basis, Binv, x_B, settings, iterations
        )
        infeasibility = float(sum(x_B[i] for i in range(m) if basis[i] >= n_t))
        if infeasibility > tol * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
            logger.debug(f"LP infeasible: phase-1 residual {infeasibility:.3g}")
            return LPOutcome(SolveStatus.INFEASIBLE, iterations=iterations)
        # drive remaining artificials out of the basis
        for r in range(m):
            if basis[r] < n_t:
                continue
            alpha = Binv[r] @ T
            alpha[basis[basis < n_t]] = 0.0
            j = int(np.argmax(np.abs(alpha))) if n_t else 0
            if n_t and abs(alpha[j]) > settings.pivot_tol:
                u = Binv @ A1[:, j]
                x_B, Binv = _pivot(x_B, Binv, u, r)
                basis[r] = j
            else:
                keep[r] = False
        if not keep.all():
            T = T[keep]
            rhs = rhs[keep]
            basis = basis[keep]
            logger.debug(f"LP dropped {int((~keep).sum())} redundant rows")
        m_kept = T.shape[0]
        if m_kept:
            Binv = np.linalg.inv(T[:, basis])
            x_B = Binv @ rhs
        else:
            Binv = np.zeros((0, 0))
            x_B = np.zeros(0)
    else:
        Binv = np.eye(m)
        x_B = rhs.copy()

    status, x_B, basis, Binv, iterations = _iterate(
        T, rhs, cost, basis, Binv, x_B, settings, iterations
    )
    if status == SolveStatus.UNBOUNDED:
        return LPOutcome(SolveStatus.UNBOUNDED, iterations=iterations)

    y = np.zeros(n_t)
    y[basis] = np.maximum(x_B, 0.0)
    x = shift + M @ y[:n_std]
    objective = float(arrays.c @ x)
    pi = cost[basis] @ Binv if len(basis) else np.zeros(0)
    full_pi = np.zeros(m)
    full_pi[np.flatnonzero(keep)] = pi
    duals = (full_pi * sigma)[:base_rows]
    return LPOutcome(SolveStatus.OPTIMAL, x, objective, duals, iterations)


def _pivot(x_B: np.ndarray, Binv: np.ndarray, u: np.ndarray, r: int):
    theta = x_B[r] / u[r]
    x_B = x_B - theta * u
    x_B[r] = theta
    pivot_row = Binv[r] / u[r]
    Binv = Binv - np.outer(u, pivot_row)
    Binv[r] = pivot_row
    return x_B, Binv


def _iterate(A, rhs, cost, basis, Binv, x_B, settings: SolverSettings, iterations: int):
    """Primal simplex loop with Dantzig pricing and a Bland fallback"""
    m = A.shape[0]
    degenerate_run = 0
    bland = False
    since_refactor = 0
    is_basic = np.zeros(A.shape[1], dtype=bool)
    is_basic[basis] = True
    while True:
        if iterations >= settings.iteration_limit:
            raise ResourceLimitError(
                f"simplex iteration limit {settings.iteration_limit} reached"
            )
        y = cost[basis] @ Binv if m else np.zeros(0)
        reduced = cost - y @ A if m else cost.copy()
        reduced[is_basic] = 0.0
        candidates = np.flatnonzero(reduced < -settings.optimality_tol)
        if candidates.size == 0:
            return SolveStatus.OPTIMAL, x_B, basis, Binv, iterations
        if bland:
            q = int(candidates[0])
        else:
            q = int(candidates[np.argmin(reduced[candidates])])
        u = Binv @ A[:, q] if m else np.zeros(0)
        eligible = np.flatnonzero(u > settings.pivot_tol)
        if eligible.size == 0:
            return SolveStatus.UNBOUNDED, x_B, basis, Binv, iterations
        ratios = np.maximum(x_B[eligible], 0.0) / u[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + 1e-12]
        if bland or ties.size == 1:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(u[ties])])
        if best <= settings.feasibility_tol * 1e-3:
            degenerate_run += 1
            if not bland and degenerate_run > settings.degeneracy_limit:
                logger.debug("simplex switching to Bland's rule after degenerate pivots")
                bland = True
        else:
            degenerate_run = 0
        x_B, Binv = _pivot(x_B, Binv, u, r)
        is_basic[basis[r]] = False
        basis[r] = q
        is_basic[q] = True
        iterations += 1
        since_refactor += 1
        if since_refactor >= settings.refactor_interval:
            since_refactor = 0
            try:
                Binv = np.linalg.inv(A[:, basis])
                x_B = Binv @ rhs
            except np.linalg.LinAlgError:
                logger.warning("[WARN] basis re-inversion failed, keeping updated inverse")
        x_B[(x_B < 0) & (x_B > -settings.feasibility_tol)] = 0.0
