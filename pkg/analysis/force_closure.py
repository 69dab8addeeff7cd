"""
Force Closure
Baseline closure test over the primitive wrenches of discretized friction cones
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from grasp_model import GraspModel
from optimization import LinearModel, SolverSettings, dot, solve_lp
from spatial.friction_cone import polygon_directions

logger = logging.getLogger(__name__)


@dataclass
class ClosureVerdict:
    closure: bool
    rank: int
    wrench_dim: int
    primitives: int

    @property
    def status(self) -> str:
        return "closure" if self.closure else "no-closure"

    def to_dict(self) -> Dict[str, Any]:
        return {"status": self.status, "rank": self.rank, "wrench_dim": self.wrench_dim, "primitives": self.primitives}


def primitive_wrenches(grasp: GraspModel, edges: int = 8) -> np.ndarray:
    """
    Columns are the wrenches of unit-normal contact forces on the cone boundary

    Spatial contacts contribute n + mu e_s for `edges` evenly spaced tangent
    directions, planar contacts n +- mu t; a frictionless contact contributes
    its normal alone.
    """
    columns = []
    G = grasp.G
    for i in range(grasp.m):
        block = G[:, grasp.block(i)]
        mu = grasp.contacts[i].mu
        if mu == 0.0:
            columns.append(block[:, 0])
            continue
        if grasp.is_planar:
            for sign in (1.0, -1.0):
                columns.append(block @ np.array([1.0, sign * mu]))
        else:
            for e in polygon_directions(edges):
                columns.append(block @ np.array([1.0, mu * e[0], mu * e[1]]))
    if not columns:
        return np.zeros((grasp.wrench_dim, 0))
    return np.column_stack(columns)


def force_closure_check(
    grasp: GraspModel, edges: int = 8, solver: Optional[SolverSettings] = None, tol: float = 1e-9
) -> ClosureVerdict:
    """
    Closure iff the primitive wrenches span wrench space and some strictly
    positive combination of them sums to zero

    Args:
        grasp: planar or spatial grasp
        edges: friction edges per spatial contact
        tol: singular-value threshold for the rank test

    Returns:
        ClosureVerdict
    """
    W = primitive_wrenches(grasp, edges)
    n = W.shape[1]
    rank = int(np.linalg.matrix_rank(W, tol=tol)) if n else 0
    if rank < grasp.wrench_dim:
        logger.debug(f"{grasp.name!r}: primitive wrenches have rank {rank} < {grasp.wrench_dim}")
        return ClosureVerdict(False, rank, grasp.wrench_dim, n)

    # lambda >= 1 is the scale-free form of lambda > 0
    model = LinearModel("force_closure")
    lam = model.add_vars(n, "lambda", lb=1.0)
    for row in range(W.shape[0]):
        model.add_constraint(dot(W[row], lam) == 0.0, f"balance[{row}]")
    result = solve_lp(model, solver)
    verdict = ClosureVerdict(result.ok, rank, grasp.wrench_dim, n)
    logger.debug(f"{grasp.name!r}: force closure {verdict.status}")
    return verdict
