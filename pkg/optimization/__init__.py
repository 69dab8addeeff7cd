"""
Optimization Package
Linear models, revised simplex and branch and bound with indicators and SOS2 sets
"""

from typing import Optional

from .linear_model import (
    Constraint,
    IndicatorConstraint,
    LinearModel,
    LinExpr,
    ObjectiveSense,
    Sense,
    Sos2Set,
    SolveResult,
    SolveStatus,
    Variable,
    as_expr,
    dot,
    lin_sum,
)
from .settings import SolverSettings
from .simplex import solve_lp
from .branch_and_bound import solve_mip
from .lp_format import format_lp, write_lp


def solve(model: LinearModel, settings: Optional[SolverSettings] = None) -> SolveResult:
    """Dispatch to solve_lp or solve_mip depending on the model"""
    if model.is_mip:
        return solve_mip(model, settings)
    return solve_lp(model, settings)


__all__ = [
    "Constraint",
    "IndicatorConstraint",
    "LinearModel",
    "LinExpr",
    "ObjectiveSense",
    "Sense",
    "Sos2Set",
    "SolveResult",
    "SolveStatus",
    "Variable",
    "as_expr",
    "dot",
    "lin_sum",
    "SolverSettings",
    "solve",
    "solve_lp",
    "solve_mip",
    "format_lp",
    "write_lp",
]
