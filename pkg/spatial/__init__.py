"""
Spatial Package
Mixed-integer grasp model, iterative net-wrench solver and the refined friction relaxation
"""

from .constraints import SpatialProblem, SpatialSettings, assemble_core_constraints
from .friction_cone import add_polygonal_cone, cone_facets, polygon_directions
from .iterative import (
    IterativeConfig,
    IterativeResult,
    IterativeStatus,
    StepResult,
    iterative_ep,
    movement_constrained_ep,
)
from .relaxation import (
    ContactFriction,
    FrictionConeApprox,
    RefinementRound,
    RefinementTrace,
    RelaxationResult,
    RelaxationSettings,
    active_sectors,
    apply_normal_uncertainty,
    assemble_friction_constraints,
    edge_length,
    initial_cone,
    solve_relaxation,
    solve_with_refinement,
    uniform_cone,
)

__all__ = [
    "SpatialProblem",
    "SpatialSettings",
    "assemble_core_constraints",
    "add_polygonal_cone",
    "cone_facets",
    "polygon_directions",
    "IterativeConfig",
    "IterativeResult",
    "IterativeStatus",
    "StepResult",
    "iterative_ep",
    "movement_constrained_ep",
    "ContactFriction",
    "FrictionConeApprox",
    "RefinementRound",
    "RefinementTrace",
    "RelaxationResult",
    "RelaxationSettings",
    "active_sectors",
    "apply_normal_uncertainty",
    "assemble_friction_constraints",
    "edge_length",
    "initial_cone",
    "solve_relaxation",
    "solve_with_refinement",
    "uniform_cone",
]
