"""
Analysis Package
User-facing stability queries, force closure, compliance linearization and the action shield
"""

from .force_closure import ClosureVerdict, force_closure_check, primitive_wrenches
from .compliance import (
    ComplianceModel,
    LinearizedGrasp,
    ShieldState,
    linearize,
    orientation_angles,
    orientation_jacobian,
    predict_state,
)
from .shield import (
    ShieldConstraints,
    ShieldResult,
    ShieldSettings,
    ShieldStatus,
    constraint_violation,
    pinned_joints,
    shield_project,
    shielded_subsets,
)
from .queries import (
    ActuatorOptimum,
    DisturbanceResult,
    MagnitudeStatus,
    MapRow,
    QuerySettings,
    SolverOptions,
    StabilityVerdict,
    SweepRow,
    Verdict,
    analytic_pullout_estimate,
    check_plane,
    force_map,
    max_disturbance,
    optimize_actuators,
    plane_basis,
    preload_sweep,
    stability_check,
)

__all__ = [
    "ClosureVerdict",
    "force_closure_check",
    "primitive_wrenches",
    "ComplianceModel",
    "LinearizedGrasp",
    "ShieldState",
    "linearize",
    "orientation_angles",
    "orientation_jacobian",
    "predict_state",
    "ShieldConstraints",
    "ShieldResult",
    "ShieldSettings",
    "ShieldStatus",
    "constraint_violation",
    "pinned_joints",
    "shield_project",
    "shielded_subsets",
    "ActuatorOptimum",
    "DisturbanceResult",
    "MagnitudeStatus",
    "MapRow",
    "QuerySettings",
    "SolverOptions",
    "StabilityVerdict",
    "SweepRow",
    "Verdict",
    "analytic_pullout_estimate",
    "check_plane",
    "force_map",
    "max_disturbance",
    "optimize_actuators",
    "plane_basis",
    "preload_sweep",
    "stability_check",
]
