"""
Grasp Model Package
Contacts, hand kinematics, grasp map and hand Jacobian
"""

from .frames import build_contact_frame, build_planar_frame
from .kinematics import (
    ancestors,
    build_grasp_map,
    build_hand_jacobian,
    contact_point_positions,
    relative_contact_motion,
    rotation_matrix,
)
from .model import PLANAR, SPATIAL, WORLD, ContactSpec, GraspModel, HandModel, JointSpec
from .solution import EquilibriumSolution

__all__ = [
    "build_contact_frame",
    "build_planar_frame",
    "ancestors",
    "build_grasp_map",
    "build_hand_jacobian",
    "contact_point_positions",
    "relative_contact_motion",
    "rotation_matrix",
    "PLANAR",
    "SPATIAL",
    "WORLD",
    "ContactSpec",
    "GraspModel",
    "HandModel",
    "JointSpec",
    "EquilibriumSolution",
]
