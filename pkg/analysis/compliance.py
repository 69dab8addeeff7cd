"""
Compliance
Grasp stiffness and the linear maps from joint setpoint changes to contact
forces and object pose
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from errors import InvalidInputError, RankDeficiencyError
from grasp_model import GraspModel, rotation_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComplianceModel:
    """Diagonal contact compliances (one per contact-frame axis) and joint compliances"""

    contacts: Sequence[float]
    joints: Sequence[float]

    def __post_init__(self):
        c = np.asarray(self.contacts, dtype=float)
        j = np.asarray(self.joints, dtype=float)
        if np.any(c < 0) or np.any(j < 0) or not (np.all(np.isfinite(c)) and np.all(np.isfinite(j))):
            raise InvalidInputError("compliances must be finite and nonnegative")
        object.__setattr__(self, "contacts", tuple(float(v) for v in c))
        object.__setattr__(self, "joints", tuple(float(v) for v in j))

    @classmethod
    def uniform(cls, grasp: GraspModel, contact: float = 1.0, joint: float = 0.0) -> "ComplianceModel":
        return cls([contact] * (grasp.contact_dim * grasp.m), [joint] * grasp.joint_count)


@dataclass(frozen=True)
class LinearizedGrasp:
    """
    K maps relative contact motion to contact-force change, E maps a setpoint
    change to the contact-force change and F to the object pose change
    """

    K: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    J: np.ndarray

    @property
    def pose_dim(self) -> int:
        return self.G.shape[0]


def _cholesky(matrix: np.ndarray, name: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise RankDeficiencyError(name, f"{name} is not positive definite") from e


def _spd_inverse(matrix: np.ndarray, name: str) -> np.ndarray:
    L = _cholesky(matrix, name)
    L_inv = np.linalg.solve(L, np.eye(L.shape[0]))
    return L_inv.T @ L_inv


def linearize(grasp: GraspModel, compliance: ComplianceModel) -> LinearizedGrasp:
    """
    Linearize the compliant grasp around its current state

    K = (C_contacts + J C_joints J^T)^-1
    F = (G K G^T)^-1 G K J
    E = (I - K G^T (G K G^T)^-1 G) K J

    Raises:
        RankDeficiencyError: the compliance sum or G K G^T is singular
    """
    n = grasp.contact_dim * grasp.m
    c = np.asarray(compliance.contacts, dtype=float)
    j = np.asarray(compliance.joints, dtype=float)
    if c.shape != (n,) or j.shape != (grasp.joint_count,):
        raise InvalidInputError(
            f"compliance sizes {c.shape[0]}/{j.shape[0]} do not match {n} contact axes and {grasp.joint_count} joints"
        )
    G, J = np.asarray(grasp.G), np.asarray(grasp.J)
    S = np.diag(c) + (J * j) @ J.T
    K = _spd_inverse(S, "contact compliance")
    K = 0.5 * (K + K.T)
    M_inv = _spd_inverse(G @ K @ G.T, "G K G^T")
    KJ = K @ J
    F = M_inv @ G @ KJ
    E = KJ - K @ G.T @ F
    logger.debug(f"Linearized {grasp.name!r}: |G E| = {np.abs(G @ E).max(initial=0.0):.2e}")
    return LinearizedGrasp(K, E, F, G, J)


@dataclass(frozen=True)
class ShieldState:
    """Contact forces c and object pose u (translation then rotation vector)"""

    c: np.ndarray
    u: np.ndarray

    @classmethod
    def of(cls, c, u) -> "ShieldState":
        return cls(np.asarray(c, dtype=float).copy(), np.asarray(u, dtype=float).copy())


def predict_state(
    lin: LinearizedGrasp, state: ShieldState, dq, step_cap: Optional[float] = 0.05
) -> ShieldState:
    """
    [c; u] + [E; F] dq

    Rotation increments add as small angles, which holds under the step cap.
    """
    dq = np.asarray(dq, dtype=float)
    if dq.shape != (lin.J.shape[1],):
        raise InvalidInputError(f"setpoint change must have {lin.J.shape[1]} components, got {dq.shape}")
    if step_cap is not None and dq.size and np.max(np.abs(dq)) > step_cap + 1e-12:
        raise InvalidInputError(f"setpoint change {np.max(np.abs(dq)):.4g} rad exceeds the step cap {step_cap}")
    return ShieldState(state.c + lin.E @ dq, state.u + lin.F @ dq)


def orientation_angles(u) -> np.ndarray:
    """
    Signed tilt of the body z-axis against global Z, projected on the yz and xz planes

    Zero pose gives (0, 0); a positive rotation about x gives a positive first angle.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (6,):
        raise InvalidInputError("orientation angles need a spatial pose")
    rot = u[3:]
    angle = float(np.linalg.norm(rot))
    R = rotation_matrix(rot / angle, angle) if angle > 0 else np.eye(3)
    z = R[:, 2]
    return np.array([np.arctan2(-z[1], z[2]), np.arctan2(z[0], z[2])])


def orientation_jacobian(u, h: float = 1e-7) -> np.ndarray:
    """Central-difference derivative of orientation_angles with respect to the pose"""
    u = np.asarray(u, dtype=float)
    out = np.zeros((2, 6))
    for k in range(3, 6):
        step = np.zeros(6)
        step[k] = h
        out[:, k] = (orientation_angles(u + step) - orientation_angles(u - step)) / (2 * h)
    return out
