"""
Kinematics
Grasp map, hand Jacobian, relative contact motion and forward kinematics
"""

from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from errors import InvalidInputError

if TYPE_CHECKING:
    from grasp_model.model import ContactSpec, HandModel


def ancestors(hand: "HandModel", link: int) -> List[int]:
    """Joint indices from `link` down to the base (tip first)"""
    chain: List[int] = []
    current = link
    while current != -1:
        if not 0 <= current < hand.joint_count:
            raise InvalidInputError(f"link {link} is not reachable from the base")
        if current in chain:
            raise InvalidInputError(f"joint chain through link {link} has a cycle")
        chain.append(current)
        current = hand.joints[current].parent
    return chain


def _planar_cross(p: np.ndarray, u: np.ndarray) -> float:
    return float(p[0] * u[1] - p[1] * u[0])


def build_grasp_map(
    contacts: Sequence["ContactSpec"], planar: bool, frames: Optional[Sequence[np.ndarray]] = None
) -> np.ndarray:
    """
    Stack one column per contact-frame axis

    Spatial columns are (u, p x u); planar columns are (u_x, u_y, p_x u_y - p_y u_x).

    Args:
        contacts: contacts in object coordinates
        planar: build the 3 x 2m planar map instead of the 6 x 3m spatial one
        frames: precomputed frames (rows = axes), built from the normals if omitted

    Returns:
        grasp map G
    """
    from grasp_model.frames import build_contact_frame, build_planar_frame

    if frames is None:
        builder = build_planar_frame if planar else build_contact_frame
        frames = [builder(c.normal) for c in contacts]
    k = 2 if planar else 3
    G = np.zeros((3 if planar else 6, k * len(contacts)))
    for i, (contact, frame) in enumerate(zip(contacts, frames)):
        p = np.asarray(contact.position, dtype=float)
        for a in range(k):
            u = frame[a]
            col = k * i + a
            if planar:
                G[:, col] = (u[0], u[1], _planar_cross(p, u))
            else:
                G[:3, col] = u
                G[3:, col] = np.cross(p, u)
    return G


def build_hand_jacobian(
    hand: "HandModel", contacts: Sequence["ContactSpec"], frames: Sequence[np.ndarray]
) -> np.ndarray:
    """
    Contact-point velocity per unit joint rate, expressed in contact frames

    Column j of contact i's block is frame_i (axis_j x (p_i - origin_j)) when
    joint j lies on the chain of the contact's link, zero otherwise.
    """
    l = hand.joint_count
    k = len(frames[0]) if frames else 3
    J = np.zeros((k * len(contacts), l))
    for i, (contact, frame) in enumerate(zip(contacts, frames)):
        if contact.link == -1:
            continue
        p = np.asarray(contact.position, dtype=float)
        for j in ancestors(hand, contact.link):
            joint = hand.joints[j]
            axis = np.asarray(joint.axis, dtype=float)
            origin = np.asarray(joint.origin, dtype=float)
            if k == 2:
                rel = p - origin[:2]
                v = axis[2] * np.array([-rel[1], rel[0]])
            else:
                v = np.cross(axis, p - origin)
            J[k * i : k * (i + 1), j] = frame @ v
    return J


def relative_contact_motion(G: np.ndarray, J: Optional[np.ndarray], r, q=None) -> np.ndarray:
    """d = G^T r - J q, stacked per contact in contact-frame coordinates"""
    r = np.asarray(r, dtype=float)
    if r.shape != (G.shape[0],):
        raise InvalidInputError(f"object motion must have {G.shape[0]} components, got {r.shape}")
    d = G.T @ r
    if q is not None and J is not None and J.shape[1]:
        q = np.asarray(q, dtype=float)
        if q.shape != (J.shape[1],):
            raise InvalidInputError(f"joint motion must have {J.shape[1]} components, got {q.shape}")
        d = d - J @ q
    return d


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis"""
    a = np.asarray(axis, dtype=float)
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def contact_point_positions(hand: "HandModel", contacts: Sequence["ContactSpec"], joint_angles) -> np.ndarray:
    """
    Contact positions after rotating each link's chain by joint_angles

    Joint axes and origins are given in the reference configuration, so each
    point is rotated about the tip-most joint first and the base joint last.
    """
    theta = np.asarray(joint_angles, dtype=float)
    if theta.shape != (hand.joint_count,):
        raise InvalidInputError(f"expected {hand.joint_count} joint angles, got {theta.shape}")
    out = []
    for contact in contacts:
        p = np.asarray(contact.position, dtype=float)
        planar = p.shape == (2,)
        point = np.append(p, 0.0) if planar else p.copy()
        if contact.link != -1:
            for j in ancestors(hand, contact.link):
                joint = hand.joints[j]
                origin = np.asarray(joint.origin, dtype=float)
                if origin.shape == (2,):
                    origin = np.append(origin, 0.0)
                point = origin + rotation_matrix(joint.axis, theta[j]) @ (point - origin)
        out.append(point[:2] if planar else point)
    return np.array(out)
