"""
Contact Frames
Deterministic orthonormal frames at each contact, normal axis first
"""

import numpy as np

from errors import InvalidInputError

UNIT_TOL = 1e-9


def _as_unit(normal, dim: int, tol: float) -> np.ndarray:
    n = np.asarray(normal, dtype=float).reshape(-1)
    if n.shape != (dim,):
        raise InvalidInputError(f"contact normal must have {dim} components, got {n.shape[0]}")
    length = float(np.linalg.norm(n))
    if length == 0.0 or not np.isfinite(length):
        raise InvalidInputError("contact normal has zero length")
    if abs(length - 1.0) > tol:
        raise InvalidInputError(f"contact normal is not unit length (|n| = {length:.12g})")
    # rounding-level cleanup only; anything larger was rejected above
    return n / length


def build_contact_frame(normal, tol: float = UNIT_TOL) -> np.ndarray:
    """
    Right-handed frame (n, t1, t2) as the rows of a 3x3 matrix

    t1 comes from the global axis least aligned with the normal (lowest index on
    ties) with the normal component projected out; t2 = n x t1.

    Args:
        normal: unit 3-vector
        tol: accepted deviation of |normal| from 1

    Returns:
        3x3 array with rows n, t1, t2
    """
    n = _as_unit(normal, 3, tol)
    axis = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[axis] = 1.0
    t1 = e - float(n @ e) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return np.vstack([n, t1, t2])


def build_planar_frame(normal, tol: float = UNIT_TOL) -> np.ndarray:
    """Planar frame (n, t) as rows, t = n rotated by +90 degrees"""
    n = _as_unit(normal, 2, tol)
    t = np.array([-n[1], n[0]])
    return np.vstack([n, t])
