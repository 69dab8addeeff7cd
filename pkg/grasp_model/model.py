"""
Grasp Model
Declarative contacts and hand description plus the matrices built from them
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import InvalidInputError
from grasp_model.frames import build_contact_frame, build_planar_frame
from grasp_model.kinematics import ancestors, build_grasp_map, build_hand_jacobian

logger = logging.getLogger(__name__)

PLANAR = "planar"
SPATIAL = "spatial"
WORLD = -1


def _vec(values, name: str, dims: Tuple[int, ...]) -> Tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) not in dims:
        raise InvalidInputError(f"{name} must have {' or '.join(map(str, dims))} components, got {len(out)}")
    if not all(np.isfinite(out)):
        raise InvalidInputError(f"{name} has non-finite components")
    return out


@dataclass(frozen=True)
class ContactSpec:
    """Point contact with friction; the normal points from the link into the object"""

    position: Tuple[float, ...]
    normal: Tuple[float, ...]
    mu: float
    link: int = WORLD
    preload: float = 0.0
    stiffness: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", _vec(self.position, "position", (2, 3)))
        object.__setattr__(self, "normal", _vec(self.normal, "normal", (2, 3)))
        if len(self.position) != len(self.normal):
            raise InvalidInputError("contact position and normal differ in dimension")
        if not self.mu >= 0.0:
            raise InvalidInputError(f"friction coefficient must be >= 0, got {self.mu}")
        if not self.preload >= 0.0:
            raise InvalidInputError(f"preload must be >= 0, got {self.preload}")
        if not self.stiffness > 0.0:
            raise InvalidInputError(f"contact stiffness must be > 0, got {self.stiffness}")
        if self.link < WORLD:
            raise InvalidInputError(f"contact link must be -1 (world) or a joint index, got {self.link}")

    @property
    def dim(self) -> int:
        return len(self.position)


@dataclass(frozen=True)
class JointSpec:
    """Revolute joint moving link `index`; parent -1 is the palm/base"""

    parent: int
    axis: Tuple[float, float, float]
    origin: Tuple[float, ...]
    kind: str = "revolute"

    def __post_init__(self):
        axis = _vec(self.axis, "joint axis", (3,))
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > 1e-6:
            raise InvalidInputError(f"joint axis must be a unit vector (|a| = {norm:.9g})")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "origin", _vec(self.origin, "joint origin", (2, 3)))
        if self.kind != "revolute":
            raise InvalidInputError(f"unsupported joint kind {self.kind!r}; only revolute joints are modelled")


@dataclass(frozen=True)
class HandModel:
    """Serial joint tree, transmission R (l x a) and commanded actuator forces"""

    joints: Tuple[JointSpec, ...] = ()
    transmission: Optional[Tuple[Tuple[float, ...], ...]] = None
    commanded: Tuple[float, ...] = ()

    def __post_init__(self):
        joints = tuple(self.joints)
        object.__setattr__(self, "joints", joints)
        for j, joint in enumerate(joints):
            if not WORLD <= joint.parent < j:
                raise InvalidInputError(
                    f"joint {j}: parent must be -1 or an earlier joint index, got {joint.parent}"
                )
        if self.transmission is None:
            R = np.eye(len(joints))
        else:
            R = np.asarray(self.transmission, dtype=float).reshape(len(joints), -1) if joints else np.zeros((0, 0))
        object.__setattr__(self, "transmission", tuple(tuple(float(v) for v in row) for row in R))
        commanded = tuple(float(v) for v in self.commanded) or (0.0,) * R.shape[1]
        if len(commanded) != R.shape[1]:
            raise InvalidInputError(
                f"commanded has {len(commanded)} entries but the transmission has {R.shape[1]} actuators"
            )
        object.__setattr__(self, "commanded", commanded)

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def actuator_count(self) -> int:
        return len(self.commanded)

    @property
    def R(self) -> np.ndarray:
        return np.array(self.transmission, dtype=float).reshape(self.joint_count, self.actuator_count)

    def with_commanded(self, commanded: Sequence[float]) -> "HandModel":
        return replace(self, commanded=tuple(float(v) for v in commanded))


@dataclass(frozen=True)
class GraspModel:
    """
    Geometry and kinematics of one grasp

    G, J and the contact frames are derived at construction and stored as
    read-only arrays; instances are safe to share between threads.
    """

    mode: str
    contacts: Tuple[ContactSpec, ...]
    hand: HandModel = field(default_factory=HandModel)
    name: str = "grasp"
    unit_tol: float = 1e-9
    frames: Tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    G: np.ndarray = field(init=False, repr=False, compare=False)
    J: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in (PLANAR, SPATIAL):
            raise InvalidInputError(f"mode must be 'planar' or 'spatial', got {self.mode!r}")
        contacts = tuple(self.contacts)
        object.__setattr__(self, "contacts", contacts)
        dim = 2 if self.mode == PLANAR else 3
        for i, contact in enumerate(contacts):
            if contact.dim != dim:
                raise InvalidInputError(f"contact {i}: expected {dim}-D geometry in {self.mode} mode")
            if self.mode == SPATIAL and contact.preload != 0.0:
                raise InvalidInputError(
                    f"contact {i}: preload is planar-only; spatial preload is a commanded actuator force"
                )
            if contact.link != WORLD:
                if contact.link >= self.hand.joint_count:
                    raise InvalidInputError(f"contact {i} is on link {contact.link}, which no joint reaches")
                ancestors(self.hand, contact.link)
        builder = build_planar_frame if self.mode == PLANAR else build_contact_frame
        frames = tuple(builder(c.normal, self.unit_tol) for c in contacts)
        for fr in frames:
            fr.setflags(write=False)
        G = build_grasp_map(contacts, self.mode == PLANAR, frames)
        J = build_hand_jacobian(self.hand, contacts, frames)
        G.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "J", J)
        logger.debug(f"Built {self.mode} grasp {self.name!r}: m={self.m}, l={self.joint_count}, a={self.actuator_count}")

    # -- sizes ---------------------------------------------------------------
    @property
    def is_planar(self) -> bool:
        return self.mode == PLANAR

    @property
    def m(self) -> int:
        return len(self.contacts)

    @property
    def contact_dim(self) -> int:
        return 2 if self.is_planar else 3

    @property
    def wrench_dim(self) -> int:
        return 3 if self.is_planar else 6

    @property
    def joint_count(self) -> int:
        return self.hand.joint_count

    @property
    def actuator_count(self) -> int:
        return self.hand.actuator_count

    # -- per-contact arrays --------------------------------------------------
    @property
    def mu(self) -> np.ndarray:
        return np.array([c.mu for c in self.contacts], dtype=float)

    @property
    def preloads(self) -> np.ndarray:
        return np.array([c.preload for c in self.contacts], dtype=float)

    @property
    def stiffness(self) -> np.ndarray:
        return np.array([c.stiffness for c in self.contacts], dtype=float)

    @property
    def R(self) -> np.ndarray:
        return self.hand.R

    @property
    def commanded(self) -> np.ndarray:
        return np.array(self.hand.commanded, dtype=float)

    def block(self, i: int) -> slice:
        """Rows of contact i in stacked contact-frame vectors"""
        k = self.contact_dim
        return slice(k * i, k * (i + 1))

    # -- derived models ------------------------------------------------------
    def subset(self, indices: Sequence[int]) -> "GraspModel":
        """Same hand, only the listed contacts (in the given order)"""
        picked = tuple(self.contacts[i] for i in indices)
        return replace(self, contacts=picked, name=f"{self.name}[{','.join(map(str, indices))}]")

    def with_commanded(self, commanded: Sequence[float]) -> "GraspModel":
        return replace(self, hand=self.hand.with_commanded(commanded))

    def with_preloads(self, preloads: Sequence[float]) -> "GraspModel":
        contacts = tuple(replace(c, preload=float(p)) for c, p in zip(self.contacts, preloads))
        return replace(self, contacts=contacts)

    def with_stiffness(self, scale: float) -> "GraspModel":
        contacts = tuple(replace(c, stiffness=c.stiffness * float(scale)) for c in self.contacts)
        return replace(self, contacts=contacts)

    # -- comparison ----------------------------------------------------------
    def _layout(self) -> Tuple:
        hand = self.hand
        return (
            self.mode,
            self.name,
            tuple(c.link for c in self.contacts),
            tuple(len(c.position) for c in self.contacts),
            tuple(j.parent for j in hand.joints),
            hand.actuator_count,
        )

    def _values(self) -> np.ndarray:
        values = []
        for c in self.contacts:
            values.extend(c.position)
            values.extend(c.normal)
            values.extend((c.mu, c.preload, c.stiffness))
        for j in self.hand.joints:
            values.extend(j.axis)
            values.extend(j.origin)
        for row in self.hand.transmission:
            values.extend(row)
        values.extend(self.hand.commanded)
        return np.array(values, dtype=float)

    def isclose(self, other: "GraspModel", rel_tol: float = 1e-11, abs_tol: float = 1e-12) -> bool:
        """
        Same structure and every number equal within tolerance

        Text forms that keep 12 significant digits read back within rel_tol of
        the original; `==` compares floats exactly.
        """
        if not isinstance(other, GraspModel) or self._layout() != other._layout():
            return False
        a, b = self._values(), other._values()
        return a.shape == b.shape and bool(np.allclose(a, b, rtol=rel_tol, atol=abs_tol))
