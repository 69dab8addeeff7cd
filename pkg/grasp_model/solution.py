"""
Equilibrium Solution
Answer record shared by every stability query
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


def _listify(value):
    if value is None:
        return None
    if isinstance(value, np.ndarray):
        return [float(v) for v in value.reshape(-1)]
    if isinstance(value, (list, tuple)):
        return [_listify(v) if isinstance(v, (list, tuple, np.ndarray)) else v for v in value]
    return value


@dataclass
class EquilibriumSolution:
    """
    Contact forces c, object displacement r, joint motions q, joint torques tau,
    actuator forces f, contact persist flags y, actuator lock flags z and the
    net residual wrench w_net = G c + w
    """

    c: np.ndarray
    r: np.ndarray
    w_net: np.ndarray
    q: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    f: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # planar contact state (detach flags u, slip signs s)
    state: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None
    # relaxation solver: final sector angle (rad) of the active sector per contact
    sector_angles: Optional[List[float]] = None
    magnitude: Optional[float] = None

    def contact_force(self, i: int, dim: int = 3) -> np.ndarray:
        """Force of contact i in its own frame (normal first)"""
        return self.c[dim * i : dim * (i + 1)]

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.w_net))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "c": _listify(self.c),
            "r": _listify(self.r),
            "q": _listify(self.q),
            "tau": _listify(self.tau),
            "f": _listify(self.f),
            "y": _listify(self.y),
            "z": _listify(self.z),
            "w_net": _listify(self.w_net),
        }
        if self.state is not None:
            out["state"] = {"u": list(self.state[0]), "s": list(self.state[1])}
        if self.sector_angles is not None:
            out["sector_angles"] = [float(a) for a in self.sector_angles]
        if self.magnitude is not None:
            out["magnitude"] = float(self.magnitude)
        return out
