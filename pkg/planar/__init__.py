"""
Planar Package
Contact-state enumeration and the planar stability decision for rigid hands
"""

from .settings import PlanarSettings
from .arrangement import PlaneArrangement, Region, cell_lp, enumerate_regions
from .cycle_basis import minimum_cycle_basis, symmetric_sum
from .contact_states import (
    DetachState,
    SlipCell,
    SlipEnumeration,
    count_bound,
    enumerate_detach_states,
    enumerate_slip_states,
)
from .stability import PlanarVerdict, contact_states, planar_stability, solve_state

__all__ = [
    "PlanarSettings",
    "PlaneArrangement",
    "Region",
    "cell_lp",
    "enumerate_regions",
    "minimum_cycle_basis",
    "symmetric_sum",
    "DetachState",
    "SlipCell",
    "SlipEnumeration",
    "count_bound",
    "enumerate_detach_states",
    "enumerate_slip_states",
    "PlanarVerdict",
    "contact_states",
    "planar_stability",
    "solve_state",
]
