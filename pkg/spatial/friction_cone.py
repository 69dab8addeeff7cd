"""
Friction Cone
Polygonal friction cones with evenly spaced unit edges
"""

import math
from typing import List, Tuple

import numpy as np

from optimization import LinExpr, Variable, lin_sum
from spatial.constraints import SpatialProblem


def polygon_directions(k: int, offset: float = 0.0) -> np.ndarray:
    """k unit directions at angles offset + 2 pi s / k (rows)"""
    angles = offset + 2.0 * math.pi * np.arange(k) / k
    return np.column_stack([np.cos(angles), np.sin(angles)])


def cone_facets(k: int) -> Tuple[np.ndarray, float]:
    """
    Outward facet normals of the inscribed k-gon and its facet distance

    c_t lies in the polygon scaled by mu c_n iff n_s . c_t <= cos(pi / k) mu c_n
    for every facet normal n_s.
    """
    return polygon_directions(k, math.pi / k), math.cos(math.pi / k)


def add_polygonal_cone(problem: SpatialProblem, i: int, k: int) -> List[Variable]:
    """
    Inscribed polygonal cone on contact i: c_t = sum beta_s e_s, sum beta <= mu c_n

    A frictionless contact gets c_t = 0 and no edge weights.
    """
    model = problem.model
    mu = float(problem.grasp.contacts[i].mu)
    ct = problem.tangential_force(i)
    cn = problem.normal_force(i)
    name = problem.note("friction_cone", f"cone[{i}]")
    if mu == 0.0:
        model.add_constraint(ct[0] == 0.0, f"{name}.t1")
        model.add_constraint(ct[1] == 0.0, f"{name}.t2")
        return []
    edges = polygon_directions(k)
    beta = model.add_vars(k, f"beta[{i}]", lb=0.0)
    for axis in range(2):
        combo = LinExpr()
        for s in range(k):
            combo.add_inplace(beta[s], float(edges[s, axis]))
        model.add_constraint(ct[axis] - combo == 0.0, f"{name}.t{axis + 1}")
    model.add_constraint(lin_sum(beta) - mu * cn <= 0.0, f"{name}.magnitude")
    return beta
