"""
Contact States
Enumeration of planar slip and detachment states consistent with a rigid object motion
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from errors import InvalidInputError
from grasp_model import GraspModel
from optimization import SolverSettings
from planar.arrangement import MergedArrangement, PlaneArrangement, Region, cell_lp, enumerate_distinct_regions
from planar.cycle_basis import minimum_cycle_basis, symmetric_sum
from planar.settings import PlanarSettings

logger = logging.getLogger(__name__)

REGION, FACET, FACE = 3, 2, 1


@dataclass
class SlipCell:
    """One cell of the slip arrangement: sign vector, cell dimension, witness motion r"""

    signs: Tuple[int, ...]
    dim: int
    witness: np.ndarray


@dataclass
class SlipEnumeration:
    """
    cells: every region, facet and face cell (4m^2 - 4m + 2 of them for a generic grasp)
    states: distinct sign vectors in enumeration order, ending with {0}^m
    """

    cells: List[SlipCell] = field(default_factory=list)
    states: List[Tuple[int, ...]] = field(default_factory=list)
    witnesses: Dict[Tuple[int, ...], np.ndarray] = field(default_factory=dict)

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, signs) -> bool:
        return tuple(int(s) for s in signs) in self.witnesses


@dataclass
class DetachState:
    """u_i = 1 keeps contact i, u_i = 0 lets it separate"""

    u: Tuple[int, ...]
    witness: np.ndarray


def count_bound(m: int) -> Dict[str, int]:
    """Generic cell count of the slip arrangement and its region count"""
    if m < 0:
        raise InvalidInputError(f"contact count must be >= 0, got {m}")
    if m < 2:
        return {"cells": 2 * m + 1, "regions": 2 * m or 1}
    return {"cells": 4 * m * m - 4 * m + 2, "regions": m * m - m + 2}


def _rows(grasp, column: int) -> np.ndarray:
    G = grasp.G if isinstance(grasp, GraspModel) else np.asarray(grasp, dtype=float)
    if G.shape[0] != 3 or G.shape[1] % 2:
        raise InvalidInputError(f"planar grasp map must be 3 x 2m, got {G.shape}")
    return G[:, column::2].T.copy()


def _differing(a: Sequence[int], b: Sequence[int]) -> List[int]:
    return [k for k, (x, y) in enumerate(zip(a, b)) if x != y]


def _cell(merged: MergedArrangement, signs: Sequence[int], margin: float, solver) -> Optional[Region]:
    return cell_lp(merged.normals, merged.offsets, signs, margin, solver)


def enumerate_slip_states(
    grasp,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> SlipEnumeration:
    """
    Slip sign vectors reachable by a rigid object motion r (hand held fixed)

    Regions of the central arrangement of tangent planes come first, then a
    facet state for each pair of regions one sign apart, then a face state
    for every cycle of the minimum cycle basis of the region adjacency graph
    and for their symmetric sum, and finally {0}^m.

    Args:
        grasp: planar GraspModel or its 3 x 2m grasp map
        settings: region margin
        solver: LP tolerances

    Returns:
        SlipEnumeration with cells (generic count 4m^2 - 4m + 2) and distinct states
    """
    settings = settings or PlanarSettings.from_config()
    tangents = _rows(grasp, 1)
    m = tangents.shape[0]
    out = SlipEnumeration()

    def record(signs_distinct: Sequence[int], dim: int, point: np.ndarray, merged: MergedArrangement):
        signs = merged.expand(signs_distinct)
        out.cells.append(SlipCell(signs, dim, point))
        if signs not in out.witnesses:
            out.witnesses[signs] = point
            out.states.append(signs)

    if m == 0:
        out.witnesses[()] = np.zeros(3)
        out.states.append(())
        return out

    arrangement = PlaneArrangement.central(tangents)
    merged, regions = enumerate_distinct_regions(arrangement, settings, solver)
    for region in regions:
        record(region.signs, REGION, region.point, merged)

    # region adjacency: regions one sign apart share a facet on that plane
    graph = nx.Graph()
    graph.add_nodes_from(range(len(regions)))
    edge_plane: Dict[Tuple[int, int], int] = {}
    for a in range(len(regions)):
        for b in range(a + 1, len(regions)):
            diff = _differing(regions[a].signs, regions[b].signs)
            if len(diff) != 1:
                continue
            signs = list(regions[a].signs)
            signs[diff[0]] = 0
            facet = _cell(merged, signs, settings.region_margin, solver)
            if facet is None:
                logger.debug(f"Regions {a} and {b} differ in one sign but share no facet")
                continue
            graph.add_edge(a, b)
            edge_plane[(a, b)] = diff[0]
            record(signs, FACET, facet.point, merged)

    if graph.number_of_edges() and nx.is_connected(graph):
        cycles = minimum_cycle_basis(graph)
        extra = symmetric_sum(cycles)
        faces = cycles + ([extra] if extra else [])
        for cycle in faces:
            traversed = {edge_plane[e] for e in cycle}
            anchor = regions[cycle[0][0]].signs
            signs = [0 if k in traversed else s for k, s in enumerate(anchor)]
            face = _cell(merged, signs, settings.region_margin, solver)
            point = face.point if face is not None else np.zeros(3)
            if face is None:
                logger.debug(f"Face cycle over planes {sorted(traversed)} has no interior witness")
            record(signs, FACE, point, merged)

    zero = (0,) * m
    if zero not in out.witnesses:
        out.witnesses[zero] = np.zeros(3)
        out.states.append(zero)
    logger.debug(f"Slip enumeration for m={m}: {out.cell_count} cells, {len(out.states)} distinct states")
    return out


def enumerate_detach_states(
    grasp,
    preloads: Optional[Sequence[float]] = None,
    stiffness: Optional[Sequence[float]] = None,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> List[DetachState]:
    """
    Persist/detach patterns from the regions of the planes d_n,i = p_i / k_i

    A region on the positive side of plane i (normal motion beyond the preload
    compression) detaches contact i; the negative side keeps it.
    """
    normals = _rows(grasp, 0)
    m = normals.shape[0]
    if preloads is None:
        preloads = grasp.preloads if isinstance(grasp, GraspModel) else np.zeros(m)
    if stiffness is None:
        stiffness = grasp.stiffness if isinstance(grasp, GraspModel) else np.ones(m)
    preloads = np.asarray(preloads, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    if preloads.shape != (m,) or np.any(preloads < 0):
        raise InvalidInputError("preloads must be m nonnegative values")
    if m == 0:
        return [DetachState((), np.zeros(3))]
    arrangement = PlaneArrangement(normals, preloads / stiffness)
    merged, regions = enumerate_distinct_regions(arrangement, settings, solver)
    states = []
    for region in regions:
        signs = merged.expand(region.signs)
        states.append(DetachState(tuple(0 if s > 0 else 1 for s in signs), region.point))
    logger.debug(f"Detach enumeration for m={m}: {len(states)} states")
    return states
