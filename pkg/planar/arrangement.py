"""
Plane Arrangement
Full-dimensional regions of an (affine) plane arrangement by incremental insertion
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import InvalidInputError
from optimization import LinearModel, SolverSettings, dot, solve_lp
from planar.settings import PlanarSettings

logger = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-10


@dataclass(frozen=True)
class PlaneArrangement:
    """Planes a_i . x = p_i; central when every offset is zero"""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if normals.shape[0] != offsets.shape[0]:
            raise InvalidInputError(f"{normals.shape[0]} plane normals but {offsets.shape[0]} offsets")
        for i, a in enumerate(normals):
            if not np.linalg.norm(a) > 0.0:
                raise InvalidInputError(f"plane {i} has a zero normal")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def central(cls, normals) -> "PlaneArrangement":
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        return cls(normals, np.zeros(normals.shape[0]))

    @property
    def size(self) -> int:
        return self.normals.shape[0]

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def is_central(self) -> bool:
        return bool(np.all(self.offsets == 0.0))

    def merged(self) -> "MergedArrangement":
        return MergedArrangement.build(self)


@dataclass
class MergedArrangement:
    """Distinct planes plus the map back to the original plane list"""

    normals: np.ndarray
    offsets: np.ndarray
    representative: List[int]
    orientation: List[int]

    @classmethod
    def build(cls, arrangement: PlaneArrangement) -> "MergedArrangement":
        keys: List[np.ndarray] = []
        normals, offsets = [], []
        representative, orientation = [], []
        for a, p in zip(arrangement.normals, arrangement.offsets):
            h = np.append(a, -p)
            h = h / np.linalg.norm(h)
            lead = int(np.flatnonzero(np.abs(h) > 1e-12)[0])
            sign = 1 if h[lead] > 0 else -1
            h = sign * h
            for u, key in enumerate(keys):
                if np.allclose(key, h, atol=DUPLICATE_TOL, rtol=0.0):
                    representative.append(u)
                    orientation.append(sign)
                    break
            else:
                keys.append(h)
                normals.append(sign * a)
                offsets.append(sign * p)
                representative.append(len(keys) - 1)
                orientation.append(sign)
        merged = cls(np.array(normals).reshape(-1, arrangement.dim), np.array(offsets, dtype=float), representative, orientation)
        if len(keys) < arrangement.size:
            logger.debug(f"Merged {arrangement.size - len(keys)} duplicate plane(s)")
        return merged

    @property
    def size(self) -> int:
        return self.normals.shape[0]

    def expand(self, signs: Sequence[int]) -> Tuple[int, ...]:
        """Sign vector over the distinct planes -> sign vector over the original planes"""
        return tuple(int(o * signs[u]) for u, o in zip(self.representative, self.orientation))


@dataclass
class Region:
    """Nonempty open cell with the homogeneous witness (x, t) of its defining LP"""

    signs: Tuple[int, ...]
    point: np.ndarray
    slack: float
    homogeneous: Tuple[np.ndarray, float] = field(repr=False)


def cell_lp(
    normals: np.ndarray,
    offsets: np.ndarray,
    signs: Sequence[int],
    margin: float,
    solver: Optional[SolverSettings] = None,
) -> Optional[Region]:
    """
    Witness for the cell with sign pattern `signs` (0 = on the plane)

    Maximizes eps subject to s_i (a_i . x - p_i t) >= eps on signed planes,
    a_i . x = p_i t on zero entries, t >= eps, x in [-1, 1]^d, t <= 1. The cell
    is nonempty iff eps > margin; its point is x / t.
    """
    d = normals.shape[1]
    model = LinearModel("cell")
    x = model.add_vars(d, "x", lb=-1.0, ub=1.0)
    t = model.add_var("t", lb=0.0, ub=1.0)
    eps = model.add_var("eps", lb=-1.0, ub=1.0)
    for i, s in enumerate(signs):
        expr = dot(normals[i], x) - float(offsets[i]) * t
        if s == 0:
            model.add_constraint(expr == 0.0, f"on{i}")
        else:
            model.add_constraint(float(s) * expr - eps >= 0.0, f"side{i}")
    model.add_constraint(t - eps >= 0.0, "t")
    model.maximize(eps)
    result = solve_lp(model, solver)
    if not result.ok or result.objective is None or result.objective <= margin:
        return None
    xs = result.values(x)
    tv = result.value(t)
    return Region(tuple(int(s) for s in signs), xs / tv, float(result.objective), (xs, tv))


def _enumerate_distinct(merged: MergedArrangement, margin: float, solver: Optional[SolverSettings]) -> List[Region]:
    d = merged.normals.shape[1]
    regions = [Region((), np.zeros(d), 1.0, (np.zeros(d), 1.0))]
    lp_calls = 0
    for k in range(merged.size):
        a, p = merged.normals[k], float(merged.offsets[k])
        grown: List[Region] = []
        for region in regions:
            xh, th = region.homogeneous
            v = float(a @ xh - p * th)
            for s in (-1, 1):
                signs = region.signs + (s,)
                if s * v > margin:
                    slack = min(region.slack, s * v)
                    grown.append(Region(signs, region.point, slack, region.homogeneous))
                    continue
                lp_calls += 1
                found = cell_lp(merged.normals[: k + 1], merged.offsets[: k + 1], signs, margin, solver)
                if found is not None:
                    grown.append(found)
        regions = grown
    logger.debug(f"Arrangement of {merged.size} planes: {len(regions)} regions, {lp_calls} LPs")
    return regions


def enumerate_distinct_regions(
    arrangement: PlaneArrangement,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> Tuple[MergedArrangement, List[Region]]:
    """Regions over the merged (duplicate-free) planes, with the merge map"""
    settings = settings or PlanarSettings.from_config()
    merged = arrangement.merged()
    return merged, _enumerate_distinct(merged, settings.region_margin, solver)


def enumerate_regions(
    arrangement: PlaneArrangement,
    settings: Optional[PlanarSettings] = None,
    solver: Optional[SolverSettings] = None,
) -> List[Region]:
    """
    Every full-dimensional region as a +-1 sign vector over the original planes

    Args:
        arrangement: planes a_i . x = p_i
        settings: region margin (default: from config)
        solver: LP tolerances

    Returns:
        regions in insertion order; each carries a witness point
    """
    merged, regions = enumerate_distinct_regions(arrangement, settings, solver)
    return [Region(merged.expand(r.signs), r.point, r.slack, r.homogeneous) for r in regions]
