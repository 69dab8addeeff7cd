"""
Relaxation Solver
Convex relaxation of Coulomb friction with maximum dissipation, SOS2 sector
coupling and successive hierarchical refinement of the friction cone
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config_loader import Config, config as default_config
from errors import InvalidInputError, InvalidModelError, ResourceLimitError
from grasp_model import EquilibriumSolution, GraspModel
from optimization import LinearModel, LinExpr, SolveResult, SolveStatus, SolverSettings, Variable, lin_sum, solve_mip
from spatial.constraints import SpatialProblem, SpatialSettings, assemble_core_constraints

logger = logging.getLogger(__name__)

FRICTION_MODES = ("mdp", "cone")

Handles = Dict[str, Any]
WrenchSource = Union[None, Sequence[Any], np.ndarray, Callable[[Handles], Sequence[Any]]]


@dataclass(frozen=True)
class RelaxationSettings:
    initial_angle: float = math.pi / 2
    q: int = 10
    eta: float = math.radians(2.5)
    max_rounds: int = 200
    # relative slack before a rolling force counts as outside the exact cone
    cone_tol: float = 1e-7
    motion_tol: float = 1e-9

    def __post_init__(self):
        if self.q < 0:
            raise InvalidInputError(f"refinement exponent q must be >= 0, got {self.q}")
        if not 0.0 <= self.eta < math.pi / 2:
            raise InvalidInputError(f"normal uncertainty must lie in [0, pi/2), got {self.eta}")
        if self.max_rounds < 1:
            raise InvalidInputError("max_rounds must be positive")
        _base_sectors(self.initial_angle)

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None, **overrides) -> "RelaxationSettings":
        cfg = cfg or default_config
        base = cls()
        values = {
            "initial_angle": float(cfg.get("relaxation", "initial_angle", default=base.initial_angle)),
            "q": int(cfg.get("relaxation", "q", default=base.q)),
            "eta": float(cfg.get("relaxation", "eta", default=base.eta)),
            "max_rounds": int(cfg.get("relaxation", "max_rounds", default=base.max_rounds)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _base_sectors(initial_angle: float) -> int:
    count = int(round(2.0 * math.pi / initial_angle))
    if count < 3 or abs(count * initial_angle - 2.0 * math.pi) > 1e-9:
        raise InvalidInputError(f"initial sector angle must split the circle into >= 3 sectors, got {initial_angle}")
    return count


@lru_cache(maxsize=None)
def edge_length(p: int, q: int, initial_angle: float = math.pi / 2) -> float:
    """
    Length l_p of an edge bounding a level-p sector

    l_p = prod_{r=p}^{q+1} sec(initial_angle / 2^r); levels beyond the target give 1.
    """
    length = 1.0
    for r in range(max(p, 1), q + 2):
        length /= math.cos(initial_angle / 2**r)
    return length


@dataclass(frozen=True)
class FrictionConeApprox:
    """
    Per-contact friction edges on an integer tick grid

    A full turn has base * 2^q ticks; edges sit on ticks in increasing (CCW)
    order and sector s runs from edge s to edge s + 1 (wrapping). A sector of
    width w ticks has level q + 1 - log2(w); the target level is q + 1.
    """

    q: int
    ticks: Tuple[Tuple[int, ...], ...]
    initial_angle: float = math.pi / 2

    @property
    def m(self) -> int:
        return len(self.ticks)

    @property
    def base(self) -> int:
        return _base_sectors(self.initial_angle)

    @property
    def resolution(self) -> int:
        return self.base * 2**self.q

    @property
    def tick_angle(self) -> float:
        return self.initial_angle / 2**self.q

    @property
    def target_level(self) -> int:
        return self.q + 1

    def edge_count(self, i: int) -> int:
        return len(self.ticks[i])

    def sector_widths(self, i: int) -> np.ndarray:
        t = np.asarray(self.ticks[i])
        return (np.roll(t, -1) - t) % self.resolution

    def sector_levels(self, i: int) -> np.ndarray:
        # widths are powers of two: log2(w) == bit_length - 1
        return np.array([self.q + 2 - int(w).bit_length() for w in self.sector_widths(i)])

    def sector_angles(self, i: int) -> np.ndarray:
        return self.sector_widths(i) * self.tick_angle

    def edge_levels(self, i: int) -> np.ndarray:
        """Each edge takes the level of its coarser neighbouring sector"""
        levels = self.sector_levels(i)
        return np.minimum(levels, np.roll(levels, 1))

    def edge_lengths(self, i: int) -> np.ndarray:
        return np.array([edge_length(int(p), self.q, self.initial_angle) for p in self.edge_levels(i)])

    def edge_directions(self, i: int) -> np.ndarray:
        angles = np.asarray(self.ticks[i]) * self.tick_angle
        return np.column_stack([np.cos(angles), np.sin(angles)])

    def edge_matrix(self, i: int) -> np.ndarray:
        """2 x k matrix whose columns are length * direction in the (t1, t2) frame"""
        return (self.edge_directions(i) * self.edge_lengths(i)[:, None]).T

    def at_target(self, i: int, s: int) -> bool:
        return int(self.sector_widths(i)[s]) <= 1

    def sectors_containing(self, i: int, vector, tol: float = 1e-10) -> List[int]:
        """Sectors whose closed angular span holds the direction of vector (two on an edge)"""
        v = np.asarray(vector, dtype=float)
        if np.linalg.norm(v) == 0.0:
            return []
        angle = math.atan2(v[1], v[0]) % (2.0 * math.pi)
        t = np.asarray(self.ticks[i]) * self.tick_angle
        widths = self.sector_angles(i)
        found = []
        for s in range(len(t)):
            offset = (angle - t[s]) % (2.0 * math.pi)
            if offset <= widths[s] + tol or offset >= 2.0 * math.pi - tol:
                found.append(s)
        return found

    def refine_sectors(self, i: int, sectors) -> "FrictionConeApprox":
        """Bisect every listed sector of contact i not yet at the target level"""
        widths = self.sector_widths(i)
        ticks = list(self.ticks[i])
        mids = {(ticks[s] + int(widths[s]) // 2) % self.resolution for s in set(sectors) if widths[s] > 1}
        if not mids:
            return self
        updated = list(self.ticks)
        updated[i] = tuple(sorted(set(ticks) | mids))
        return replace(self, ticks=tuple(updated))

    def refine_sector(self, i: int, s: int) -> "FrictionConeApprox":
        return self.refine_sectors(i, [s])

    def refines(self, coarser: "FrictionConeApprox") -> bool:
        """True when every edge of coarser is also an edge here (so this cone set is contained in it)"""
        if (self.q, self.initial_angle, self.m) != (coarser.q, coarser.initial_angle, coarser.m):
            return False
        return all(set(c) <= set(f) for f, c in zip(self.ticks, coarser.ticks))

    def summary(self) -> List[Dict[str, int]]:
        return [
            {"edges": self.edge_count(i), "finest_level": int(self.sector_levels(i).max())} for i in range(self.m)
        ]


def initial_cone(q: int, m: int = 1, initial_angle: float = math.pi / 2) -> FrictionConeApprox:
    """base edges at initial_angle spacing (4 at 90 degrees) for each of m contacts"""
    if q < 0:
        raise InvalidInputError(f"refinement exponent q must be >= 0, got {q}")
    base = _base_sectors(initial_angle)
    step = 2**q
    return FrictionConeApprox(q, tuple(tuple(j * step for j in range(base)) for _ in range(m)), initial_angle)


def uniform_cone(level: int, q: int, m: int = 1, initial_angle: float = math.pi / 2) -> FrictionConeApprox:
    """Every sector at the given level: base * 2^(level - 1) evenly spaced edges"""
    if not 1 <= level <= q + 1:
        raise InvalidInputError(f"uniform level must be within [1, {q + 1}], got {level}")
    base = _base_sectors(initial_angle)
    width = 2 ** (q + 1 - level)
    ticks = tuple(range(0, base * 2**q, width))
    return FrictionConeApprox(q, tuple(ticks for _ in range(m)), initial_angle)


@dataclass
class ContactFriction:
    """Friction variables of one contact"""

    index: int
    beta: List[Variable] = field(default_factory=list)
    alpha: List[Variable] = field(default_factory=list)
    z: List[Variable] = field(default_factory=list)
    slide: Optional[Variable] = None

    @property
    def frictionless(self) -> bool:
        return not self.beta


def assemble_friction_constraints(
    problem: SpatialProblem, approx: FrictionConeApprox, friction_mode: str = "mdp"
) -> List[ContactFriction]:
    """
    Emit the relaxed Coulomb law for every contact

    Args:
        problem: core model from assemble_core_constraints
        approx: edge set per contact
        friction_mode: "mdp" for the full law (slide flag, SOS2 coupling of
            force and motion) or "cone" for the friction cone alone

    Returns:
        One ContactFriction per contact
    """
    if friction_mode not in FRICTION_MODES:
        raise InvalidInputError(f"friction_mode must be one of {FRICTION_MODES}, got {friction_mode!r}")
    grasp = problem.grasp
    if approx.m != grasp.m:
        raise InvalidInputError(f"friction cone covers {approx.m} contacts, grasp has {grasp.m}")
    model = problem.model
    out: List[ContactFriction] = []

    for i in range(grasp.m):
        mu = float(grasp.contacts[i].mu)
        ct = problem.tangential_force(i)
        cn = problem.normal_force(i)
        name = problem.note("friction_cone", f"friction[{i}]")
        if mu == 0.0:
            model.add_constraint(ct[0] == 0.0, f"{name}.t1")
            model.add_constraint(ct[1] == 0.0, f"{name}.t2")
            out.append(ContactFriction(i))
            continue

        D = approx.edge_matrix(i)
        lengths = approx.edge_lengths(i)
        k = D.shape[1]
        beta = model.add_vars(k, f"beta[{i}]", lb=0.0)
        for axis in range(2):
            model.add_constraint(ct[axis] - _combination(D[axis], beta) == 0.0, f"{name}.force_t{axis + 1}")
        model.add_constraint(lin_sum(beta) - mu * cn <= 0.0, f"{name}.outer")
        if friction_mode == "cone":
            out.append(ContactFriction(i, beta))
            continue

        alpha = model.add_vars(k, f"alpha[{i}]", lb=0.0)
        dt = problem.tangential_motion(i)
        for axis in range(2):
            model.add_constraint(dt[axis] + _combination(D[axis], alpha) == 0.0, f"{name}.motion_t{axis + 1}")

        # z[k] repeats edge 0 so the last sector can wrap around
        z = model.add_vars(k + 1, f"z[{i}]", lb=0.0)
        model.add_sos2(z, f"{name}.sector")
        for weights, label in ((beta, "beta"), (alpha, "alpha")):
            model.add_constraint(weights[0] - z[0] - z[k] <= 0.0, f"{name}.{label}_sos[0]")
            for s in range(1, k):
                model.add_constraint(weights[s] - z[s] <= 0.0, f"{name}.{label}_sos[{s}]")

        slide = model.add_binary(f"slide[{i}]")
        model.add_indicator(slide, 0, [lin_sum(alpha) == 0.0], f"{name}.roll")
        model.add_indicator(slide, 1, [_combination(lengths, beta) - mu * cn >= 0.0], f"{name}.slide")
        out.append(ContactFriction(i, beta, alpha, z, slide))
    return out


def _combination(coefficients, variables: Sequence[Variable]) -> LinExpr:
    expr = LinExpr()
    for coef, var in zip(coefficients, variables):
        if coef != 0.0:
            expr.add_inplace(var, float(coef))
    return expr


def apply_normal_uncertainty(
    problem: SpatialProblem,
    approx: FrictionConeApprox,
    frictions: Sequence[ContactFriction],
    eta: float,
) -> List[LinExpr]:
    """
    Add unilaterality on the worst-case normal motion of every contact

    d_n_hat = cos(eta) d_n + sin(eta) sum_s l_{p_s + 1} alpha_s, with p_s the
    level of edge s. d_n > 0 separates, so the tilted normal leans into the
    sliding direction and unloads the contact. eta = 0 leaves the nominal d_n
    in place.

    Returns:
        The normal-motion expressions used, one per contact
    """
    if not 0.0 <= eta < math.pi / 2:
        raise InvalidInputError(f"normal uncertainty must lie in [0, pi/2), got {eta}")
    used: List[LinExpr] = []
    for fr in frictions:
        i = fr.index
        dn = problem.normal_motion(i)
        if eta == 0.0:
            expr = dn
        else:
            if not fr.frictionless and not fr.alpha:
                raise InvalidInputError("normal uncertainty needs the mdp friction mode")
            expr = dn * math.cos(eta)
            levels = approx.edge_levels(i)
            for a, p in zip(fr.alpha, levels):
                expr.add_inplace(a, math.sin(eta) * edge_length(int(p) + 1, approx.q, approx.initial_angle))
        problem.add_unilaterality(i, expr)
        used.append(expr)
    return used


def active_sectors(
    approx: FrictionConeApprox, i: int, beta: np.ndarray, alpha: np.ndarray, tol: float = 1e-9
) -> List[int]:
    """
    Sectors holding the force and motion weights of contact i

    Two adjacent nonzero edges name their sector; a single nonzero edge names
    both sectors it bounds.
    """
    k = approx.edge_count(i)
    weights = np.maximum(np.abs(beta), np.abs(alpha) if len(alpha) else 0.0)
    scale = max(1.0, float(weights.max(initial=0.0)))
    support = [s for s in range(k) if weights[s] > tol * scale]
    if not support:
        return []
    if len(support) == 1:
        e = support[0]
        return sorted({(e - 1) % k, e})
    if len(support) == 2:
        a, b = support
        if b == a + 1:
            return [a]
        if (a, b) == (0, k - 1):
            return [k - 1]
    logger.warning(f"[WARN] Contact {i}: friction weights on non-adjacent edges {support}")
    return sorted({s for e in support for s in ((e - 1) % k, e)})


@dataclass
class RefinementRound:
    round: int
    status: str
    objective: Optional[float]
    nodes: int
    levels: List[int]
    edges: List[int]
    refined: List[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "round": self.round,
            "status": self.status,
            "objective": self.objective,
            "nodes": self.nodes,
            "levels": self.levels,
            "edges": self.edges,
            "refined": self.refined,
        }


@dataclass
class RefinementTrace:
    rounds: List[RefinementRound] = field(default_factory=list)

    @property
    def objectives(self) -> List[Optional[float]]:
        return [r.objective for r in self.rounds]

    def is_monotone(self, maximize: bool = True, tol: float = 1e-7) -> bool:
        """Objective never improves across rounds (each round solves a tighter relaxation)"""
        values = [v for v in self.objectives if v is not None]
        for prev, cur in zip(values, values[1:]):
            if maximize and cur > prev + tol * max(1.0, abs(prev)):
                return False
            if not maximize and cur < prev - tol * max(1.0, abs(prev)):
                return False
        return True


@dataclass
class RelaxationResult:
    feasible: bool
    solution: Optional[EquilibriumSolution]
    approx: FrictionConeApprox
    trace: RefinementTrace
    problem: Optional[SpatialProblem] = None
    result: Optional[SolveResult] = None
    handles: Handles = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "feasible" if self.feasible else "infeasible"

    @property
    def objective(self) -> Optional[float]:
        return self.result.objective if self.result is not None else None

    def value(self, item) -> float:
        if self.result is None:
            raise InvalidModelError("no solve has run")
        return self.result.value(item)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "status": self.status,
            "rounds": len(self.trace.rounds),
            "cone": self.approx.summary(),
        }
        if self.solution is not None:
            out["solution"] = self.solution.to_dict()
        return out


@dataclass
class _Round:
    problem: SpatialProblem
    frictions: List[ContactFriction]
    handles: Handles
    result: SolveResult


def solve_relaxation(
    grasp: GraspModel,
    approx: FrictionConeApprox,
    w: WrenchSource = None,
    f_c: WrenchSource = None,
    prepare: Optional[Callable[[LinearModel], Handles]] = None,
    finalize: Optional[Callable[[SpatialProblem, Handles], None]] = None,
    eta: float = 0.0,
    friction_mode: str = "mdp",
    solver: Optional[SolverSettings] = None,
    label: str = "relaxation",
) -> _Round:
    """Assemble and solve the relaxation once for a fixed edge set"""
    model = LinearModel(f"{label}:{grasp.name}")
    handles: Handles = prepare(model) if prepare is not None else {}
    handles = handles or {}
    w_src = (lambda _m: w(handles)) if callable(w) else w
    fc_src = (lambda _m: f_c(handles)) if callable(f_c) else f_c
    problem = assemble_core_constraints(
        grasp, w_src, fc_src, unilaterality=False, settings=SpatialSettings.from_config(), model=model
    )
    frictions = assemble_friction_constraints(problem, approx, friction_mode)
    apply_normal_uncertainty(problem, approx, frictions, eta)
    if finalize is not None:
        finalize(problem, handles)
    result = solve_mip(model, solver)
    if result.status == SolveStatus.UNBOUNDED:
        raise InvalidModelError(f"relaxation objective unbounded for {grasp.name!r}; bound the query variables")
    return _Round(problem, frictions, handles, result)


def _coarse_sectors(approx: FrictionConeApprox, i: int, sectors: Sequence[int]) -> List[int]:
    """
    Sectors to bisect so the listed ones end up at the target angle

    A sector already at the target still carries the longer edge of a coarser
    neighbour; that neighbour is bisected instead until both edges are short.
    """
    k = approx.edge_count(i)
    out = set()
    for s in sectors:
        if not approx.at_target(i, s):
            out.add(s)
            continue
        out.update(n for n in ((s - 1) % k, (s + 1) % k) if not approx.at_target(i, n))
    return sorted(out)


def _next_cone(
    rnd: _Round, approx: FrictionConeApprox, friction_mode: str, settings: RelaxationSettings
) -> Tuple[FrictionConeApprox, List[int], List[float]]:
    """Refine the active sectors that still constrain the answer; also report per-contact sector angles"""
    problem, result = rnd.problem, rnd.result
    grasp = problem.grasp
    refined: List[int] = []
    angles: List[float] = []
    for fr in rnd.frictions:
        i = fr.index
        if fr.frictionless:
            refined.append(0)
            angles.append(0.0)
            continue
        beta = result.values(fr.beta)
        alpha = result.values(fr.alpha) if fr.alpha else np.zeros(0)
        ct = result.values(problem.tangential_force(i))
        cn = result.value(problem.normal_force(i))
        dt = result.values(problem.tangential_motion(i))
        mu = grasp.contacts[i].mu
        sectors = active_sectors(approx, i, beta, alpha)
        sliding = fr.slide is not None and result.value(fr.slide) > 0.5 and np.linalg.norm(dt) > settings.motion_tol
        outside = np.linalg.norm(ct) - mu * cn > settings.cone_tol * max(1.0, mu * cn)

        todo: List[int] = []
        if sliding:
            todo = sectors
        elif outside:
            todo = sectors or approx.sectors_containing(i, ct)
        todo = _coarse_sectors(approx, i, todo)
        widths = approx.sector_angles(i)
        shown = sectors or list(range(approx.edge_count(i)))
        angles.append(float(max(widths[s] for s in shown)))
        refined.append(len(todo))
        if todo:
            approx = approx.refine_sectors(i, todo)
    return approx, refined, angles


def _write_diagnostic(path: Optional[Union[str, Path]], record: RefinementRound) -> None:
    if path is None:
        return
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def solve_with_refinement(
    grasp: GraspModel,
    w: WrenchSource = None,
    f_c: WrenchSource = None,
    prepare: Optional[Callable[[LinearModel], Handles]] = None,
    finalize: Optional[Callable[[SpatialProblem, Handles], None]] = None,
    q: Optional[int] = None,
    eta: Optional[float] = None,
    friction_mode: str = "mdp",
    settings: Optional[RelaxationSettings] = None,
    solver: Optional[SolverSettings] = None,
    approx: Optional[FrictionConeApprox] = None,
    diagnostics: Optional[Union[str, Path]] = None,
) -> RelaxationResult:
    """
    Solve the relaxed problem, refining active friction sectors until all reach the target angle

    An infeasible relaxation at any level proves the exact problem infeasible,
    so the loop stops there.

    Args:
        grasp: spatial grasp
        w: applied wrench, numbers or a callable over the prepared handles
        f_c: commanded actuator forces, numbers or a callable over the handles
        prepare: called on each fresh model before assembly; returns handles
            (extra decision variables the query needs)
        finalize: called after assembly to add side constraints and the objective
        q: target exponent (default: settings)
        eta: contact normal uncertainty in rad (default 0, nominal normals)
        friction_mode: "mdp" or "cone"
        approx: starting edge set (default: the initial cone)
        diagnostics: path of a line-delimited JSON file receiving one record per round

    Returns:
        RelaxationResult with the last round's solution and the refinement trace
    """
    if grasp.is_planar:
        raise InvalidInputError("the relaxation solver needs a spatial grasp")
    settings = settings or RelaxationSettings.from_config()
    if q is not None and q != settings.q:
        settings = replace(settings, q=q)
    eta = 0.0 if eta is None else float(eta)
    approx = approx or initial_cone(settings.q, grasp.m, settings.initial_angle)
    if approx.q != settings.q:
        raise InvalidInputError(f"starting cone uses q={approx.q}, solver expects q={settings.q}")
    trace = RefinementTrace()

    for n in range(1, settings.max_rounds + 1):
        rnd = solve_relaxation(
            grasp, approx, w, f_c, prepare, finalize, eta, friction_mode, solver, label=f"relaxation.r{n}"
        )
        result = rnd.result
        levels = [int(approx.sector_levels(i).max()) for i in range(approx.m)]
        edges = [approx.edge_count(i) for i in range(approx.m)]
        if not result.ok:
            record = RefinementRound(n, result.status.value, None, result.nodes, levels, edges, [0] * approx.m)
            trace.rounds.append(record)
            _write_diagnostic(diagnostics, record)
            logger.info(f"Relaxation infeasible for {grasp.name!r} at round {n}")
            return RelaxationResult(False, None, approx, trace, rnd.problem, result, rnd.handles)

        refined_approx, refined, angles = _next_cone(rnd, approx, friction_mode, settings)
        record = RefinementRound(n, result.status.value, result.objective, result.nodes, levels, edges, refined)
        trace.rounds.append(record)
        _write_diagnostic(diagnostics, record)
        logger.debug(f"Refinement round {n}: objective={result.objective} edges={edges} refined={refined}")

        if refined_approx is approx:
            solution = rnd.problem.solution(result)
            solution.sector_angles = angles
            logger.info(f"[OK] Relaxation feasible for {grasp.name!r} after {n} rounds")
            return RelaxationResult(True, solution, approx, trace, rnd.problem, result, rnd.handles)
        approx = refined_approx

    raise ResourceLimitError(
        f"friction cone refinement did not settle within {settings.max_rounds} rounds",
        incumbent=trace.objectives[-1] if trace.rounds else None,
    )
