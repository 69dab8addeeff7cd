"""
Spatial Constraints
Equilibrium, relative motion, unilaterality and nonbackdrivable actuator models
as one mixed-integer model shared by the iterative and relaxation solvers
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from config_loader import Config, config as default_config
from errors import InvalidInputError
from grasp_model import EquilibriumSolution, GraspModel
from optimization import LinearModel, LinExpr, SolveResult, Variable, as_expr, dot, lin_sum

logger = logging.getLogger(__name__)

ExprLike = Union[float, Variable, LinExpr]
ExprSource = Union[Sequence[ExprLike], np.ndarray, Callable[[LinearModel], Sequence[ExprLike]]]


@dataclass(frozen=True)
class SpatialSettings:
    open_margin: float = 1e-9

    @classmethod
    def from_config(cls, cfg: Optional[Config] = None) -> "SpatialSettings":
        cfg = cfg or default_config
        return cls(open_margin=float(cfg.get("spatial", "open_margin", default=cls.open_margin)))


@dataclass
class SpatialProblem:
    """The assembled model plus handles on every variable block and constraint family"""

    grasp: GraspModel
    model: LinearModel
    c: List[Variable]
    r: List[Variable]
    q: List[Variable]
    tau: List[Variable]
    f: List[Variable]
    y: List[Variable]
    z: List[Variable]
    d: List[LinExpr]
    w: List[LinExpr]
    fc: List[LinExpr]
    open_margin: float
    symbols: Dict[str, List[str]] = field(default_factory=dict)

    def note(self, symbol: str, name: str) -> str:
        self.symbols.setdefault(symbol, []).append(name)
        return name

    # -- per-contact views ---------------------------------------------------
    def normal_force(self, i: int) -> Variable:
        return self.c[3 * i]

    def tangential_force(self, i: int) -> List[Variable]:
        return self.c[3 * i + 1 : 3 * i + 3]

    def normal_motion(self, i: int) -> LinExpr:
        return self.d[3 * i]

    def tangential_motion(self, i: int) -> List[LinExpr]:
        return self.d[3 * i + 1 : 3 * i + 3]

    def net_wrench(self) -> List[LinExpr]:
        """G c + w as expressions"""
        G = self.grasp.G
        return [dot(G[row], self.c) + self.w[row] for row in range(6)]

    # -- constraint families -------------------------------------------------
    def add_unilaterality(self, i: int, normal_motion: Optional[LinExpr] = None) -> None:
        """
        Persist/separate indicator pair of contact i

        y=1 keeps the contact: c_n = -k d_n and d_n <= 0.
        y=0 separates it: c_n = 0 and d_n >= open margin.
        """
        dn = self.normal_motion(i) if normal_motion is None else normal_motion
        cn = self.normal_force(i)
        k = float(self.grasp.contacts[i].stiffness)
        name = self.note("unilaterality", f"unilateral[{i}]")
        self.model.add_indicator(self.y[i], 1, [cn + k * dn == 0.0, dn <= 0.0], f"{name}.persist")
        self.model.add_indicator(self.y[i], 0, [cn == 0.0, dn >= self.open_margin], f"{name}.separate")

    def solution(self, result: SolveResult) -> EquilibriumSolution:
        return EquilibriumSolution(
            c=result.values(self.c),
            r=result.values(self.r),
            w_net=result.values(self.net_wrench()),
            q=result.values(self.q),
            tau=result.values(self.tau),
            f=result.values(self.f),
            y=np.round(result.values(self.y)),
            z=np.round(result.values(self.z)),
        )


def _expressions(source: Optional[ExprSource], model: LinearModel, size: int, label: str) -> List[LinExpr]:
    if source is None:
        return [LinExpr() for _ in range(size)]
    values = source(model) if callable(source) else source
    exprs = [as_expr(v) for v in values]
    if len(exprs) != size:
        raise InvalidInputError(f"{label} must have {size} components, got {len(exprs)}")
    return exprs


def assemble_core_constraints(
    grasp: GraspModel,
    w: Optional[ExprSource] = None,
    f_c: Optional[ExprSource] = None,
    include_object_equilibrium: bool = True,
    unilaterality: bool = True,
    settings: Optional[SpatialSettings] = None,
    model: Optional[LinearModel] = None,
) -> SpatialProblem:
    """
    Assemble the exact quasi-static grasp model without friction

    Args:
        grasp: spatial grasp
        w: applied wrench, 6 numbers or expressions, or a callable building them on the model
        f_c: commanded actuator forces (default: the hand's commanded values)
        include_object_equilibrium: emit G c + w = 0
        unilaterality: emit the persist/separate indicators on the nominal d_n
        settings: strict-inequality margin
        model: model to extend (a fresh one by default)

    Returns:
        SpatialProblem with the model and its symbol table
    """
    if grasp.is_planar:
        raise InvalidInputError("spatial constraints need a spatial grasp; use the planar solver for planar files")
    settings = settings or SpatialSettings.from_config()
    model = model or LinearModel(f"spatial:{grasp.name}")
    m, l, a = grasp.m, grasp.joint_count, grasp.actuator_count

    w_expr = _expressions(w, model, 6, "applied wrench")
    fc_expr = _expressions(grasp.commanded if f_c is None else f_c, model, a, "commanded actuator forces")

    c: List[Variable] = []
    for i in range(m):
        c.append(model.add_var(f"c[{i}].n", lb=0.0))
        c.append(model.add_var(f"c[{i}].t1", lb=-np.inf))
        c.append(model.add_var(f"c[{i}].t2", lb=-np.inf))
    r = model.add_vars(6, "r", lb=-np.inf)
    q = model.add_vars(l, "q", lb=0.0)
    tau = model.add_vars(l, "tau", lb=-np.inf)
    f = model.add_vars(a, "f", lb=-np.inf)
    y = [model.add_binary(f"y[{i}]") for i in range(m)]
    z = [model.add_binary(f"z[{j}]") for j in range(a)]

    G, J, R = grasp.G, grasp.J, grasp.R
    d = []
    for row in range(3 * m):
        expr = dot(G[:, row], r)
        if l:
            expr.add_inplace(dot(J[row], q), -1.0)
        d.append(expr)

    problem = SpatialProblem(grasp, model, c, r, q, tau, f, y, z, d, w_expr, fc_expr, settings.open_margin)
    problem.symbols["relative_motion"] = [f"d[{row}]" for row in range(3 * m)]
    problem.symbols["joint_unilaterality"] = [v.name for v in q]

    if include_object_equilibrium:
        for row in range(6):
            name = problem.note("object_equilibrium", f"object_eq[{row}]")
            model.add_constraint(dot(G[row], c) + w_expr[row] == 0.0, name)

    # hand equilibrium: contact load on each joint is carried by its drive torque
    for j in range(l):
        name = problem.note("hand_equilibrium", f"hand_eq[{j}]")
        model.add_constraint(dot(J[:, j], c) - tau[j] == 0.0, name)
        name = problem.note("transmission", f"transmission[{j}]")
        model.add_constraint(tau[j] - dot(R[j], f) == 0.0, name)

    if unilaterality:
        for i in range(m):
            problem.add_unilaterality(i)

    # nonbackdrivable actuators: locked (z=1) absorbs extra load, free (z=0) moves forward
    for k in range(a):
        motion = lin_sum(float(R[j, k]) * q[j] for j in range(l) if R[j, k] != 0.0)
        name = problem.note("actuator_model", f"actuator[{k}]")
        model.add_indicator(z[k], 1, [f[k] - fc_expr[k] >= 0.0, motion == 0.0], f"{name}.locked")
        model.add_indicator(z[k], 0, [f[k] - fc_expr[k] == 0.0, motion >= settings.open_margin], f"{name}.driving")

    logger.debug(
        f"Core constraints for {grasp.name!r}: {model.num_vars} vars, {len(model.constraints)} rows, "
        f"{len(model.indicators)} indicators"
    )
    return problem
