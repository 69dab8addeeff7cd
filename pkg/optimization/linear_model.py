"""
Linear Model
Variables, linear expressions, constraints, indicator constraints and SOS2 sets
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import InvalidModelError

INF = math.inf

Number = Union[int, float]


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class ObjectiveSense(str, Enum):
    NONE = "none"
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class _ExprOps:
    """Arithmetic shared by variables and expressions"""

    # numpy scalars defer to the reflected operators below
    __array_ufunc__ = None

    def to_expr(self) -> "LinExpr":
        raise NotImplementedError

    def __add__(self, other):
        return self.to_expr()._combine(other, 1.0)

    def __radd__(self, other):
        return self.to_expr()._combine(other, 1.0)

    def __sub__(self, other):
        return self.to_expr()._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self.to_expr())._combine(other, 1.0)

    def __mul__(self, other):
        if isinstance(other, _ExprOps):
            raise InvalidModelError("product of two decision variables is not linear")
        return self.to_expr()._scaled(float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.to_expr()._scaled(1.0 / float(other))

    def __neg__(self):
        return self.to_expr()._scaled(-1.0)

    def __pos__(self):
        return self.to_expr()

    def __le__(self, other):
        return Constraint.from_difference(self.to_expr()._combine(other, -1.0), Sense.LE)

    def __ge__(self, other):
        return Constraint.from_difference(self.to_expr()._combine(other, -1.0), Sense.GE)

    def __eq__(self, other):  # type: ignore[override]
        return Constraint.from_difference(self.to_expr()._combine(other, -1.0), Sense.EQ)

    __hash__ = None  # type: ignore[assignment]


class Variable(_ExprOps):
    """A decision variable; identity is its index in the owning model"""

    __slots__ = ("index", "name", "lb", "ub", "binary")

    def __init__(self, index: int, name: str, lb: float, ub: float, binary: bool):
        self.index = index
        self.name = name
        self.lb = lb
        self.ub = ub
        self.binary = binary

    def to_expr(self) -> "LinExpr":
        return LinExpr({self.index: 1.0})

    def __repr__(self) -> str:
        return f"Variable({self.name!r}, index={self.index})"


class LinExpr(_ExprOps):
    """Sparse affine expression sum(coef * x[index]) + constant"""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Dict[int, float]] = None, constant: float = 0.0):
        self.terms: Dict[int, float] = dict(terms or {})
        self.constant = float(constant)

    def to_expr(self) -> "LinExpr":
        return self

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def _combine(self, other, factor: float) -> "LinExpr":
        result = self.copy()
        result.add_inplace(other, factor)
        return result

    def _scaled(self, factor: float) -> "LinExpr":
        return LinExpr(
            {k: v * factor for k, v in self.terms.items()}, self.constant * factor
        )

    def add_inplace(self, other, factor: float = 1.0) -> "LinExpr":
        """Add factor * other to this expression in place"""
        if isinstance(other, Variable):
            self.terms[other.index] = self.terms.get(other.index, 0.0) + factor
        elif isinstance(other, LinExpr):
            for k, v in other.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + factor * v
            self.constant += factor * other.constant
        else:
            self.constant += factor * float(other)
        return self

    def value(self, x: Sequence[float]) -> float:
        return self.constant + sum(v * float(x[k]) for k, v in self.terms.items())

    def __repr__(self) -> str:
        body = " + ".join(f"{v:g}*x{k}" for k, v in sorted(self.terms.items()))
        return f"LinExpr({body or '0'} + {self.constant:g})"


def lin_sum(items: Iterable[Union[Number, Variable, LinExpr]]) -> LinExpr:
    """Sum many variables/expressions without quadratic copying"""
    total = LinExpr()
    for item in items:
        total.add_inplace(item)
    return total


def dot(coefficients: Iterable[Number], items: Iterable[Union[Variable, LinExpr]]) -> LinExpr:
    """Linear combination sum(a_i * item_i)"""
    total = LinExpr()
    for a, item in zip(coefficients, items):
        a = float(a)
        if a != 0.0:
            total.add_inplace(item, a)
    return total


def as_expr(value: Union[Number, Variable, LinExpr]) -> LinExpr:
    if isinstance(value, _ExprOps):
        return value.to_expr()
    return LinExpr(constant=float(value))


@dataclass
class Constraint:
    """terms . x  (sense)  rhs"""

    terms: Dict[int, float]
    sense: Sense
    rhs: float
    name: Optional[str] = None

    @classmethod
    def from_difference(cls, expr: LinExpr, sense: Sense) -> "Constraint":
        terms = {k: v for k, v in expr.terms.items() if v != 0.0}
        return cls(terms, sense, -expr.constant)

    def activity(self, x: Sequence[float]) -> float:
        return sum(v * float(x[k]) for k, v in self.terms.items())

    def violation(self, x: Sequence[float]) -> float:
        lhs = self.activity(x)
        if self.sense == Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class IndicatorConstraint:
    """binary == trigger  implies  every constraint in the body"""

    binary: int
    trigger: int
    constraints: Tuple[Constraint, ...]
    name: Optional[str] = None


@dataclass
class Sos2Set:
    """Ordered nonnegative variables, at most two nonzero and those adjacent"""

    members: Tuple[int, ...]
    name: Optional[str] = None


@dataclass
class SolveResult:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    nodes: int = 0
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)

    def value(self, item: Union[Number, Variable, LinExpr]) -> float:
        if self.x is None:
            raise InvalidModelError(f"no assignment available (status {self.status.value})")
        return as_expr(item).value(self.x)

    def values(self, items: Sequence[Union[Number, Variable, LinExpr]]) -> np.ndarray:
        return np.array([self.value(item) for item in items], dtype=float)


class LinearModel:
    """Continuous/binary variables with linear, indicator and SOS2 constraints"""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.indicators: List[IndicatorConstraint] = []
        self.sos2_sets: List[Sos2Set] = []
        self.objective: Optional[LinExpr] = None
        self.objective_sense = ObjectiveSense.NONE

    # -- variables -----------------------------------------------------------
    def add_var(
        self, name: str, lb: float = 0.0, ub: float = INF, binary: bool = False
    ) -> Variable:
        if binary:
            lb, ub = 0.0, 1.0
        if lb > ub:
            raise InvalidModelError(f"variable {name}: lower bound {lb} exceeds upper bound {ub}")
        var = Variable(len(self.variables), name, float(lb), float(ub), binary)
        self.variables.append(var)
        return var

    def add_vars(
        self, count: int, name: str, lb: float = 0.0, ub: float = INF, binary: bool = False
    ) -> List[Variable]:
        return [self.add_var(f"{name}[{i}]", lb, ub, binary) for i in range(count)]

    def add_binary(self, name: str) -> Variable:
        return self.add_var(name, binary=True)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> List[int]:
        return [v.index for v in self.variables if v.binary]

    @property
    def is_mip(self) -> bool:
        return bool(self.binaries or self.indicators or self.sos2_sets)

    # -- constraints ---------------------------------------------------------
    def add_constraint(self, constraint: Constraint, name: Optional[str] = None) -> Constraint:
        if not isinstance(constraint, Constraint):
            raise InvalidModelError(
                f"expected a Constraint, got {type(constraint).__name__} "
                "(comparisons between plain numbers are not constraints)"
            )
        self._check_terms(constraint.terms, name or constraint.name)
        if name is not None:
            constraint.name = name
        self.constraints.append(constraint)
        return constraint

    def add_indicator(
        self,
        binary: Variable,
        trigger: int,
        constraints: Iterable[Constraint],
        name: Optional[str] = None,
    ) -> IndicatorConstraint:
        if not binary.binary:
            raise InvalidModelError(f"indicator on non-binary variable {binary.name}")
        if trigger not in (0, 1):
            raise InvalidModelError(f"indicator trigger must be 0 or 1, got {trigger}")
        body = tuple(constraints)
        for c in body:
            if not isinstance(c, Constraint):
                raise InvalidModelError(f"indicator {name}: body entries must be constraints")
            self._check_terms(c.terms, name)
        indicator = IndicatorConstraint(binary.index, trigger, body, name)
        self.indicators.append(indicator)
        return indicator

    def add_sos2(self, members: Sequence[Variable], name: Optional[str] = None) -> Sos2Set:
        indices = tuple(v.index for v in members)
        for v in members:
            if v.lb < 0:
                raise InvalidModelError(f"SOS2 member {v.name} must be nonnegative")
        self._check_terms({i: 1.0 for i in indices}, name)
        sos = Sos2Set(indices, name)
        self.sos2_sets.append(sos)
        return sos

    def _check_terms(self, terms: Dict[int, float], name: Optional[str]) -> None:
        n = len(self.variables)
        for k, v in terms.items():
            if not 0 <= k < n:
                raise InvalidModelError(f"constraint {name}: unknown variable index {k}")
            if not math.isfinite(v):
                raise InvalidModelError(f"constraint {name}: non-finite coefficient")

    # -- objective -----------------------------------------------------------
    def minimize(self, expr: Union[Number, Variable, LinExpr]) -> None:
        self.objective = as_expr(expr)
        self.objective_sense = ObjectiveSense.MINIMIZE

    def maximize(self, expr: Union[Number, Variable, LinExpr]) -> None:
        self.objective = as_expr(expr)
        self.objective_sense = ObjectiveSense.MAXIMIZE

    def clear_objective(self) -> None:
        self.objective = None
        self.objective_sense = ObjectiveSense.NONE

    # -- verification --------------------------------------------------------
    def check_assignment(self, x: Sequence[float], tol: float = 1e-7, int_tol: float = 1e-6) -> List[str]:
        """Return a description of every violated requirement (empty when feasible)"""
        problems: List[str] = []
        for v in self.variables:
            val = float(x[v.index])
            if val < v.lb - tol or val > v.ub + tol:
                problems.append(f"bound of {v.name}: {val:g} not in [{v.lb:g}, {v.ub:g}]")
            if v.binary and min(abs(val), abs(1.0 - val)) > int_tol:
                problems.append(f"binary {v.name} fractional: {val:g}")
        for i, c in enumerate(self.constraints):
            if c.violation(x) > tol:
                problems.append(f"constraint {c.name or i} violated by {c.violation(x):g}")
        for ind in self.indicators:
            if round(float(x[ind.binary])) == ind.trigger:
                for c in ind.constraints:
                    if c.violation(x) > tol:
                        problems.append(
                            f"indicator {ind.name or ind.binary} body {c.name or ''} "
                            f"violated by {c.violation(x):g}"
                        )
        for sos in self.sos2_sets:
            nonzero = [pos for pos, k in enumerate(sos.members) if abs(float(x[k])) > tol]
            if len(nonzero) > 2 or (len(nonzero) == 2 and nonzero[1] - nonzero[0] != 1):
                problems.append(f"SOS2 {sos.name or sos.members} has nonzero members {nonzero}")
        return problems

    def __repr__(self) -> str:
        return (
            f"LinearModel({self.name!r}, vars={self.num_vars}, rows={len(self.constraints)}, "
            f"indicators={len(self.indicators)}, sos2={len(self.sos2_sets)})"
        )
