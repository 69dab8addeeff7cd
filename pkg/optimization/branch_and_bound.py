"""
Branch and Bound
Exact mixed-integer layer with indicator branching and SOS2 set splitting
"""

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from errors import ResourceLimitError
from optimization.linear_model import LinearModel, ObjectiveSense, SolveResult, SolveStatus
from optimization.settings import SolverSettings
from optimization.simplex import GE, LE, SENSE_CODE, LPArrays, compile_model, solve_arrays

logger = logging.getLogger(__name__)


@dataclass
class Node:
    """Subproblem: fixed binaries plus an allowed window per SOS2 set"""

    bound: float
    depth: int
    seq: int
    fixings: Dict[int, int] = field(default_factory=dict)
    windows: Dict[int, Tuple[int, int]] = field(default_factory=dict)


class BranchAndBound:
    """
    Best-bound branch and bound over binaries and SOS2 sets

    Indicator bodies are added to a node's LP only once their binary is fixed
    to the trigger value; unfixed indicators impose nothing (no big-M).
    Until the first incumbent is found nodes are explored depth-first.
    """

    def __init__(self, model: LinearModel, settings: Optional[SolverSettings] = None):
        self.model = model
        self.settings = settings or SolverSettings.from_config()
        self.arrays = compile_model(model)
        self.has_objective = model.objective_sense != ObjectiveSense.NONE
        self.binaries = model.binaries
        self.bodies: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        n = model.num_vars
        grouped: Dict[Tuple[int, int], List] = {}
        for ind in model.indicators:
            grouped.setdefault((ind.binary, ind.trigger), []).extend(ind.constraints)
        for key, constraints in grouped.items():
            A = np.zeros((len(constraints), n))
            b = np.zeros(len(constraints))
            senses = np.zeros(len(constraints), dtype=int)
            for i, con in enumerate(constraints):
                for k, v in con.terms.items():
                    A[i, k] += v
                b[i] = con.rhs
                senses[i] = SENSE_CODE[con.sense]
            self.bodies[key] = (A, senses, b)
        self.nodes_solved = 0

    # -- node LP -------------------------------------------------------------
    def _node_arrays(self, node: Node) -> Optional[LPArrays]:
        """Node LP, or None when the SOS2 windows contradict a member's lower bound"""
        base = self.arrays
        lb = base.lb.copy()
        ub = base.ub.copy()
        blocks_A = [base.A]
        blocks_s = [base.senses]
        blocks_b = [base.b]
        for j, value in node.fixings.items():
            lb[j] = ub[j] = float(value)
            body = self.bodies.get((j, value))
            if body is not None:
                blocks_A.append(body[0])
                blocks_s.append(body[1])
                blocks_b.append(body[2])
        for k, (lo, hi) in node.windows.items():
            for pos, var in enumerate(self.model.sos2_sets[k].members):
                if pos < lo or pos > hi:
                    if lb[var] > self.settings.feasibility_tol:
                        return None
                    lb[var] = ub[var] = 0.0
        return LPArrays(
            base.c,
            np.vstack(blocks_A),
            np.concatenate(blocks_s),
            np.concatenate(blocks_b),
            lb,
            ub,
            base.constant,
            base.maximize,
        )

    def _body_violation(self, j: int, value: int, x: np.ndarray) -> float:
        body = self.bodies.get((j, value))
        if body is None:
            return 0.0
        A, senses, b = body
        act = A @ x
        worst = 0.0
        for i in range(len(b)):
            if senses[i] == LE:
                worst = max(worst, act[i] - b[i])
            elif senses[i] == GE:
                worst = max(worst, b[i] - act[i])
            else:
                worst = max(worst, abs(act[i] - b[i]))
        return worst

    # -- branching -----------------------------------------------------------
    def _branching_choice(self, node: Node, x: np.ndarray):
        int_tol = self.settings.integrality_tol
        for j in self.binaries:
            if j in node.fixings:
                continue
            v = float(x[j])
            if min(abs(v), abs(1.0 - v)) > int_tol:
                return ("binary", j, v)
            if self._body_violation(j, int(round(v)), x) > self.settings.feasibility_tol:
                return ("binary", j, v)
        for k, sos in enumerate(self.model.sos2_sets):
            lo, hi = node.windows.get(k, (0, len(sos.members) - 1))
            values = np.array([max(float(x[v]), 0.0) for v in sos.members])
            nonzero = [p for p in range(lo, hi + 1) if values[p] > self.settings.feasibility_tol]
            if len(nonzero) > 2 or (len(nonzero) == 2 and nonzero[1] - nonzero[0] != 1):
                weights = values[nonzero]
                mean = float(np.dot(nonzero, weights) / weights.sum())
                split = int(round(mean))
                split = min(max(split, nonzero[0] + 1), nonzero[-1] - 1)
                return ("sos2", k, (lo, split, hi), values)
        return None

    def _unbounded_choice(self, node: Node):
        """
        Branch that may bound an unbounded node relaxation

        Fixing a binary adds its indicator bodies and narrowing an SOS2 window
        zeroes members; a node with neither left to do is unbounded for real.
        """
        for j in self.binaries:
            if j not in node.fixings and ((j, 0) in self.bodies or (j, 1) in self.bodies):
                return ("binary", j, 0.5)
        for k, sos in enumerate(self.model.sos2_sets):
            lo, hi = node.windows.get(k, (0, len(sos.members) - 1))
            if hi - lo > 1:
                return ("sos2", k, (lo, (lo + hi) // 2, hi), np.zeros(len(sos.members)))
        return None

    def _children(self, node: Node, choice, counter) -> List[Node]:
        """Children in exploration order (first element explored first)"""
        if choice[0] == "binary":
            _, j, v = choice
            order = (1, 0) if v >= 0.5 else (0, 1)
            return [
                Node(node.bound, node.depth + 1, next(counter), {**node.fixings, j: val}, dict(node.windows))
                for val in order
            ]
        _, k, (lo, split, hi), values = choice
        left = Node(node.bound, node.depth + 1, next(counter), dict(node.fixings), {**node.windows, k: (lo, split)})
        right = Node(node.bound, node.depth + 1, next(counter), dict(node.fixings), {**node.windows, k: (split, hi)})
        if values[split + 1 : hi + 1].sum() > values[lo:split].sum():
            return [right, left]
        return [left, right]

    # -- main loop -----------------------------------------------------------
    def solve(self) -> SolveResult:
        s = self.settings
        counter = itertools.count()
        root = Node(-np.inf, 0, next(counter))
        dive: List[Node] = [root]
        heap: List[Tuple[float, int, Node]] = []
        incumbent_x: Optional[np.ndarray] = None
        incumbent_obj = np.inf
        iterations = 0

        def cutoff() -> float:
            if incumbent_x is None:
                return np.inf
            return incumbent_obj - max(s.relative_gap * max(1.0, abs(incumbent_obj)), 1e-9)

        while dive or heap:
            if incumbent_x is None:
                node = dive.pop()
            else:
                if dive:
                    for pending in dive:
                        heapq.heappush(heap, (pending.bound, pending.seq, pending))
                    dive = []
                _, _, node = heapq.heappop(heap)
            if node.bound >= cutoff():
                continue
            if self.nodes_solved >= s.node_limit:
                open_bounds = [n.bound for n in dive] + [entry[0] for entry in heap] + [node.bound]
                raise ResourceLimitError(
                    f"branch-and-bound node limit {s.node_limit} exceeded",
                    best_bound=self._user_value(min(open_bounds)),
                    incumbent=None if incumbent_x is None else self._user_value(incumbent_obj),
                )
            arrays = self._node_arrays(node)
            self.nodes_solved += 1
            if arrays is None:
                continue
            outcome = solve_arrays(arrays, s)
            iterations += outcome.iterations
            if outcome.status == SolveStatus.UNBOUNDED:
                choice = self._unbounded_choice(node)
                if choice is None:
                    logger.debug(f"B&B node {node.seq} relaxation unbounded with nothing left to branch on")
                    return SolveResult(SolveStatus.UNBOUNDED, nodes=self.nodes_solved, iterations=iterations)
                children = self._children(node, choice, counter)
                if incumbent_x is None:
                    dive.extend(reversed(children))
                else:
                    for child in children:
                        heapq.heappush(heap, (child.bound, child.seq, child))
                continue
            if outcome.status == SolveStatus.INFEASIBLE:
                continue
            x = outcome.x
            obj = float(outcome.objective)
            if obj >= cutoff():
                continue
            choice = self._branching_choice(node, x)
            if choice is None:
                incumbent_x = x.copy()
                incumbent_obj = obj
                logger.debug(
                    f"B&B incumbent {self._user_value(obj):.9g} at node {self.nodes_solved} depth {node.depth}"
                )
                if not self.has_objective:
                    break
                continue
            node.bound = obj
            children = self._children(node, choice, counter)
            for child in children:
                child.bound = obj
            if incumbent_x is None:
                dive.extend(reversed(children))
            else:
                for child in children:
                    heapq.heappush(heap, (child.bound, child.seq, child))

        if incumbent_x is None:
            logger.debug(f"B&B infeasible after {self.nodes_solved} nodes")
            return SolveResult(SolveStatus.INFEASIBLE, nodes=self.nodes_solved, iterations=iterations)
        for j in self.binaries:
            incumbent_x[j] = float(round(incumbent_x[j]))
        problems = self.model.check_assignment(incumbent_x, tol=10 * s.feasibility_tol, int_tol=s.integrality_tol)
        if problems:
            logger.warning(f"[WARN] incumbent re-check reported {len(problems)} issue(s): {problems[:3]}")
        status = SolveStatus.OPTIMAL if self.has_objective else SolveStatus.FEASIBLE
        objective = None
        if self.has_objective:
            objective = self._user_value(incumbent_obj)
        logger.debug(f"B&B finished: {status.value}, {self.nodes_solved} nodes")
        return SolveResult(status, incumbent_x, objective, nodes=self.nodes_solved, iterations=iterations)

    def _user_value(self, internal: float) -> float:
        value = float(internal) + self.arrays.constant
        return -value if self.arrays.maximize else value


def solve_mip(model: LinearModel, settings: Optional[SolverSettings] = None) -> SolveResult:
    """
    Solve a model with binaries, indicator constraints and SOS2 sets

    Args:
        model: LinearModel
        settings: tolerances and node limit (default: from config)

    Returns:
        SolveResult; raises ResourceLimitError past the node limit
    """
    return BranchAndBound(model, settings).solve()
