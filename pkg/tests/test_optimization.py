import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import InvalidModelError, ResourceLimitError
from optimization import (
    Constraint,
    LinearModel,
    LinExpr,
    SolveStatus,
    SolverSettings,
    dot,
    format_lp,
    lin_sum,
    solve,
    solve_lp,
    solve_mip,
)


def test_lp_optimum_at_vertex():
    model = LinearModel("vertex")
    x = model.add_var("x")
    y = model.add_var("y")
    model.add_constraint(x + 2 * y <= 4)
    model.add_constraint(3 * x + y <= 6)
    model.maximize(x + y)

    result = solve_lp(model)
    assert result.status == SolveStatus.OPTIMAL
    assert result.objective == pytest.approx(2.8, abs=1e-9)
    assert result.value(x) == pytest.approx(1.6, abs=1e-9)
    assert result.value(y) == pytest.approx(1.2, abs=1e-9)
    assert model.check_assignment(result.x) == []


def test_lp_free_variables_and_equalities():
    model = LinearModel("free")
    x = model.add_var("x", lb=-float("inf"))
    y = model.add_var("y", lb=-5.0, ub=5.0)
    model.add_constraint(x + y == -3.0)
    model.minimize(-y)

    result = solve_lp(model)
    assert result.ok
    assert result.value(y) == pytest.approx(5.0)
    assert result.value(x) == pytest.approx(-8.0)


def test_lp_infeasible_and_unbounded():
    model = LinearModel("infeasible")
    x = model.add_var("x")
    model.add_constraint(x >= 2.0)
    model.add_constraint(x <= 1.0)
    assert solve_lp(model).status == SolveStatus.INFEASIBLE

    model = LinearModel("unbounded")
    x = model.add_var("x")
    y = model.add_var("y")
    model.add_constraint(x - y <= 1.0)
    model.maximize(x)
    assert solve_lp(model).status == SolveStatus.UNBOUNDED


def test_feasibility_problem_reports_feasible():
    model = LinearModel("feasibility")
    x = model.add_vars(3, "x", ub=1.0)
    model.add_constraint(lin_sum(x) == 2.0)
    result = solve(model)
    assert result.status == SolveStatus.FEASIBLE
    assert result.objective is None
    assert sum(result.values(x)) == pytest.approx(2.0)


def test_model_rejects_nonlinear_and_unknown_terms():
    model = LinearModel("bad")
    x = model.add_var("x")
    y = model.add_var("y")
    with pytest.raises(InvalidModelError):
        x * y
    with pytest.raises(InvalidModelError):
        model.add_constraint(1 <= 2)
    with pytest.raises(InvalidModelError):
        model.add_var("z", lb=2.0, ub=1.0)

    other = LinearModel("other")
    for _ in range(5):
        other.add_var("v")
    stranger = other.variables[4]
    with pytest.raises(InvalidModelError):
        model.add_constraint(stranger <= 1.0)


def test_solve_lp_refuses_integer_models():
    model = LinearModel("mip")
    model.add_binary("b")
    with pytest.raises(InvalidModelError):
        solve_lp(model)


def test_indicator_constraints_switch_bodies():
    model = LinearModel("indicator")
    x = model.add_var("x", ub=10.0)
    y = model.add_binary("y")
    model.add_indicator(y, 1, [x >= 5.0])
    model.add_indicator(y, 0, [x <= 1.0])
    model.add_constraint(x >= 3.0)
    model.minimize(x + 4 * y)

    result = solve_mip(model)
    assert result.status == SolveStatus.OPTIMAL
    assert result.value(y) == 1.0
    assert result.value(x) == pytest.approx(5.0)
    assert result.objective == pytest.approx(9.0)


def test_sos2_keeps_only_adjacent_members():
    model = LinearModel("sos2")
    z = model.add_vars(4, "z")
    model.add_constraint(lin_sum(z) == 1.0)
    model.add_constraint(lin_sum(k * z[k] for k in range(4)) == 1.5)
    model.add_sos2(z)
    model.maximize(3 * z[0] + z[1] + z[2] + 3 * z[3])

    result = solve_mip(model)
    assert result.objective == pytest.approx(1.0)
    assert result.value(z[1]) == pytest.approx(0.5)
    assert result.value(z[2]) == pytest.approx(0.5)
    assert model.check_assignment(result.x) == []


def test_node_limit_raises_with_bounds():
    model = LinearModel("fractional")
    a = model.add_binary("a")
    b = model.add_binary("b")
    model.add_constraint(2 * a + 2 * b <= 3)
    model.maximize(5 * a + 4 * b)

    with pytest.raises(ResourceLimitError) as info:
        solve_mip(model, SolverSettings(node_limit=1))
    assert info.value.best_bound is not None
    assert info.value.to_dict()["error_code"] == "SOLVER_RESOURCE_LIMIT"


def _brute_force(values, weights, capacity):
    best = 0.0
    for pick in itertools.product((0, 1), repeat=len(values)):
        if sum(w * p for w, p in zip(weights, pick)) <= capacity:
            best = max(best, sum(v * p for v, p in zip(values, pick)))
    return best


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.integers(1, 20), st.integers(1, 10)), min_size=1, max_size=6),
    st.integers(0, 30),
)
def test_branch_and_bound_matches_enumeration(items, capacity):
    values = [v for v, _ in items]
    weights = [w for _, w in items]
    model = LinearModel("knapsack")
    x = [model.add_binary(f"x{i}") for i in range(len(items))]
    model.add_constraint(lin_sum(w * xi for w, xi in zip(weights, x)) <= capacity)
    model.maximize(lin_sum(v * xi for v, xi in zip(values, x)))

    result = solve_mip(model)
    assert result.status == SolveStatus.OPTIMAL
    assert result.objective == pytest.approx(_brute_force(values, weights, capacity), abs=1e-6)


def test_lp_dump_lists_every_section():
    model = LinearModel("dump")
    x = model.add_var("x", ub=4.0)
    z = model.add_vars(3, "z")
    y = model.add_binary("y")
    model.add_constraint(x + z[0] <= 2.0, "cap")
    model.add_indicator(y, 1, [x >= 1.0], "on")
    model.add_sos2(z, "seg")
    model.maximize(x - 2 * y)

    text = format_lp(model)
    for section in ("Maximize", "Subject To", "Bounds", "Binaries", "Indicators", "SOS", "End"):
        assert section in text
    assert " cap: 1 x + 1 z[0] <= 2" in text
    assert "y = 1 ->" in text
    assert "S2:: z[0]:1 z[1]:2 z[2]:3" in text


def test_unbounded_relaxation_is_bounded_by_indicator_bodies():
    model = LinearModel("bodies")
    x = model.add_var("x")
    b = model.add_binary("b")
    model.add_indicator(b, 1, [x <= 5.0])
    model.add_indicator(b, 0, [x <= 3.0])
    model.maximize(x)

    result = solve_mip(model)
    assert result.status == SolveStatus.OPTIMAL
    assert result.objective == pytest.approx(5.0)
    assert result.value(b) == 1.0


def test_unbounded_branch_stays_unbounded():
    model = LinearModel("open")
    x = model.add_var("x")
    b = model.add_binary("b")
    model.add_indicator(b, 1, [x <= 5.0])
    model.maximize(x)
    assert solve_mip(model).status == SolveStatus.UNBOUNDED


def test_sos2_window_bounds_an_unbounded_ray():
    model = LinearModel("ray")
    z = model.add_vars(3, "z")
    model.add_constraint(z[0] - z[2] == 0.0)
    model.add_constraint(z[1] <= 2.0)
    model.add_sos2(z)
    model.maximize(lin_sum(z))

    result = solve_mip(model)
    assert result.status == SolveStatus.OPTIMAL
    assert result.objective == pytest.approx(2.0)


def test_sos2_window_respects_positive_lower_bounds():
    model = LinearModel("floor")
    z = [model.add_var("z0"), model.add_var("z1"), model.add_var("z2", lb=0.5)]
    model.add_constraint(lin_sum(z) <= 1.0)
    model.add_sos2(z)
    model.maximize(2 * z[0] + z[1])

    result = solve_mip(model)
    assert result.status == SolveStatus.OPTIMAL
    # z2 >= 0.5 forces the window onto (z1, z2)
    assert result.objective == pytest.approx(0.5)
    assert result.value(z[0]) == pytest.approx(0.0, abs=1e-9)
    assert model.check_assignment(result.x) == []


def _random_mixed_model(seed: int) -> LinearModel:
    """Up to 3 binaries with indicator bodies, a piecewise SOS2 and a cyclic SOS2 coupling"""
    rng = np.random.default_rng(seed)
    model = LinearModel(f"mixed{seed}")
    x = model.add_vars(3, "x", ub=10.0)
    b = [model.add_binary(f"b{j}") for j in range(int(rng.integers(1, 4)))]
    for _ in range(2):
        row = dot(rng.integers(-3, 4, size=3), x) + dot(rng.integers(-3, 4, size=len(b)), b)
        model.add_constraint(row <= float(rng.integers(2, 12)))
    for bj in b:
        for trigger in (0, 1):
            if rng.random() < 0.7:
                body = dot(rng.integers(-2, 3, size=3), x)
                rhs = float(rng.integers(0, 8))
                model.add_indicator(bj, trigger, [body <= rhs if rng.random() < 0.5 else body >= rhs])

    k = int(rng.integers(3, 6))
    lam = model.add_vars(k, "lam", ub=1.0)
    model.add_constraint(lin_sum(lam) == 1.0)
    model.add_constraint(x[0] - dot(rng.integers(0, 10, size=k), lam) == 0.0)
    model.add_sos2(lam)

    # cyclic pairs: z[k2] stands for member 0 again
    k2 = int(rng.integers(3, 5))
    w = model.add_vars(k2, "w", ub=1.0)
    z = model.add_vars(k2 + 1, "z", ub=1.0)
    model.add_sos2(z)
    model.add_constraint(w[0] - z[0] - z[k2] <= 0.0)
    for s in range(1, k2):
        model.add_constraint(w[s] - z[s] <= 0.0)
    model.add_constraint(lin_sum(w) == 1.0)
    model.add_constraint(x[1] - dot(rng.integers(0, 10, size=k2), w) <= 0.0)

    model.maximize(
        dot(rng.integers(-3, 6, size=3), x)
        + dot(rng.integers(-5, 6, size=len(b)), b)
        + dot(rng.integers(-4, 5, size=k2), w)
    )
    return model


def _enumerated_optimum(model: LinearModel):
    """Best LP over every binary assignment and every adjacent SOS2 window"""
    binaries = model.binaries
    best = None
    for bits in itertools.product((0, 1), repeat=len(binaries)):
        fixed = dict(zip(binaries, bits))
        for starts in itertools.product(*[range(len(s.members) - 1) for s in model.sos2_sets]):
            zeroed = set()
            for sos, p in zip(model.sos2_sets, starts):
                zeroed.update(k for pos, k in enumerate(sos.members) if pos not in (p, p + 1))
            lp = LinearModel("fixed")
            for v in model.variables:
                if v.index in fixed:
                    lp.add_var(v.name, fixed[v.index], fixed[v.index])
                elif v.index in zeroed:
                    lp.add_var(v.name, 0.0, 0.0)
                else:
                    lp.add_var(v.name, v.lb, v.ub)
            for c in model.constraints:
                lp.add_constraint(Constraint(dict(c.terms), c.sense, c.rhs))
            for ind in model.indicators:
                if fixed[ind.binary] == ind.trigger:
                    for c in ind.constraints:
                        lp.add_constraint(Constraint(dict(c.terms), c.sense, c.rhs))
            lp.maximize(LinExpr(model.objective.terms, model.objective.constant))
            result = solve_lp(lp)
            if result.status == SolveStatus.OPTIMAL and (best is None or result.objective > best):
                best = result.objective
    return best


@pytest.mark.slow
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_mixed_models_match_enumeration(seed):
    model = _random_mixed_model(seed)
    expected = _enumerated_optimum(model)
    result = solve_mip(model)
    if expected is None:
        assert result.status == SolveStatus.INFEASIBLE
    else:
        assert result.status == SolveStatus.OPTIMAL
        assert result.objective == pytest.approx(expected, rel=1e-6, abs=1e-7)
        assert model.check_assignment(result.x, tol=1e-6) == []
