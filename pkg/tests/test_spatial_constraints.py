import numpy as np
import pytest

from errors import InvalidInputError
from optimization import SolveStatus, solve_mip
from spatial import add_polygonal_cone, assemble_core_constraints, cone_facets, polygon_directions


def test_symbol_table_names_every_family(two_finger_box):
    problem = assemble_core_constraints(two_finger_box, np.zeros(6))
    for family in (
        "object_equilibrium",
        "hand_equilibrium",
        "transmission",
        "unilaterality",
        "actuator_model",
        "relative_motion",
        "joint_unilaterality",
    ):
        assert problem.symbols.get(family), family
    assert len(problem.symbols["object_equilibrium"]) == 6
    assert len(problem.symbols["unilaterality"]) == two_finger_box.m
    assert len(problem.symbols["actuator_model"]) == two_finger_box.actuator_count


def test_squeeze_without_load_is_feasible(two_finger_box):
    problem = assemble_core_constraints(two_finger_box, np.zeros(6))
    for i in range(two_finger_box.m):
        add_polygonal_cone(problem, i, 8)
    result = solve_mip(problem.model)
    assert result.ok
    solution = problem.solution(result)

    # a locked finger may press harder, the driving one presses exactly 0.1 Nm / 0.09 m
    press = 0.1 / 0.09
    assert min(solution.c[0], solution.c[3]) == pytest.approx(press, rel=1e-6)
    assert max(solution.c[0], solution.c[3]) >= press - 1e-7
    assert np.allclose(solution.w_net, 0.0, atol=1e-7)
    assert np.all(solution.f >= two_finger_box.commanded - 1e-7)
    assert np.allclose(solution.tau, two_finger_box.J.T @ solution.c, atol=1e-7)


def test_frictionless_pull_is_infeasible(two_finger_box):
    grasp = two_finger_box
    problem = assemble_core_constraints(grasp, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    for i in range(grasp.m):
        problem.model.add_constraint(problem.tangential_force(i)[0] == 0.0)
        problem.model.add_constraint(problem.tangential_force(i)[1] == 0.0)
    assert solve_mip(problem.model).status == SolveStatus.INFEASIBLE


def test_separated_contact_carries_no_force(two_finger_box):
    problem = assemble_core_constraints(two_finger_box, np.zeros(6))
    for i in range(two_finger_box.m):
        add_polygonal_cone(problem, i, 8)
    result = solve_mip(problem.model)
    solution = problem.solution(result)
    for i in range(two_finger_box.m):
        if solution.y[i] == 0:
            assert solution.c[3 * i] == pytest.approx(0.0, abs=1e-9)


def test_wrench_size_is_checked(two_finger_box, grasp2):
    with pytest.raises(InvalidInputError):
        assemble_core_constraints(two_finger_box, [0.0, 1.0])
    with pytest.raises(InvalidInputError):
        assemble_core_constraints(two_finger_box, np.zeros(6), f_c=[0.1])
    with pytest.raises(InvalidInputError):
        assemble_core_constraints(grasp2, np.zeros(3))


def test_polygon_cone_geometry():
    edges = polygon_directions(4)
    assert np.allclose(edges, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-12)
    normals, depth = cone_facets(4)
    assert depth == pytest.approx(np.sqrt(0.5))
    # every edge lies on two facets of the inscribed polygon
    touching = np.isclose(edges @ normals.T, depth)
    assert np.all(touching.sum(axis=1) == 2)
