import json
import math

import numpy as np
import pytest

from errors import InvalidInputError, ResourceLimitError
from grasp_model import ContactSpec, GraspModel
from spatial import (
    RelaxationSettings,
    active_sectors,
    apply_normal_uncertainty,
    assemble_core_constraints,
    assemble_friction_constraints,
    edge_length,
    initial_cone,
    solve_with_refinement,
    uniform_cone,
)

PULL_Y = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]


def chord_distances(approx, i):
    """Distance from the origin to the outer chord of every sector of contact i"""
    ends = approx.edge_matrix(i).T
    out = []
    for s in range(len(ends)):
        a, b = ends[s], ends[(s + 1) % len(ends)]
        out.append(abs(a[0] * b[1] - a[1] * b[0]) / np.linalg.norm(a - b))
    return np.array(out)


def maximize_load(grasp, direction, settings, cap=100.0, **kwargs):
    """Largest s with the grasp in equilibrium under s * direction"""
    direction = [float(v) for v in direction]

    def prepare(model):
        return {"s": model.add_var("s", lb=0.0, ub=cap)}

    def finalize(problem, handles):
        problem.model.maximize(handles["s"])

    return solve_with_refinement(
        grasp,
        lambda h: [v * h["s"] for v in direction],
        prepare=prepare,
        finalize=finalize,
        settings=settings,
        **kwargs,
    )


def maximize_pull(grasp, settings, **kwargs):
    return maximize_load(grasp, PULL_Y, settings, **kwargs)


def test_edge_length_values():
    assert edge_length(1, 0) == pytest.approx(math.sqrt(2.0), abs=1e-5)
    assert edge_length(1, 1) == pytest.approx(1.53073, abs=1e-5)
    assert edge_length(5, 3) == 1.0
    # the lengths telescope toward pi / 2 as the target gets finer
    assert edge_length(1, 10) < math.pi / 2
    assert edge_length(1, 10) == pytest.approx(math.pi / 2, rel=1e-6)


def test_initial_and_uniform_cones():
    base = initial_cone(q=3, m=2)
    assert base.m == 2
    assert base.edge_count(0) == 4
    assert np.allclose(base.sector_levels(0), 1)
    assert np.allclose(base.edge_lengths(0), edge_length(1, 3))

    fine = uniform_cone(4, q=3)
    assert fine.edge_count(0) == 32
    assert np.allclose(fine.edge_lengths(0), 1.0 / math.cos(math.pi / 32))
    assert all(fine.at_target(0, s) for s in range(32))
    with pytest.raises(InvalidInputError):
        uniform_cone(5, q=3)


def test_refinement_bisects_and_stops_at_target():
    approx = initial_cone(q=2)
    child = approx.refine_sector(0, 0)
    assert child.edge_count(0) == 5
    assert child.sector_levels(0).tolist() == [2, 2, 1, 1, 1]
    assert child.refines(approx)
    assert not approx.refines(child)

    leaf = uniform_cone(3, q=2)
    assert leaf.refine_sectors(0, [0, 1]) is leaf


def test_every_sector_encloses_the_exact_cone():
    approx = initial_cone(q=4)
    picks = [0, 1, 1, 3, 2, 0, 5, 4, 4, 7]
    for s in picks:
        child = approx.refine_sector(0, s % approx.edge_count(0))
        assert np.all(chord_distances(child, 0) >= 1.0 - 1e-12)
        # an edge shared with the coarser cone never gets longer
        parent_len = dict(zip(approx.ticks[0], approx.edge_lengths(0)))
        for tick, length in zip(child.ticks[0], child.edge_lengths(0)):
            if tick in parent_len:
                assert length <= parent_len[tick] + 1e-12
        approx = child


def test_sectors_containing_directions():
    approx = initial_cone(q=3)
    assert approx.sectors_containing(0, [1.0, 1.0]) == [0]
    assert sorted(approx.sectors_containing(0, [1.0, 0.0])) == [0, 3]
    assert approx.sectors_containing(0, [0.0, 0.0]) == []


def test_active_sectors_from_weights():
    approx = initial_cone(q=3)
    zeros = np.zeros(4)
    assert active_sectors(approx, 0, np.array([0.0, 1.0, 2.0, 0.0]), zeros) == [1]
    assert active_sectors(approx, 0, np.array([1.0, 0.0, 0.0, 1.0]), zeros) == [3]
    assert active_sectors(approx, 0, np.array([0.0, 0.0, 1.0, 0.0]), zeros) == [1, 2]
    assert active_sectors(approx, 0, zeros, zeros) == []


def test_twist_needs_dissipation_to_fail(twist):
    settings = RelaxationSettings.from_config(q=4)
    # the cone alone lets the object wedge itself by rotating
    assert solve_with_refinement(twist, PULL_Y, settings=settings, friction_mode="cone").feasible
    # with sliding friction opposing motion the wedge cannot balance
    assert not solve_with_refinement(twist, PULL_Y, settings=settings).feasible


def test_pull_trace_is_monotone(two_finger_box, fast_relaxation, tmp_path):
    log = tmp_path / "rounds.jsonl"
    relaxed = maximize_pull(two_finger_box, fast_relaxation, diagnostics=log)
    assert relaxed.feasible
    assert len(relaxed.trace.rounds) > 1
    assert relaxed.trace.is_monotone(maximize=True)
    assert relaxed.value(relaxed.handles["s"]) == pytest.approx(2 * 0.1 / 0.09, rel=1e-3)

    records = [json.loads(line) for line in log.read_text(encoding="utf-8").splitlines()]
    assert [r["round"] for r in records] == list(range(1, len(relaxed.trace.rounds) + 1))
    assert records[-1]["refined"] == [0, 0, 0]


def test_round_limit_raises(two_finger_box):
    settings = RelaxationSettings(q=6, max_rounds=1)
    with pytest.raises(ResourceLimitError) as info:
        maximize_pull(two_finger_box, settings)
    assert info.value.incumbent is not None
    assert info.value.exit_code == 3


def test_argument_checks(two_finger_box, grasp2):
    with pytest.raises(InvalidInputError):
        solve_with_refinement(two_finger_box, PULL_Y, eta=0.05, friction_mode="cone")
    with pytest.raises(InvalidInputError):
        solve_with_refinement(two_finger_box, PULL_Y, friction_mode="coulomb")
    with pytest.raises(InvalidInputError):
        solve_with_refinement(grasp2, [0.0, 0.0, 0.0])
    with pytest.raises(InvalidInputError):
        solve_with_refinement(two_finger_box, PULL_Y, q=4, approx=initial_cone(q=3, m=3))
    with pytest.raises(InvalidInputError):
        RelaxationSettings(eta=math.pi)


def test_friction_fragment_structure(two_finger_box):
    approx = initial_cone(q=3, m=3)
    problem = assemble_core_constraints(two_finger_box, np.zeros(6))
    before = len(problem.model.indicators)
    frictions = assemble_friction_constraints(problem, approx)
    model = problem.model
    assert [fr.index for fr in frictions] == [0, 1, 2]
    assert all(len(fr.beta) == 4 and len(fr.alpha) == 4 and len(fr.z) == 5 for fr in frictions)
    assert len(model.sos2_sets) == 3
    # roll and slide indicators per contact
    assert len(model.indicators) == before + 6
    names = {c.name for c in model.constraints}
    assert any(n.endswith(".beta_sos[0]") for n in names)

    cone_only = assemble_core_constraints(two_finger_box, np.zeros(6))
    frictions = assemble_friction_constraints(cone_only, approx, friction_mode="cone")
    assert all(not fr.alpha and fr.slide is None for fr in frictions)
    assert not cone_only.model.sos2_sets


def test_frictionless_contact_has_no_tangential_force():
    contacts = (
        ContactSpec((-0.05, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0),
        ContactSpec((0.05, 0.0, 0.0), (-1.0, 0.0, 0.0), 0.5),
    )
    grasp = GraspModel("spatial", contacts, name="slippery")
    problem = assemble_core_constraints(grasp, np.zeros(6))
    frictions = assemble_friction_constraints(problem, initial_cone(q=3, m=2))
    assert frictions[0].frictionless
    assert not frictions[1].frictionless
    assert len(problem.model.sos2_sets) == 1


def test_normal_uncertainty_substitution(two_finger_box):
    approx = initial_cone(q=3, m=3)
    problem = assemble_core_constraints(two_finger_box, np.zeros(6), unilaterality=False)
    frictions = assemble_friction_constraints(problem, approx)
    eta = math.radians(2.5)
    before = len(problem.model.indicators)
    used = apply_normal_uncertainty(problem, approx, frictions, eta)
    assert len(used) == 3
    assert len(problem.model.indicators) == before + 6
    nominal = problem.normal_motion(0)
    for var_index, coef in nominal.terms.items():
        assert used[0].terms[var_index] == pytest.approx(coef * math.cos(eta))
    # every edge of the initial cone sits at level 1, so the motion term uses the level-2 length
    for a in frictions[0].alpha:
        assert used[0].terms[a.index] == pytest.approx(math.sin(eta) * edge_length(2, 3))

    plain = assemble_core_constraints(two_finger_box, np.zeros(6), unilaterality=False)
    nominal_used = apply_normal_uncertainty(plain, approx, assemble_friction_constraints(plain, approx), 0.0)
    assert nominal_used[0].terms == plain.normal_motion(0).terms
    with pytest.raises(InvalidInputError):
        apply_normal_uncertainty(plain, approx, [], math.pi / 2)


@pytest.mark.parametrize("eta_deg", [2.5, 10.0])
def test_normal_uncertainty_never_rescues_an_unstable_grasp(twist, eta_deg):
    settings = RelaxationSettings.from_config(q=4)
    assert not solve_with_refinement(twist, PULL_Y, settings=settings, eta=math.radians(eta_deg)).feasible


@pytest.mark.slow
def test_coarse_infeasibility_survives_the_uniform_cone(twist):
    settings = RelaxationSettings.from_config(q=6)
    coarse = solve_with_refinement(twist, PULL_Y, settings=settings)
    assert not coarse.feasible
    assert coarse.trace.rounds[-1].objective is None
    assert max(coarse.approx.edge_count(i) for i in range(twist.m)) < 256

    uniform = uniform_cone(7, q=6, m=twist.m)
    assert [uniform.edge_count(i) for i in range(twist.m)] == [256, 256]
    assert not solve_with_refinement(twist, PULL_Y, settings=settings, approx=uniform).feasible


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_refinement_objective_never_increases(seed, random_finger_grasp, fast_relaxation):
    grasp = random_finger_grasp(seed)
    rng = np.random.default_rng(100 + seed)
    force = rng.normal(size=3)
    direction = np.concatenate([force / np.linalg.norm(force), np.zeros(3)])
    relaxed = maximize_load(grasp, direction, fast_relaxation)
    assert relaxed.trace.rounds
    assert relaxed.trace.is_monotone(maximize=True, tol=1e-5)
