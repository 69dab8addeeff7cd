import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from analysis import (
    ComplianceModel,
    ShieldConstraints,
    ShieldSettings,
    ShieldState,
    ShieldStatus,
    constraint_violation,
    linearize,
    orientation_angles,
    orientation_jacobian,
    pinned_joints,
    predict_state,
    shield_project,
    shielded_subsets,
)
from errors import InvalidInputError, RankDeficiencyError
from grasp_model import ContactSpec, GraspModel, rotation_matrix

SETTINGS = ShieldSettings(step_cap=0.05, cone_edges=8)


@pytest.fixture
def stiff_box(two_finger_box):
    return linearize(two_finger_box, ComplianceModel.uniform(two_finger_box, contact=0.01))


@pytest.fixture
def squeezed():
    # fingers just above 0.4 N, palm pressed at 0.5 N, object at rest
    return ShieldState.of([0.41, 0, 0, 0.41, 0, 0, 0.5, 0, 0], np.zeros(6))


def test_setpoint_changes_keep_object_balanced(two_finger_box, stiff_box):
    assert np.allclose(two_finger_box.G @ stiff_box.E, 0.0, atol=1e-9)
    assert stiff_box.pose_dim == 6
    # closing both fingers together only raises the squeeze
    dc = stiff_box.E @ np.array([0.01, 0.01])
    assert dc[0] == pytest.approx(100 * 0.09 * 0.01)
    assert dc[3] == pytest.approx(100 * 0.09 * 0.01)
    assert np.allclose(stiff_box.F @ np.array([0.01, 0.01]), 0.0, atol=1e-12)


def test_single_contact_cannot_be_linearized():
    grasp = GraspModel("spatial", (ContactSpec((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.5),), name="one")
    with pytest.raises(RankDeficiencyError) as info:
        linearize(grasp, ComplianceModel.uniform(grasp))
    assert info.value.matrix == "G K G^T"


def test_compliance_sizes_are_checked(two_finger_box):
    with pytest.raises(InvalidInputError):
        linearize(two_finger_box, ComplianceModel([1.0] * 6, [0.0, 0.0]))
    with pytest.raises(InvalidInputError):
        ComplianceModel([-1.0], [])


def test_predict_state_enforces_step_cap(stiff_box, squeezed):
    moved = predict_state(stiff_box, squeezed, [0.01, 0.01])
    assert moved.c[0] == pytest.approx(0.41 + 0.09)
    with pytest.raises(InvalidInputError):
        predict_state(stiff_box, squeezed, [0.1, 0.0])
    with pytest.raises(InvalidInputError):
        predict_state(stiff_box, squeezed, [0.01])


def test_orientation_angles():
    assert np.allclose(orientation_angles(np.zeros(6)), [0.0, 0.0])
    theta = 0.2
    assert np.allclose(orientation_angles([0, 0, 0, theta, 0, 0]), [theta, 0.0])
    assert np.allclose(orientation_angles([0, 0, 0, 0, theta, 0]), [0.0, theta])
    assert np.allclose(rotation_matrix((1.0, 0.0, 0.0), theta)[:, 2], [0.0, -np.sin(theta), np.cos(theta)])
    D = orientation_jacobian(np.zeros(6))
    assert np.allclose(D[:, 3:5], np.eye(2), atol=1e-6)
    assert np.allclose(D[:, :3], 0.0)


def test_subsets_need_closure_on_their_own(two_finger_box):
    subsets = shielded_subsets(two_finger_box, SETTINGS)
    # the fingers alone leave rotation about the line through them free
    assert (0, 1) not in subsets
    assert (0, 1, 2) in subsets
    assert pinned_joints(two_finger_box, (0, 2)) == [1]
    assert pinned_joints(two_finger_box, (0, 1)) == []


def test_safe_action_passes_through(two_finger_box, stiff_box, squeezed):
    result = shield_project(two_finger_box, stiff_box, squeezed, [0.0, 0.0], ShieldConstraints(0.4), SETTINGS)
    assert result.status == ShieldStatus.UNCHANGED
    assert result.deviation == 0.0
    assert result.subsets_tried == 1


def test_opening_fingers_is_projected(two_finger_box, stiff_box, squeezed):
    action = np.array([-0.05, -0.05])
    constraints = ShieldConstraints(min_normal_force=0.4)
    assert constraint_violation(two_finger_box, stiff_box, squeezed, action, (0, 1, 2), constraints, SETTINGS) > 0

    result = shield_project(two_finger_box, stiff_box, squeezed, action, constraints, SETTINGS)
    assert result.status == ShieldStatus.PROJECTED
    assert result.safe
    assert 0.0 < result.deviation < 0.1
    violation = constraint_violation(
        two_finger_box, stiff_box, squeezed, result.action, result.shielded, constraints, SETTINGS
    )
    assert violation <= 1e-7
    assert result.to_dict()["status"] == "projected"


def test_unreachable_force_floor_is_infeasible(two_finger_box, stiff_box, squeezed):
    result = shield_project(two_finger_box, stiff_box, squeezed, [0.0, 0.0], ShieldConstraints(100.0), SETTINGS)
    assert result.status == ShieldStatus.INFEASIBLE
    assert result.action is None
    assert not result.safe


def test_constraint_arguments():
    with pytest.raises(InvalidInputError):
        ShieldConstraints(pose_lower=[1.0] * 6, pose_upper=[0.0] * 6)
    with pytest.raises(InvalidInputError):
        ShieldConstraints(max_tilt=-0.1)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_linearization_identities_on_random_hands(random_finger_grasp, seed):
    grasp = random_finger_grasp(seed)
    rng = np.random.default_rng(seed)
    compliance = ComplianceModel(
        rng.uniform(0.01, 1.0, grasp.contact_dim * grasp.m), rng.uniform(0.0, 0.5, grasp.joint_count)
    )
    lin = linearize(grasp, compliance)

    assert np.allclose(lin.K, lin.K.T, atol=1e-12)
    assert np.linalg.eigvalsh(lin.K).min() > 0.0
    scale = max(1.0, float(np.abs(lin.K @ lin.J).max()))
    assert np.allclose(grasp.G @ lin.E, 0.0, atol=1e-8 * scale)

    state = ShieldState.of(rng.normal(size=grasp.contact_dim * grasp.m), rng.normal(size=6))
    a = rng.uniform(-0.5, 0.5, grasp.joint_count)
    b = rng.uniform(-0.5, 0.5, grasp.joint_count)

    def change(dq):
        moved = predict_state(lin, state, dq, step_cap=None)
        return np.concatenate([moved.c - state.c, moved.u - state.u])

    assert np.allclose(change(a + b), change(a) + change(b), atol=1e-9 * scale)
    assert np.allclose(change(3.0 * a), 3.0 * change(a), atol=1e-9 * scale)


def best_grid_deviation(grasp, lin, state, action, constraints):
    """Smallest L1 deviation over a joint grid, refined around the best coarse point"""
    best = np.inf
    for subset in shielded_subsets(grasp, SETTINGS):
        pinned = pinned_joints(grasp, subset)
        free = [j for j in range(len(action)) if j not in pinned]

        def search(centre, half_width, h):
            ticks = np.arange(-half_width, half_width + h / 2, h)
            found, where = np.inf, None
            for offsets in itertools.product(ticks, repeat=len(free)):
                candidate = np.array(action, dtype=float)
                candidate[free] = np.clip(centre + np.array(offsets), -SETTINGS.step_cap, SETTINGS.step_cap)
                if constraint_violation(grasp, lin, state, candidate, subset, constraints, SETTINGS) > 1e-9:
                    continue
                deviation = float(np.abs(candidate - action).sum())
                if deviation < found:
                    found, where = deviation, candidate[free]
            return found, where

        coarse, where = search(np.zeros(len(free)), SETTINGS.step_cap, 1e-3)
        if where is None:
            continue
        fine, _ = search(where, 2e-3, 1e-4)
        best = min(best, coarse, fine)
    return best


@pytest.mark.slow
def test_projection_matches_a_grid_search(two_finger_box, stiff_box, squeezed):
    action = np.array([-0.05, -0.05])
    constraints = ShieldConstraints(0.4)
    result = shield_project(two_finger_box, stiff_box, squeezed, action, constraints, SETTINGS)
    assert result.status == ShieldStatus.PROJECTED

    grid = best_grid_deviation(two_finger_box, stiff_box, squeezed, action, constraints)
    assert np.isfinite(grid)
    assert result.deviation <= grid + 1e-8
    assert result.deviation >= grid - 2e-3


def test_projected_action_is_a_fixed_point(two_finger_box, stiff_box, squeezed):
    constraints = ShieldConstraints(0.4)
    first = shield_project(two_finger_box, stiff_box, squeezed, [-0.05, -0.05], constraints, SETTINGS)
    again = shield_project(two_finger_box, stiff_box, squeezed, first.action, constraints, SETTINGS)
    assert again.safe
    assert again.deviation <= 1e-6
    assert np.allclose(again.action, first.action, atol=1e-6)
