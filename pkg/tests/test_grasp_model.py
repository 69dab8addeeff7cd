import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import InvalidInputError
from grasp_model import (
    ContactSpec,
    GraspModel,
    HandModel,
    JointSpec,
    build_contact_frame,
    build_planar_frame,
    contact_point_positions,
    relative_contact_motion,
)

unit_vectors = (
    st.tuples(*[st.floats(-1.0, 1.0, allow_nan=False) for _ in range(3)])
    .map(np.array)
    .filter(lambda v: np.linalg.norm(v) > 0.1)
    .map(lambda v: v / np.linalg.norm(v))
)


def test_frame_of_vertical_normal():
    frame = build_contact_frame((0.0, 0.0, 1.0))
    assert np.allclose(frame, [[0, 0, 1], [1, 0, 0], [0, 1, 0]])


@settings(max_examples=50, deadline=None)
@given(unit_vectors)
def test_frames_are_right_handed_and_orthonormal(n):
    frame = build_contact_frame(n)
    assert np.allclose(frame @ frame.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(frame) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(frame[0], n)


def test_frame_rejects_non_unit_normal():
    with pytest.raises(InvalidInputError):
        build_contact_frame((0.0, 0.0, 1.1))
    with pytest.raises(InvalidInputError):
        build_contact_frame((0.0, 0.0, 0.0))
    assert np.allclose(build_planar_frame((1.0, 0.0)), [[1, 0], [0, 1]])


def test_grasp_map_sums_forces_and_torques():
    contacts = (
        ContactSpec((0.1, 0.0, 0.0), (-1.0, 0.0, 0.0), 0.5),
        ContactSpec((0.0, 0.2, 0.05), (0.0, -0.6, -0.8), 0.5),
    )
    grasp = GraspModel("spatial", contacts)
    rng = np.random.default_rng(3)
    c = rng.normal(size=6)

    force = np.zeros(3)
    torque = np.zeros(3)
    for i, contact in enumerate(contacts):
        world = grasp.frames[i].T @ c[3 * i : 3 * i + 3]
        force += world
        torque += np.cross(contact.position, world)
    assert np.allclose(grasp.G @ c, np.concatenate([force, torque]))


def test_planar_grasp_map_columns(grasp2):
    G = grasp2.G
    assert G.shape == (3, 6)
    # contact at (-1, 0) with normal +x: t = +y, torque of t about the origin is -1
    assert np.allclose(G[:, 0], [1.0, 0.0, 0.0])
    assert np.allclose(G[:, 1], [0.0, 1.0, -1.0])


def _chain_grasp():
    hand = HandModel(
        joints=(
            JointSpec(-1, (0.0, 0.0, 1.0), (0.0, -0.1, 0.0)),
            JointSpec(0, (0.0, 0.6, 0.8), (0.05, -0.05, 0.0)),
        )
    )
    contacts = (
        ContactSpec((0.1, 0.05, 0.02), (-0.6, 0.0, -0.8), 0.4, link=1),
        ContactSpec((-0.1, 0.0, 0.0), (1.0, 0.0, 0.0), 0.4, link=0),
        ContactSpec((0.0, -0.1, 0.0), (0.0, 1.0, 0.0), 0.4),
    )
    return GraspModel("spatial", contacts, hand, "chain")


def test_hand_jacobian_matches_finite_differences():
    grasp = _chain_grasp()
    h = 1e-6
    for j in range(grasp.joint_count):
        step = np.zeros(grasp.joint_count)
        step[j] = h
        plus = contact_point_positions(grasp.hand, grasp.contacts, step)
        minus = contact_point_positions(grasp.hand, grasp.contacts, -step)
        velocity = (plus - minus) / (2 * h)
        for i in range(grasp.m):
            expected = grasp.frames[i] @ velocity[i]
            assert np.allclose(grasp.J[3 * i : 3 * i + 3, j], expected, atol=1e-7)


def test_world_contacts_and_other_chains_have_zero_jacobian_rows():
    grasp = _chain_grasp()
    # contact 1 sits on link 0, so joint 1 cannot move it
    assert np.allclose(grasp.J[3:6, 1], 0.0)
    assert np.allclose(grasp.J[6:9, :], 0.0)


def test_two_finger_box_moment_arm(two_finger_box):
    J = two_finger_box.J
    assert J[0, 0] == pytest.approx(0.09)
    assert J[3, 1] == pytest.approx(0.09)
    assert np.allclose(J[6:9], 0.0)


def test_relative_motion_subtracts_joint_motion(two_finger_box):
    r = np.array([0.01, 0.0, 0.0, 0.0, 0.0, 0.0])
    q = np.array([0.1, 0.0])
    d = relative_contact_motion(two_finger_box.G, two_finger_box.J, r, q)
    # left normal motion: object moves +x along the normal, finger closes by 0.009
    assert d[0] == pytest.approx(0.01 - 0.009)
    assert d[3] == pytest.approx(-0.01)
    with pytest.raises(InvalidInputError):
        relative_contact_motion(two_finger_box.G, two_finger_box.J, r[:3])


def test_model_validation():
    with pytest.raises(InvalidInputError):
        GraspModel("spatial", (ContactSpec((0, 0, 0), (0, 0, 1), 0.5, preload=1.0),))
    with pytest.raises(InvalidInputError):
        GraspModel("spatial", (ContactSpec((0, 0, 0), (0, 0, 1.001), 0.5),))
    with pytest.raises(InvalidInputError):
        GraspModel("spatial", (ContactSpec((0, 0, 0), (0, 0, 1), 0.5, link=2),))
    with pytest.raises(InvalidInputError):
        GraspModel("planar", (ContactSpec((0, 0, 0), (0, 0, 1), 0.5),))
    with pytest.raises(InvalidInputError):
        ContactSpec((0, 0, 0), (0, 0, 1), -0.1)
    with pytest.raises(InvalidInputError):
        HandModel(joints=(JointSpec(1, (0, 0, 1), (0, 0, 0)), JointSpec(-1, (0, 0, 1), (0, 0, 0))))
    with pytest.raises(InvalidInputError):
        HandModel(joints=(JointSpec(-1, (0, 0, 1), (0, 0, 0)),), commanded=(1.0, 2.0))


def test_derived_models(two_finger_box, grasp2):
    assert two_finger_box.with_commanded([0.2, 0.3]).commanded.tolist() == [0.2, 0.3]
    fingers = two_finger_box.subset([0, 1])
    assert fingers.m == 2
    assert fingers.G.shape == (6, 6)
    assert np.allclose(grasp2.with_preloads([0, 2, 0]).preloads, [0, 2, 0])
    assert np.allclose(grasp2.with_stiffness(3.0).stiffness, [3.0, 3.0, 3.0])
