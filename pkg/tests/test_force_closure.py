import numpy as np

from analysis import force_closure_check, primitive_wrenches
from grasp_model import ContactSpec, GraspModel


def test_four_sided_hold_has_closure(package):
    verdict = force_closure_check(package)
    assert verdict.closure
    assert verdict.rank == 6
    assert verdict.primitives == 32
    assert verdict.to_dict()["status"] == "closure"


def test_two_point_contacts_cannot_resist_twist_about_their_axis(twist):
    verdict = force_closure_check(twist)
    assert not verdict.closure
    assert verdict.rank < 6


def test_planar_cone_edges(grasp2):
    W = primitive_wrenches(grasp2)
    assert W.shape == (3, 6)
    # contact at (-1, 0) with normal +x: n + 0.5 t and n - 0.5 t
    assert np.allclose(W[:, 0], [1.0, 0.5, -0.5])
    assert np.allclose(W[:, 1], [1.0, -0.5, 0.5])
    # the side contacts can pull the object down through friction
    assert force_closure_check(grasp2).closure


def test_frictionless_planar_grasp_lacks_closure():
    contacts = (
        ContactSpec((-1.0, 0.0), (1.0, 0.0), 0.0),
        ContactSpec((0.0, -1.0), (0.0, 1.0), 0.0),
        ContactSpec((1.0, 0.0), (-1.0, 0.0), 0.0),
    )
    grasp = GraspModel("planar", contacts, name="frictionless")
    assert primitive_wrenches(grasp).shape == (3, 3)
    verdict = force_closure_check(grasp)
    assert not verdict.closure
    assert verdict.rank == 2


def test_empty_grasp():
    grasp = GraspModel("spatial", (), name="empty")
    assert primitive_wrenches(grasp).shape == (6, 0)
    assert not force_closure_check(grasp).closure
