import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

GRASPS = PROJECT_ROOT / "grasps"


def load(name: str):
    from grasp_io import parse_grasp_file

    return parse_grasp_file(GRASPS / f"{name}.json").model


@pytest.fixture
def grasps_dir() -> Path:
    return GRASPS


@pytest.fixture
def grasp2():
    return load("grasp2")


@pytest.fixture
def two_finger_box():
    return load("two_finger_box")


@pytest.fixture
def cube():
    return load("cube")


@pytest.fixture
def twist():
    return load("twist")


@pytest.fixture
def package():
    return load("package")


@pytest.fixture
def fast_relaxation():
    """Coarser target angle than the shipped default so refinement settles in a few rounds"""
    from spatial import RelaxationSettings

    return RelaxationSettings.from_config(q=6)


def finger_grasp(seed: int):
    """Three or four one-joint fingers pressing on a small object from spread-out sides"""
    import numpy as np

    from grasp_model import ContactSpec, GraspModel, HandModel, JointSpec

    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 5))
    if m == 3:
        base = [(np.cos(a), np.sin(a), 0.0) for a in (0.0, 2 * np.pi / 3, 4 * np.pi / 3)]
    else:
        base = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    rotation, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    contacts, joints = [], []
    for i, direction in enumerate(base):
        n = rotation @ np.asarray(direction, dtype=float) + rng.normal(scale=0.1, size=3)
        n /= np.linalg.norm(n)
        position = -0.04 * n
        t = np.cross(n, rng.normal(size=3))
        t /= np.linalg.norm(t)
        # rotating about t x n through position - 0.08 t moves the fingertip along n
        contacts.append(ContactSpec(tuple(position), tuple(n), float(rng.uniform(0.3, 0.8)), link=i))
        joints.append(JointSpec(-1, tuple(np.cross(t, n)), tuple(position - 0.08 * t)))
    hand = HandModel(tuple(joints), commanded=tuple(rng.uniform(0.05, 0.15, m)))
    return GraspModel("spatial", tuple(contacts), hand, name=f"fingers{seed}")


@pytest.fixture(scope="session")
def random_finger_grasp():
    return finger_grasp
