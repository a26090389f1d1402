import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roi_nbv.geometry import Pose, frame_from_normal, normalize, random_unit_vectors, rotation_about

vec3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


def is_rotation(R):
    return np.allclose(R @ R.T, np.eye(3), atol=1e-9) and np.isclose(np.linalg.det(R), 1.0)


@settings(max_examples=100)
@given(vec3, vec3)
def test_look_at_aims_forward(p, t):
    if np.linalg.norm(t - p) < 1e-3:
        return
    pose = Pose.look_at(p, t)
    assert is_rotation(pose.rotation)
    assert np.allclose(pose.forward, (t - p) / np.linalg.norm(t - p))
    # image "down" axis never points up
    assert pose.rotation[2, 1] <= 1e-9


def test_look_at_straight_down_falls_back():
    pose = Pose.look_at([0, 0, 1], [0, 0, 0])
    assert is_rotation(pose.rotation)
    assert np.allclose(pose.forward, [0, 0, -1])
    assert abs(pose.rotation[:, 0] @ [1, 0, 0]) < 1e-9 or abs(pose.rotation[:, 1] @ [1, 0, 0]) > 0.99


def test_transforms_round_trip():
    pose = Pose.look_at([1, 2, 3], [0, 0, 0])
    p = np.array([0.3, -0.2, 0.9])
    assert np.allclose(pose.to_camera(pose.to_world(p)), p)
    assert pose.compose(Pose.identity()) == pose


def test_normalize_rejects_zero():
    with pytest.raises(ValueError):
        normalize([0, 0, 0])


@settings(max_examples=50)
@given(vec3, st.floats(-6, 6))
def test_rotation_about(axis, ang):
    if np.linalg.norm(axis) < 1e-3:
        return
    R = rotation_about(axis, ang)
    assert is_rotation(R)
    assert np.allclose(R @ axis, axis)


def test_frame_from_normal():
    R = frame_from_normal([0.0, 1.0, 1.0], spin=0.3)
    assert is_rotation(R)
    assert np.allclose(R[:, 2], normalize([0, 1, 1]))


def test_random_unit_vectors():
    v = random_unit_vectors(np.random.default_rng(0), 2000)
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)
    assert np.all(np.abs(v.mean(axis=0)) < 0.06)
