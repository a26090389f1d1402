"""Rigid camera poses and small vector helpers.

Camera frames follow the usual vision convention: x right, y down, z along
the optical axis. ``Pose.rotation`` maps camera-frame vectors to world frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WORLD_UP = np.array([0.0, 0.0, 1.0])
WORLD_X = np.array([1.0, 0.0, 0.0])


def normalize(v, eps: float = 1e-12) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < eps:
        raise ValueError("cannot normalize a zero-length vector")
    return v / n


@dataclass(frozen=True, eq=False)
class Pose:
    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.eye(3))

    @classmethod
    def look_at(cls, position, target, up=WORLD_UP) -> "Pose":
        """Pose at ``position`` whose optical axis points at ``target``.

        Image "up" follows world up projected onto the image plane; when the
        view is (anti)parallel to ``up`` the world x axis is used instead.
        """
        position = np.asarray(position, dtype=float)
        z = normalize(np.asarray(target, dtype=float) - position)
        up = np.asarray(up, dtype=float)
        y = -(up - np.dot(up, z) * z)
        if np.linalg.norm(y) < 1e-6:
            y = -(WORLD_X - np.dot(WORLD_X, z) * z)
        y = normalize(y)
        x = np.cross(y, z)
        return cls(position, np.column_stack([x, y, z]))

    @property
    def forward(self) -> np.ndarray:
        return self.rotation[:, 2]

    def compose(self, offset: "Pose") -> "Pose":
        """World pose of ``offset`` expressed in this pose's frame."""
        return Pose(self.position + self.rotation @ offset.position, self.rotation @ offset.rotation)

    def to_world(self, p_cam) -> np.ndarray:
        """Camera-frame point to world frame."""
        return self.rotation @ np.asarray(p_cam, dtype=float) + self.position

    def to_camera(self, p_world) -> np.ndarray:
        return self.rotation.T @ (np.asarray(p_world, dtype=float) - self.position)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.rotation)))

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.position, other.position) and np.array_equal(self.rotation, other.rotation)

    def __repr__(self):
        p = ", ".join(f"{c:.4f}" for c in self.position)
        return f"Pose(position=({p}), forward={np.round(self.forward, 4).tolist()})"


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix."""
    k = normalize(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def frame_from_normal(normal, spin: float = 0.0) -> np.ndarray:
    """Rotation whose local z axis is ``normal``; ``spin`` turns it about that axis."""
    z = normalize(normal)
    ref = WORLD_UP if abs(z[2]) < 0.9 else WORLD_X
    x = normalize(np.cross(ref, z))
    y = np.cross(z, x)
    R = np.column_stack([x, y, z])
    if spin:
        R = R @ rotation_about([0, 0, 1], spin)
    return R


def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
