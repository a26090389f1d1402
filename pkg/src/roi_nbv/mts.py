"""3D Move to See: local ascent of target visibility with a 9-camera array.

The outer cameras sample the objective at fixed offsets around the
reference camera. A least-squares fit of the objective differences against
the offset directions gives a gradient in the reference camera frame; the
weighted delta ``w . df`` with ``w = V g`` says whether following it is worth
a step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from roi_nbv.geometry import Pose
from roi_nbv.roi_detection import array_objectives, detect_clusters, objective, select_reference_target
from roi_nbv.scene_sim import (ARRAY_CAMERA, CameraArrayConfig, CameraModel, Scene, Workspace,
                               array_poses, is_reachable, render)

MAX_CONDITION = 1e8


@dataclass(frozen=True)
class MtsConfig:
    delta_thresh: float = 1e-5
    step_length: float = 0.02
    max_moves: int = 10
    min_cluster_px: int = 4
    min_match_fraction: float = 0.25

    def __post_init__(self):
        if not self.step_length > 0:
            raise ValueError("step_length must be positive")
        if self.max_moves < 1:
            raise ValueError("max_moves must be at least 1")


@dataclass
class GradientResult:
    gradient: np.ndarray
    camera_weights: np.ndarray
    weighted_delta: float
    delta_f: np.ndarray


def direction_matrix(cfg: CameraArrayConfig | None = None) -> np.ndarray:
    return (cfg or CameraArrayConfig()).directions.copy()


def estimate_gradient(V, delta_f) -> np.ndarray:
    """Least-squares ``g`` with ``V g ~ delta_f`` via the normal equations."""
    V = np.asarray(V, dtype=float)
    delta_f = np.asarray(delta_f, dtype=float)
    if V.ndim != 2 or V.shape[1] != 3 or len(delta_f) != V.shape[0]:
        raise ValueError(f"shape mismatch: V {V.shape}, delta_f {delta_f.shape}")
    VtV = V.T @ V
    cond = np.linalg.cond(VtV)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise np.linalg.LinAlgError(f"direction matrix is ill-conditioned (cond {cond:.3g})")
    return np.linalg.solve(VtV, V.T @ delta_f)


def camera_weights(V, gradient) -> np.ndarray:
    return np.asarray(V, dtype=float) @ np.asarray(gradient, dtype=float)


def weighted_delta(weights, delta_f) -> float:
    weights = np.asarray(weights, dtype=float)
    delta_f = np.asarray(delta_f, dtype=float)
    if weights.shape != delta_f.shape:
        raise ValueError(f"length mismatch: {weights.shape} vs {delta_f.shape}")
    return float(weights @ delta_f)


def compute_gradient(V, delta_f) -> GradientResult:
    g = estimate_gradient(V, delta_f)
    w = camera_weights(V, g)
    return GradientResult(g, w, weighted_delta(w, delta_f), np.asarray(delta_f, dtype=float))


class MtsDecision(enum.Enum):
    MOVE = "move"
    LOCAL_MAX = "local_max"
    UNREACHABLE = "unreachable"
    NO_TARGET = "no_target"


@dataclass
class MtsStep:
    decision: MtsDecision
    pose: Pose | None = None
    result: GradientResult | None = None
    objectives: np.ndarray | None = None
    target_point: np.ndarray | None = None
    trace: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.result.weighted_delta if self.result is not None else 0.0


def observe(scene: Scene, reference: Pose, cfg: MtsConfig = MtsConfig(),
            array_cfg: CameraArrayConfig | None = None, camera: CameraModel = ARRAY_CAMERA):
    """Render the array and return (objectives, target match, reference image)."""
    images = [render(scene, p, camera) for p in array_poses(reference, array_cfg)]
    f, match = array_objectives(images, cfg.min_cluster_px, cfg.min_match_fraction)
    return f, match, images[0]


def reference_objective(scene: Scene, pose: Pose, cfg: MtsConfig = MtsConfig(),
                        camera: CameraModel = ARRAY_CAMERA) -> float:
    """Objective of the largest target seen by the reference camera alone."""
    img = render(scene, pose, camera)
    return objective(img, select_reference_target(detect_clusters(img, cfg.min_cluster_px)))


def mts_step(scene: Scene, reference: Pose, workspace: Workspace, cfg: MtsConfig = MtsConfig(),
             moves_so_far: int = 0, array_cfg: CameraArrayConfig | None = None,
             camera: CameraModel = ARRAY_CAMERA) -> MtsStep:
    if moves_so_far >= cfg.max_moves:
        return MtsStep(MtsDecision.LOCAL_MAX, trace={"reason": "max_moves"})
    f, match, ref_img = observe(scene, reference, cfg, array_cfg, camera)
    ref = match.reference
    if ref is None:
        return MtsStep(MtsDecision.NO_TARGET, objectives=f, trace={"reason": "no_target"})
    V = direction_matrix(array_cfg)
    res = compute_gradient(V, f[1:] - f[0])
    target = ref_img.back_project(ref.centroid_px[0], ref.centroid_px[1], ref.mean_depth)
    trace = {"objectives": f.tolist(), "gradient": res.gradient.tolist(), "delta": res.weighted_delta}
    if res.weighted_delta <= cfg.delta_thresh:
        return MtsStep(MtsDecision.LOCAL_MAX, None, res, f, target, {**trace, "reason": "delta"})
    direction = reference.rotation @ (res.gradient / np.linalg.norm(res.gradient))
    pos = reference.position + cfg.step_length * direction
    try:
        pose = Pose.look_at(pos, target)
    except ValueError:
        pose = Pose(pos, reference.rotation)
    if not is_reachable(workspace, pose):
        return MtsStep(MtsDecision.UNREACHABLE, pose, res, f, target, {**trace, "reason": "workspace"})
    return MtsStep(MtsDecision.MOVE, pose, res, f, target, trace)
