"""Frontier viewpoint sampling, proximity-count information gain and the
combined local/global selection loop."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from roi_nbv import _kernels as K
from roi_nbv.geometry import Pose, random_unit_vectors
from roi_nbv.mts import MtsConfig, MtsDecision, mts_step
from roi_nbv.scene_sim import (RGBD_CAMERA, CameraModel, Scene, Workspace, is_reachable, move_cost,
                               segment_reachable)
from roi_nbv.voxel_map import HitKind, RoiOcTree

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    alpha: float = 0.2
    d_max: float = 0.3
    n_vps: int = 30
    utility_thresh: float = 0.05
    sensor_range: float = 0.6
    ig_rays: tuple = (16, 16)
    attempt_factor: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not self.d_max > 0:
            raise ValueError("d_max must be positive")
        if self.n_vps < 1:
            raise ValueError("n_vps must be at least 1")
        object.__setattr__(self, "ig_rays", tuple(int(x) for x in self.ig_rays))


class OriginKind(enum.Enum):
    ROI_TARGETED = "roi"
    EXPLORATION = "exploration"


@dataclass
class Viewpoint:
    pose: Pose
    target: np.ndarray
    ig: float = 0.0
    cost: float = 0.0
    utility: float = 0.0
    origin_kind: OriginKind = OriginKind.ROI_TARGETED


# --------------------------------------------------------------- sampling
def sample_viewpoints(tree: RoiOcTree, workspace: Workspace, targets, n: int, rng: np.random.Generator,
                      sensor_range: float, kind: OriginKind = OriginKind.ROI_TARGETED,
                      attempt_budget: int | None = None) -> list[Viewpoint]:
    """Up to ``n`` reachable, unoccluded viewpoints at ``sensor_range`` from
    the targets (assigned round-robin), looking at their target."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64)) if len(targets) else np.zeros((0, 3), np.int64)
    if len(targets) == 0 or n <= 0:
        return []
    budget = attempt_budget if attempt_budget is not None else 10 * n
    centers = tree.center_of(targets)
    out = []
    for attempt in range(budget):
        if len(out) >= n:
            break
        tgt = centers[attempt % len(targets)]
        d = random_unit_vectors(rng, 1)[0]
        pos = tgt + sensor_range * d
        if not is_reachable(workspace, pos):
            continue
        hit = tree.cast_ray(pos, -d, sensor_range)
        if hit.kind == HitKind.OCCUPIED:
            continue
        out.append(Viewpoint(Pose.look_at(pos, tgt), tgt.copy(), origin_kind=kind))
    return out


# ------------------------------------------------------- information gain
def proximity_weight(d: float | None, d_max: float) -> float:
    """Weight of an unknown voxel ``d`` metres from the nearest known ROI."""
    if d is None:
        return 0.5
    if d < 0:
        raise ValueError("distance must be non-negative")
    if d > d_max:
        return 0.5
    return 0.5 + 0.5 * (d_max - d) / d_max


def ig_ray_directions(cam: CameraModel, grid: tuple) -> np.ndarray:
    """Camera-frame unit rays on a regular ``(nu, nv)`` grid across the FOV."""
    nu, nv = grid
    u = (np.arange(nu) + 0.5) / nu * 2 - 1
    v = (np.arange(nv) + 0.5) / nv * 2 - 1
    uu, vv = np.meshgrid(u * np.tan(cam.hfov / 2), v * np.tan(cam.vfov / 2))
    d = np.stack([uu.ravel(), vv.ravel(), np.ones(nu * nv)], axis=1)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def info_gains(tree: RoiOcTree, poses, cam: CameraModel, cfg: PlannerConfig) -> np.ndarray:
    """Mean over rays of (weighted unknown voxels / visited voxels), per pose."""
    poses = list(poses)
    if not poses:
        return np.zeros(0)
    local = ig_ray_directions(cam, cfg.ig_rays)
    nr = len(local)
    origins = np.repeat(np.array([p.position for p in poses]), nr, axis=0)
    dirs = np.concatenate([local @ p.rotation.T for p in poses])
    keys, cls, ray = tree.ray_voxels(origins, dirs, cfg.sensor_range, stop_at_occupied=True)
    total = len(origins)
    n_r = np.bincount(ray, minlength=total).astype(float)
    unk = cls == K.UNKNOWN
    w_r = np.zeros(total)
    if unk.any():
        ukeys, inv = np.unique(keys[unk], axis=0, return_inverse=True)
        dist = tree.roi_distances(ukeys, cfg.d_max)[inv.ravel()]
        w = np.where(np.isinf(dist), 0.5, 0.5 + 0.5 * (cfg.d_max - dist) / cfg.d_max)
        w_r = np.bincount(ray[unk], weights=w, minlength=total)
    ratio = np.divide(w_r, n_r, out=np.zeros(total), where=n_r > 0)
    return ratio.reshape(len(poses), nr).mean(axis=1)


def info_gain(tree: RoiOcTree, pose: Pose, cam: CameraModel, cfg: PlannerConfig) -> float:
    return float(info_gains(tree, [pose], cam, cfg)[0])


def utility(ig: float, cost: float, alpha: float) -> float:
    return ig - alpha * cost


def score_viewpoints(tree, vps, current: Pose, cam, cfg: PlannerConfig):
    igs = info_gains(tree, [v.pose for v in vps], cam, cfg)
    for v, ig in zip(vps, igs):
        v.ig = float(ig)
        v.cost = move_cost(current, v.pose)
        v.utility = utility(v.ig, v.cost, cfg.alpha)
    return vps


def rank_viewpoints(vps) -> list[Viewpoint]:
    """Descending utility; ties by lower cost, then sample order."""
    order = sorted(range(len(vps)), key=lambda i: (-vps[i].utility, vps[i].cost, i))
    return [vps[i] for i in order]


def _pick_targets(frontiers, n, rng):
    if len(frontiers) <= n:
        return frontiers[rng.permutation(len(frontiers))]
    return frontiers[rng.choice(len(frontiers), size=n, replace=False)]


def sample_global(tree: RoiOcTree, workspace: Workspace, cfg: PlannerConfig, current: Pose,
                  rng: np.random.Generator, cam: CameraModel = RGBD_CAMERA) -> list[Viewpoint]:
    """ROI-targeted candidates first; exploration candidates are added when
    there are no ROI frontiers or none of their views clears the threshold."""
    budget = cfg.attempt_factor * cfg.n_vps
    cands: list[Viewpoint] = []
    roi_f = tree.roi_frontiers()
    if len(roi_f):
        targets = _pick_targets(roi_f, cfg.n_vps, rng)
        cands = sample_viewpoints(tree, workspace, targets, cfg.n_vps, rng, cfg.sensor_range,
                                  OriginKind.ROI_TARGETED, budget)
        score_viewpoints(tree, cands, current, cam, cfg)
    best = max((v.utility for v in cands), default=-np.inf)
    if not len(roi_f) or best <= cfg.utility_thresh:
        expl_f = tree.exploration_frontiers()
        if len(expl_f):
            targets = _pick_targets(expl_f, cfg.n_vps, rng)
            expl = sample_viewpoints(tree, workspace, targets, cfg.n_vps, rng, cfg.sensor_range,
                                     OriginKind.EXPLORATION, budget)
            cands += score_viewpoints(tree, expl, current, cam, cfg)
    return rank_viewpoints(cands)


# ------------------------------------------------------ combined planning
@dataclass
class MtsMove:
    pose: Pose
    delta: float = 0.0


@dataclass
class GlobalMove:
    viewpoint: Viewpoint

    @property
    def pose(self) -> Pose:
        return self.viewpoint.pose


@dataclass
class Stalled:
    reason: str = "no viewpoint above utility threshold"


@dataclass
class PlannerState:
    pose: Pose
    rng: np.random.Generator
    use_mts: bool = True
    m2s_moves: int = 0
    log: list = field(default_factory=list)


def plan_episode(scene: Scene | None, tree: RoiOcTree, workspace: Workspace, mts_cfg: MtsConfig,
                 planner_cfg: PlannerConfig, state: PlannerState, *,
                 mts: Callable | None = None, sampler: Callable | None = None,
                 mover: Callable | None = None, camera: CameraModel = RGBD_CAMERA):
    """One decision of the viewpoint planning loop.

    ``mts(pose, moves_so_far)``, ``sampler(pose)`` and ``mover(from, to)``
    default to the real components; tests substitute scripted stubs.
    """
    if mts is None:
        def mts(pose, moves):
            return mts_step(scene, pose, workspace, mts_cfg, moves)
    if sampler is None:
        def sampler(pose):
            return sample_global(tree, workspace, planner_cfg, pose, state.rng, camera)
    if mover is None:
        def mover(a, b):
            return segment_reachable(workspace, a, b)

    if state.use_mts and state.m2s_moves < mts_cfg.max_moves:
        step = mts(state.pose, state.m2s_moves)
        if step.decision == MtsDecision.MOVE:
            state.m2s_moves += 1
            state.log.append(("mts", step.delta))
            return MtsMove(step.pose, step.delta)
        state.log.append((step.decision.value, step.delta))
    state.m2s_moves = 0
    for _ in range(2):
        for vp in sampler(state.pose):
            if not vp.utility > planner_cfg.utility_thresh:
                break
            if mover(state.pose, vp.pose):
                state.log.append(("global", vp.utility))
                return GlobalMove(vp)
        state.log.append(("resample", None))
    return Stalled()
