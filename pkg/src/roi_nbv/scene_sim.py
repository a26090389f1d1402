"""Synthetic plant scenes, pinhole rendering and robot workspaces.

Plants are a cylinder stem, fruit ellipsoids around it and rectangular leaf
patches. Leaves are placed per fruit so that a configurable fraction of the
fruit is hidden from its outward-facing hemisphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from roi_nbv import _kernels as K
from roi_nbv.geometry import Pose, frame_from_normal, normalize, rotation_about

BACKGROUND = -2
OCCLUDER = -1

SCENARIOS = (1, 2, 3)
FRUIT_COUNTS = {1: 14, 2: 28, 3: 42}
FRUITS_PER_PLANT = 7


# ------------------------------------------------------------------ types
@dataclass(frozen=True)
class Fruit:
    id: int
    center: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))
        if np.any(self.radii <= 0):
            raise ValueError("fruit radii must be positive")

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.radii, self.center + self.radii

    @property
    def bbox_volume(self) -> float:
        return float(np.prod(2 * self.radii))


@dataclass(frozen=True)
class Occluder:
    """``extents``: ellipsoid radii (3), rectangle (width, height) or
    cylinder (radius, length) along the local z axis."""

    shape: str
    pose: Pose
    extents: tuple

    def __post_init__(self):
        if self.shape not in ("ellipsoid", "rectangle", "cylinder"):
            raise ValueError(f"unknown occluder shape {self.shape!r}")
        if any(e <= 0 for e in self.extents):
            raise ValueError("occluder extents must be positive")


@dataclass(frozen=True)
class CameraModel:
    hfov: float = 1.0
    vfov: float = 1.0
    width: int = 64
    height: int = 64
    min_range: float = 0.05
    max_range: float = 1.0

    def __post_init__(self):
        if not (0 < self.hfov < math.pi and 0 < self.vfov < math.pi):
            raise ValueError("fields of view must lie in (0, pi)")
        if self.width < 8 or self.height < 8:
            raise ValueError("images must be at least 8x8")
        if not 0 <= self.min_range < self.max_range:
            raise ValueError("need 0 <= min_range < max_range")

    @property
    def fx(self) -> float:
        return 0.5 * self.width / math.tan(0.5 * self.hfov)

    @property
    def fy(self) -> float:
        return 0.5 * self.height / math.tan(0.5 * self.vfov)

    def pixel_rays(self) -> np.ndarray:
        """Camera-frame unit rays through pixel centres, shape (H*W, 3)."""
        return _pixel_rays(self.width, self.height, self.fx, self.fy)

    def project(self, p_cam) -> np.ndarray:
        p = np.asarray(p_cam, dtype=float)
        return np.array([self.fx * p[0] / p[2] + 0.5 * self.width,
                         self.fy * p[1] / p[2] + 0.5 * self.height])


_RAY_CACHE: dict = {}


def _pixel_rays(w, h, fx, fy):
    key = (w, h, fx, fy)
    if key not in _RAY_CACHE:
        u = (np.arange(w) + 0.5 - 0.5 * w) / fx
        v = (np.arange(h) + 0.5 - 0.5 * h) / fy
        uu, vv = np.meshgrid(u, v)
        d = np.stack([uu.ravel(), vv.ravel(), np.ones(w * h)], axis=1)
        _RAY_CACHE[key] = d / np.linalg.norm(d, axis=1, keepdims=True)
    return _RAY_CACHE[key]


RGBD_CAMERA = CameraModel(hfov=1.0, vfov=1.0, width=256, height=256, min_range=0.1, max_range=1.0)
ARRAY_CAMERA = CameraModel(hfov=1.0, vfov=1.0, width=64, height=64, min_range=0.05, max_range=1.0)


@dataclass(frozen=True)
class CameraArrayConfig:
    """3x3 camera array: reference in the middle, the 8 outer cameras at
    (+-o_x, +-o_y) in the image plane and set back by o_z along the optical
    axis. All cameras share the reference orientation."""

    offset: tuple = (0.027, 0.027, 0.03)

    @cached_property
    def layout(self) -> np.ndarray:
        ox, oy, oz = self.offset
        cells = [(i, j) for j in (-1, 0, 1) for i in (-1, 0, 1) if (i, j) != (0, 0)]
        return np.array([[i * ox, j * oy, -oz] for i, j in cells], dtype=float)

    @cached_property
    def directions(self) -> np.ndarray:
        return self.layout / np.linalg.norm(self.layout, axis=1, keepdims=True)


@dataclass(frozen=True)
class Workspace:
    """Analytic reachable set for the camera.

    ``sphere-pole``: ball of radius ``reach`` around ``base`` minus an inner
    ball of ``inner_radius`` and the supporting pole below the base.
    ``box-gantry``: points within ``reach`` of the box the arm base can
    travel through (``travel`` square at ``ceiling``, extending ``drop``).
    """

    kind: str
    base: tuple = (0.0, 0.0, 0.85)
    reach: float = 0.85
    inner_radius: float = 0.15
    pole_radius: float = 0.08
    travel: tuple = (2.0, 2.0)
    drop: float = 1.2
    ceiling: float = 2.0
    floor: float = 0.05

    def __post_init__(self):
        if self.kind not in ("sphere-pole", "box-gantry"):
            raise ValueError(f"unknown workspace kind {self.kind!r}")

    @classmethod
    def sphere_pole(cls, **kw):
        return cls("sphere-pole", **kw)

    @classmethod
    def box_gantry(cls, **kw):
        return cls("box-gantry", **kw)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ok = p[:, 2] >= self.floor
        if self.kind == "sphere-pole":
            b = np.asarray(self.base)
            d = np.linalg.norm(p - b, axis=1)
            horiz = np.linalg.norm(p[:, :2] - b[:2], axis=1)
            in_pole = (p[:, 2] < b[2]) & (horiz < self.pole_radius)
            return ok & (d <= self.reach) & (d >= self.inner_radius) & ~in_pole
        half = np.array([self.travel[0] / 2, self.travel[1] / 2])
        zlo, zhi = self.ceiling - self.drop, self.ceiling
        gap_xy = np.maximum(np.abs(p[:, :2]) - half, 0.0)
        gap_z = np.maximum(np.maximum(zlo - p[:, 2], p[:, 2] - zhi), 0.0)
        d = np.sqrt((gap_xy ** 2).sum(axis=1) + gap_z ** 2)
        return ok & (d <= self.reach) & (p[:, 2] <= self.ceiling)


def is_reachable(ws: Workspace, pose) -> bool:
    pos = pose.position if isinstance(pose, Pose) else pose
    return bool(ws.contains(pos)[0])


def segment_reachable(ws: Workspace, a, b, step: float = 0.01) -> bool:
    """Straight-line motion check used in place of a joint-space planner."""
    a = a.position if isinstance(a, Pose) else np.asarray(a, dtype=float)
    b = b.position if isinstance(b, Pose) else np.asarray(b, dtype=float)
    n = max(2, int(math.ceil(np.linalg.norm(b - a) / step)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return bool(np.all(ws.contains(a + t * (b - a))))


def move_cost(a, b) -> float:
    a = a.position if isinstance(a, Pose) else np.asarray(a, dtype=float)
    b = b.position if isinstance(b, Pose) else np.asarray(b, dtype=float)
    return float(np.linalg.norm(b - a))


def array_poses(reference: Pose, cfg: CameraArrayConfig | None = None) -> list[Pose]:
    cfg = cfg or CameraArrayConfig()
    out = [reference]
    for off in cfg.layout:
        out.append(Pose(reference.position + reference.rotation @ off, reference.rotation))
    return out


# -------------------------------------------------------------- rendering
@dataclass
class LabeledImage:
    labels: np.ndarray
    depth: np.ndarray
    pose: Pose
    camera: CameraModel

    @property
    def shape(self):
        return self.labels.shape

    def fruit_mask(self) -> np.ndarray:
        return self.labels >= 0

    def world_rays(self) -> np.ndarray:
        return self.camera.pixel_rays() @ self.pose.rotation.T

    def back_project(self, u: float, v: float, depth: float) -> np.ndarray:
        c = self.camera
        d = np.array([(u - 0.5 * c.width) / c.fx, (v - 0.5 * c.height) / c.fy, 1.0])
        return self.pose.position + depth * (self.pose.rotation @ (d / np.linalg.norm(d)))


class Primitives:
    """Packed analytic geometry for the render kernel."""

    def __init__(self, fruits, occluders):
        kinds, labels, centers, rots, params, radii = [], [], [], [], [], []
        for f in fruits:
            kinds.append(K.SHAPE_ELLIPSOID)
            labels.append(f.id)
            centers.append(f.center)
            rots.append(np.eye(3))
            params.append(f.radii)
            radii.append(f.radii.max())
        for o in occluders:
            centers.append(o.pose.position)
            rots.append(o.pose.rotation)
            labels.append(OCCLUDER)
            e = o.extents
            if o.shape == "ellipsoid":
                kinds.append(K.SHAPE_ELLIPSOID)
                params.append(e)
                radii.append(max(e))
            elif o.shape == "rectangle":
                kinds.append(K.SHAPE_RECT)
                params.append((e[0] / 2, e[1] / 2, 0.0))
                radii.append(math.hypot(e[0] / 2, e[1] / 2))
            else:
                kinds.append(K.SHAPE_CYLINDER)
                params.append((e[0], e[1] / 2, 0.0))
                radii.append(math.hypot(e[0], e[1] / 2))
        n = len(kinds)
        self.kinds = np.array(kinds, dtype=np.int64)
        self.labels = np.array(labels, dtype=np.int64)
        self.centers = np.array(centers, dtype=float).reshape(n, 3)
        self.rots = np.array(rots, dtype=float).reshape(n, 3, 3)
        self.params = np.array(params, dtype=float).reshape(n, 3)
        self.radii = np.array(radii, dtype=float)

    def __len__(self):
        return len(self.kinds)

    def pixel_boxes(self, pose: Pose, cam: CameraModel):
        """Primitive subset that can appear in the image and a conservative
        pixel box for each (u0, u1, v0, v1, exclusive upper ends)."""
        W, H = cam.width, cam.height
        if len(self) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros((0, 4), dtype=np.int64)
        p = (self.centers - pose.position) @ pose.rotation
        r = self.radii
        dist = np.linalg.norm(p, axis=1)
        half_diag = math.atan(math.hypot(math.tan(cam.hfov / 2), math.tan(cam.vfov / 2)))
        with np.errstate(invalid="ignore", divide="ignore"):
            ang = np.arccos(np.clip(p[:, 2] / np.maximum(dist, 1e-12), -1, 1))
            ang_r = np.arcsin(np.clip(r / np.maximum(dist, 1e-12), 0, 1))
        keep = (dist - r <= cam.max_range) & (p[:, 2] >= -r) & (dist + r >= cam.min_range)
        keep &= (dist <= r) | (ang <= half_diag + ang_r + 1e-9)
        idx = np.flatnonzero(keep)
        boxes = np.tile(np.array([0, W, 0, H], dtype=np.int64), (len(idx), 1))
        for row, i in enumerate(idx):
            px, py, pz = p[i]
            ri = r[i]
            if pz - ri <= 1e-9:
                continue
            for axis, f, c, n, col in ((px, cam.fx, 0.5 * W, W, 0), (py, cam.fy, 0.5 * H, H, 2)):
                d2 = math.hypot(axis, pz)
                a = math.atan2(axis, pz)
                w = math.asin(min(1.0, ri / d2))
                lo = f * math.tan(a - w) + c
                hi = f * math.tan(a + w) + c
                boxes[row, col] = min(max(int(math.floor(lo - 0.5)), 0), n)
                boxes[row, col + 1] = min(max(int(math.ceil(hi - 0.5)) + 1, 0), n)
        return idx, boxes

    def render(self, pose: Pose, cam: CameraModel) -> LabeledImage:
        W, H = cam.width, cam.height
        depth = np.full(W * H, np.inf)
        labels = np.full(W * H, BACKGROUND, dtype=np.int64)
        idx, boxes = self.pixel_boxes(pose, cam)
        if len(idx):
            dirs = np.ascontiguousarray(cam.pixel_rays() @ pose.rotation.T)
            K.render_kernel(pose.position, dirs, W, self.kinds[idx], self.labels[idx],
                            np.ascontiguousarray(self.centers[idx]), np.ascontiguousarray(self.rots[idx]),
                            np.ascontiguousarray(self.params[idx]), boxes,
                            float(cam.min_range), float(cam.max_range), depth, labels)
        return LabeledImage(labels.reshape(H, W).astype(np.int32), depth.reshape(H, W), pose, cam)


# ------------------------------------------------------------------ scene
@dataclass
class SceneConfig:
    scenario: int = 1
    seed: int = 0
    occlusion_density: float = 0.5
    fruit_radii_range: tuple = (0.03, 0.05)
    leaves_per_plant: tuple = (10, 20)
    leaf_size: tuple = (0.08, 0.12)
    plants: list | None = None  # [{"position": [x, y], "fruits": bool}, ...]

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; valid ids are 1, 2, 3")
        if not 0.0 <= self.occlusion_density <= 1.0:
            raise ValueError("occlusion_density must lie in [0, 1]")
        self.fruit_radii_range = tuple(float(x) for x in self.fruit_radii_range)
        self.leaves_per_plant = tuple(int(x) for x in self.leaves_per_plant)
        self.leaf_size = tuple(float(x) for x in self.leaf_size)


@dataclass
class Scene:
    fruits: list
    occluders: list
    world_bounds: tuple
    scenario_id: int
    workspace: Workspace
    initial_pose: Pose
    seed: int = 0
    plant_positions: list = field(default_factory=list)

    @cached_property
    def primitives(self) -> Primitives:
        return Primitives(self.fruits, self.occluders)

    @property
    def fruit_count(self) -> int:
        return len(self.fruits)


def _layout(scenario: int):
    """(plant positions with fruit flags, workspace, bounds, start pose)."""
    if scenario == 1:
        plants = [((0.40, 0.15), True), ((0.40, -0.15), False),
                  ((0.70, 0.15), False), ((0.70, -0.15), True)]
        ws = Workspace.sphere_pole()
        bounds = (np.array([-0.3, -0.75, 0.0]), np.array([1.2, 0.75, 1.5]))
        start = Pose.look_at([0.20, 0.0, 0.95], [0.55, 0.0, 0.55])
    elif scenario == 2:
        plants = [((x, y), True) for x in (-0.75, 0.75) for y in (-0.75, 0.75)]
        ws = Workspace.box_gantry()
        bounds = (np.array([-1.2, -1.2, 0.0]), np.array([1.2, 1.2, 1.4]))
        start = Pose.look_at([0.0, 0.0, 1.1], [-0.75, -0.75, 0.55])
    else:
        plants = []
        for y in (-0.4, 0.4):
            for i in range(6):
                plants.append(((-0.875 + 0.35 * i, y), i % 2 == 0))
        ws = Workspace.box_gantry()
        bounds = (np.array([-1.2, -0.9, 0.0]), np.array([1.2, 0.9, 1.4]))
        start = Pose.look_at([-0.7, 0.0, 1.0], [-0.875, -0.4, 0.55])
    return plants, ws, bounds, start


def _hidden_fraction(prims_all: Primitives, prims_fruit: Primitives, fruit: Fruit, outward) -> float:
    """Mean fraction of the fruit's silhouette hidden by other geometry, over
    five views from the outward-facing hemisphere at 0.4 m."""
    up = np.array([0.0, 0.0, 1.0])
    side = np.cross(up, outward)
    side = side / np.linalg.norm(side) if np.linalg.norm(side) > 1e-9 else np.array([1.0, 0.0, 0.0])
    views = [outward]
    for axis, ang in ((up, 0.7), (up, -0.7), (side, 0.5), (side, -0.5)):
        views.append(rotation_about(axis, ang) @ outward)
    dist = 0.4
    fov = 2.0 * math.atan(1.3 * fruit.radii.max() / dist)
    cam = CameraModel(hfov=fov, vfov=fov, width=24, height=24, min_range=0.01, max_range=2.0)
    fracs = []
    for v in views:
        pose = Pose.look_at(fruit.center + dist * v, fruit.center)
        total = np.count_nonzero(prims_fruit.render(pose, cam).labels == fruit.id)
        seen = np.count_nonzero(prims_all.render(pose, cam).labels == fruit.id)
        if total:
            fracs.append(1.0 - seen / total)
    return float(np.mean(fracs)) if fracs else 0.0


def _make_leaf(center, normal, rng, size):
    w = size[0] * rng.uniform(0.85, 1.15)
    h = size[1] * rng.uniform(0.85, 1.15)
    R = frame_from_normal(normal, spin=rng.uniform(-0.6, 0.6))
    return Occluder("rectangle", Pose(center, R), (w, h))


def generate_scene(scenario: int, seed: int = 0, config: SceneConfig | None = None) -> Scene:
    """Deterministic scene for (scenario, seed)."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; valid ids are 1, 2, 3")
    cfg = config or SceneConfig(scenario=scenario, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([int(scenario), int(seed)]))
    plants, ws, bounds, start = _layout(scenario)
    if cfg.plants is not None:
        plants = [(tuple(p["position"]), bool(p.get("fruits", True))) for p in cfg.plants]
    rmin, rmax = cfg.fruit_radii_range
    target = cfg.occlusion_density
    band = (max(0.0, target - 0.2), min(1.0, target + 0.2))

    fruits: list[Fruit] = []
    occluders: list[Occluder] = []
    plant_positions = []
    for (px, py), has_fruit in plants:
        base = np.array([px, py, 0.0])
        height = rng.uniform(0.85, 1.0)
        stem_r = 0.008
        occluders.append(Occluder("cylinder", Pose([px, py, height / 2], np.eye(3)), (stem_r, height)))
        plant_positions.append((px, py, bool(has_fruit)))

        plant_fruits = []
        if has_fruit:
            zs = np.sort(rng.uniform(0.3, 0.85, FRUITS_PER_PLANT))
            for z in zs:
                for _ in range(200):
                    rxy = rng.uniform(rmin, rmin + 0.75 * (rmax - rmin))
                    radii = np.array([rxy, rxy, rng.uniform(rmin + 0.25 * (rmax - rmin), rmax)])
                    th = rng.uniform(0, 2 * math.pi)
                    zc = z + rng.uniform(-0.03, 0.03)
                    c = base + np.array([(stem_r + rxy + 0.006) * math.cos(th),
                                         (stem_r + rxy + 0.006) * math.sin(th), zc])
                    ok = all(np.any(np.abs(c - f.center) >= f.radii + radii + 0.02)
                             for f in plant_fruits)
                    if ok:
                        break
                f = Fruit(len(fruits) + len(plant_fruits), c, radii)
                plant_fruits.append(f)

        n_leaves = int(rng.integers(cfg.leaves_per_plant[0], cfg.leaves_per_plant[1] + 1))
        n_random = max(0, n_leaves - len(plant_fruits))
        leaves = []
        for _ in range(n_random):
            for _ in range(50):
                th = rng.uniform(0, 2 * math.pi)
                rad = rng.uniform(0.05, 0.16)
                c = base + np.array([rad * math.cos(th), rad * math.sin(th), rng.uniform(0.2, height)])
                if all(np.linalg.norm(c - f.center) > f.radii.max() + 0.05 for f in plant_fruits):
                    break
            normal = np.array([math.cos(th), math.sin(th), rng.uniform(-0.8, 0.8)])
            leaves.append(_make_leaf(c, normal, rng, cfg.leaf_size))

        # one shading leaf per fruit, its lateral offset tuned to the target band
        fruit_leaf = [None] * len(plant_fruits)
        outward = []
        for f in plant_fruits:
            o = f.center - base
            o[2] = 0.0
            outward.append(normalize(o))
        for _ in range(2):
            for i, f in enumerate(plant_fruits):
                others = [lf for j, lf in enumerate(fruit_leaf) if j != i and lf is not None]
                fixed = occluders + leaves + others
                fp = Primitives([f], [])
                best = None
                for _ in range(12):
                    u = outward[i]
                    tang = normalize(np.cross(u, [0.0, 0.0, 1.0]))
                    lat = np.cos(rng.uniform(0, 2 * math.pi)) * tang
                    lat += np.array([0.0, 0.0, 0.5 * rng.uniform(-1, 1)])
                    off = rng.uniform(0.0, 0.09)
                    gap = f.radii[:2].max() + rng.uniform(0.02, 0.05)
                    c = f.center + gap * u + off * lat
                    normal = rotation_about([0, 0, 1], rng.uniform(-0.4, 0.4)) @ u
                    normal = normal + np.array([0, 0, rng.uniform(-0.3, 0.3)])
                    leaf = _make_leaf(c, normal, rng, cfg.leaf_size)
                    allp = Primitives(plant_fruits, fixed + [leaf])
                    h = _hidden_fraction(allp, fp, f, u)
                    score = 0.0 if band[0] <= h <= band[1] else min(abs(h - band[0]), abs(h - band[1]))
                    if best is None or score < best[0] or (score == best[0] == 0.0 and abs(h - target) < best[2]):
                        best = (score, leaf, abs(h - target))
                    if score == 0.0 and abs(h - target) < 0.1:
                        break
                fruit_leaf[i] = best[1]
        occluders.extend(leaves)
        occluders.extend(lf for lf in fruit_leaf if lf is not None)
        fruits.extend(plant_fruits)

    for i, f in enumerate(fruits):
        if f.id != i:
            fruits[i] = Fruit(i, f.center, f.radii)
    return Scene(fruits, occluders, bounds, scenario, ws, start, seed=seed, plant_positions=plant_positions)


def render(scene: Scene, pose: Pose, cam: CameraModel) -> LabeledImage:
    """Per-pixel label (fruit id, OCCLUDER or BACKGROUND) and ray range."""
    return scene.primitives.render(pose, cam)


def image_to_pointcloud(img: LabeledImage):
    hit = img.labels.ravel() != BACKGROUND
    rays = img.world_rays()[hit]
    pts = img.pose.position + rays * img.depth.ravel()[hit, None]
    return pts, img.labels.ravel()[hit] >= 0


def render_pointcloud(scene: Scene, pose: Pose, cam: CameraModel):
    """World points and ROI flags for every non-background pixel."""
    return image_to_pointcloud(render(scene, pose, cam))


def fruit_occlusion(scene: Scene, fruit_id: int, plant_radius: float = 0.6) -> float:
    """Hidden fraction of one fruit from its outward hemisphere (diagnostic)."""
    f = scene.fruits[fruit_id]
    plant = min(scene.plant_positions, key=lambda p: math.hypot(p[0] - f.center[0], p[1] - f.center[1]))
    o = f.center - np.array([plant[0], plant[1], f.center[2]])
    return _hidden_fraction(scene.primitives, Primitives([f], []), f, normalize(o))


# -------------------------------------------------------------------- i/o
def load_scene_config(path) -> SceneConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    allowed = set(SceneConfig.__dataclass_fields__)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown scene config key: {unknown[0]}")
    return SceneConfig(**data)


def export_scene(scene: Scene, path):
    """``scenario``/``seed``/``fruits`` header lines, then ``id cx cy cz rx ry rz``."""
    lines = [f"scenario {scene.scenario_id}", f"seed {scene.seed}", f"fruits {len(scene.fruits)}"]
    for f in scene.fruits:
        vals = " ".join(repr(float(v)) for v in (*f.center, *f.radii))
        lines.append(f"{f.id} {vals}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_fruits(path) -> list[Fruit]:
    fruits = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0] in ("scenario", "seed", "fruits"):
            continue
        if len(parts) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 fields")
        v = [float(x) for x in parts[1:]]
        fruits.append(Fruit(int(parts[0]), v[:3], v[3:]))
    return fruits


def occluded_fruit_scene(seed: int = 0, distance: float = 0.3) -> Scene:
    """One fruit, one leaf partially covering it from the start view.

    Used for local-ascent checks: the initial camera looks straight at the
    fruit from ``distance`` with the leaf shifted sideways in between so
    that 20-70% of the fruit is hidden.
    """
    rng = np.random.default_rng(np.random.SeedSequence([99, int(seed)]))
    center = np.array([0.0, 0.0, 0.6])
    r = rng.uniform(0.03, 0.045)
    fruit = Fruit(0, center, np.array([r, r, r * rng.uniform(1.0, 1.2)]))
    view = normalize(np.array([1.0, rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.5)]))
    cam_pos = center + distance * view
    pose = Pose.look_at(cam_pos, center)
    alone = Primitives([fruit], [])
    n_full = np.count_nonzero(alone.render(pose, ARRAY_CAMERA).labels == 0)
    for _ in range(100):
        ang = rng.uniform(0, 2 * math.pi)
        lateral = pose.rotation @ np.array([math.cos(ang), math.sin(ang), 0.0])
        gap = rng.uniform(0.08, 0.14)
        leaf_c = center + gap * view + rng.uniform(0.02, 0.06) * lateral
        size = (rng.uniform(0.06, 0.08), rng.uniform(0.07, 0.1))
        leaf = Occluder("rectangle", Pose(leaf_c, frame_from_normal(view, spin=ang)), size)
        seen = np.count_nonzero(Primitives([fruit], [leaf]).render(pose, ARRAY_CAMERA).labels == 0)
        if 0.2 <= 1.0 - seen / n_full <= 0.7:
            break
    ws = Workspace.box_gantry(travel=(2.0, 2.0), ceiling=1.6, drop=1.6)
    bounds = (np.array([-1.0, -1.0, 0.0]), np.array([1.0, 1.0, 1.4]))
    return Scene([fruit], [leaf], bounds, 0, ws, pose, seed=seed, plant_positions=[(0.0, 0.0, True)])
