"""Voxel map with per-voxel occupancy and ROI log-odds.

Storage is a dense box of voxels that grows on demand (and is clipped to
``bounds`` when given). A voxel that has never been touched is Unknown;
the box layout is an implementation detail, callers only see integer keys.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from roi_nbv import _kernels as K


class Occupancy(enum.IntEnum):
    UNKNOWN = K.UNKNOWN
    FREE = K.FREE
    OCCUPIED = K.OCCUPIED


class HitKind(enum.IntEnum):
    CLEAR = K.HIT_CLEAR
    OCCUPIED = K.HIT_OCCUPIED
    UNKNOWN = K.HIT_UNKNOWN


@dataclass(frozen=True)
class MapConfig:
    resolution: float = 0.01
    hit: float = 0.85
    miss: float = -0.4
    clamp_min: float = -2.0
    clamp_max: float = 3.5
    roi_hit: float = 0.85
    roi_miss: float = -0.4
    roi_threshold: float = 0.0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if not self.clamp_min < 0 < self.clamp_max:
            raise ValueError("clamp limits must straddle zero")


@dataclass(frozen=True)
class VoxelNode:
    occ_logodds: float
    roi_logodds: float


@dataclass(frozen=True)
class VoxelClass:
    occupancy: Occupancy
    is_roi: bool


@dataclass(frozen=True)
class RayHit:
    kind: HitKind
    key: tuple | None = None


@dataclass
class RoiCluster:
    voxel_keys: np.ndarray
    centroid: np.ndarray
    bbox: tuple[np.ndarray, np.ndarray]

    @property
    def size(self) -> int:
        return len(self.voxel_keys)


def _as_key(key) -> np.ndarray:
    k = np.asarray(key, dtype=np.int64).reshape(3)
    return k


def clip_segments(origins, dirs, lengths, lo, hi):
    """Slab-clip segments ``o + t d, t in [0, length]`` to the box [lo, hi].

    Returns (t_lo, t_hi); empty intersections have t_lo >= t_hi.
    """
    origins = np.atleast_2d(origins)
    dirs = np.atleast_2d(dirs)
    t_lo = np.zeros(len(origins))
    t_hi = np.asarray(lengths, dtype=float).copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        for a in range(3):
            d = dirs[:, a]
            o = origins[:, a]
            t1 = (lo[a] - o) / d
            t2 = (hi[a] - o) / d
            tn = np.minimum(t1, t2)
            tf = np.maximum(t1, t2)
            par = d == 0
            inside = (o >= lo[a]) & (o <= hi[a])
            tn = np.where(par, np.where(inside, -np.inf, np.inf), tn)
            tf = np.where(par, np.where(inside, np.inf, -np.inf), tf)
            t_lo = np.maximum(t_lo, tn)
            t_hi = np.minimum(t_hi, tf)
    t_lo = np.where(t_lo > 0, t_lo + 1e-9, t_lo)
    return t_lo, t_hi


class RoiOcTree:
    """Occupancy + ROI voxel map.

    >>> m = RoiOcTree()
    >>> m.classify((0, 0, 0)).occupancy
    <Occupancy.UNKNOWN: 0>
    """

    GROW_MARGIN = 16

    def __init__(self, config: MapConfig | None = None, bounds=None):
        self.config = config or MapConfig()
        self.resolution = self.config.resolution
        self.bounds = None
        self._bound_keys = None
        if bounds is not None:
            lo = np.asarray(bounds[0], dtype=float)
            hi = np.asarray(bounds[1], dtype=float)
            if np.any(hi <= lo):
                raise ValueError("empty bounds")
            self.bounds = (lo, hi)
            klo = self.key_of(lo)
            khi = np.ceil(hi / self.resolution - K.KEY_EPS).astype(np.int64) - 1
            self._bound_keys = (klo, khi)
        self._okey = np.zeros(3, dtype=np.int64)
        self._occ = np.zeros((0, 0, 0), dtype=np.float32)
        self._roi = np.zeros((0, 0, 0), dtype=np.float32)
        self._known = np.zeros((0, 0, 0), dtype=np.bool_)
        self._stamp = np.zeros((0, 0, 0), dtype=np.int32)
        self._scan_id = 0
        self.version = 0
        self._roi_cache = None

    # ---------------------------------------------------------------- keys
    def key_of(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.floor(p / self.resolution + K.KEY_EPS).astype(np.int64)

    def center_of(self, keys) -> np.ndarray:
        return (np.asarray(keys, dtype=float) + 0.5) * self.resolution

    def _in_bounds(self, keys) -> np.ndarray:
        keys = np.atleast_2d(keys)
        if self._bound_keys is None:
            return np.ones(len(keys), dtype=bool)
        lo, hi = self._bound_keys
        return np.all((keys >= lo) & (keys <= hi), axis=1)

    def _bound_box_m(self):
        lo, hi = self._bound_keys
        return lo * self.resolution, (hi + 1) * self.resolution

    # ------------------------------------------------------------- storage
    def _ensure(self, kmin, kmax):
        kmin = np.asarray(kmin, dtype=np.int64)
        kmax = np.asarray(kmax, dtype=np.int64)
        if self._bound_keys is not None:
            kmin = np.maximum(kmin, self._bound_keys[0])
            kmax = np.minimum(kmax, self._bound_keys[1])
            if np.any(kmax < kmin):
                return
        shape = np.array(self._occ.shape, dtype=np.int64)
        cur_lo = self._okey
        cur_hi = self._okey + shape - 1
        if shape.min() > 0 and np.all(kmin >= cur_lo) and np.all(kmax <= cur_hi):
            return
        if shape.min() > 0:
            new_lo = np.minimum(kmin - self.GROW_MARGIN, cur_lo)
            new_hi = np.maximum(kmax + self.GROW_MARGIN, cur_hi)
        else:
            new_lo = kmin - self.GROW_MARGIN
            new_hi = kmax + self.GROW_MARGIN
        if self._bound_keys is not None:
            new_lo = np.maximum(new_lo, self._bound_keys[0])
            new_hi = np.minimum(new_hi, self._bound_keys[1])
        new_shape = tuple(int(s) for s in new_hi - new_lo + 1)
        occ = np.zeros(new_shape, dtype=np.float32)
        roi = np.zeros(new_shape, dtype=np.float32)
        known = np.zeros(new_shape, dtype=np.bool_)
        stamp = np.zeros(new_shape, dtype=np.int32)
        if shape.min() > 0:
            o = cur_lo - new_lo
            sl = tuple(slice(int(o[i]), int(o[i] + shape[i])) for i in range(3))
            occ[sl] = self._occ
            roi[sl] = self._roi
            known[sl] = self._known
            stamp[sl] = self._stamp
        self._okey = new_lo.astype(np.int64)
        self._occ, self._roi, self._known, self._stamp = occ, roi, known, stamp

    def _index(self, key):
        idx = _as_key(key) - self._okey
        if np.any(idx < 0) or np.any(idx >= np.array(self._occ.shape)):
            return None
        return tuple(int(i) for i in idx)

    def _touch(self):
        self.version += 1
        self._roi_cache = None

    def node(self, key) -> VoxelNode | None:
        idx = self._index(key)
        if idx is None or not self._known[idx]:
            return None
        return VoxelNode(float(self._occ[idx]), float(self._roi[idx]))

    def __contains__(self, key) -> bool:
        return self.node(key) is not None

    def __len__(self) -> int:
        return int(self._known.sum())

    def set_node(self, key, occ_logodds: float, roi_logodds: float = 0.0):
        """Write a voxel directly (log-odds are clamped)."""
        k = _as_key(key)
        if not self._in_bounds(k)[0]:
            raise ValueError(f"key {tuple(k)} outside map bounds")
        self._ensure(k, k)
        idx = self._index(k)
        c = self.config
        self._known[idx] = True
        self._occ[idx] = min(max(occ_logodds, c.clamp_min), c.clamp_max)
        self._roi[idx] = min(max(roi_logodds, c.clamp_min), c.clamp_max)
        self._touch()

    def keys(self) -> np.ndarray:
        idx = np.argwhere(self._known)
        return idx.astype(np.int64) + self._okey

    # ------------------------------------------------------ classification
    def classify(self, key) -> VoxelClass:
        n = self.node(key)
        if n is None or n.occ_logodds == 0.0:
            return VoxelClass(Occupancy.UNKNOWN, False)
        if n.occ_logodds > 0:
            return VoxelClass(Occupancy.OCCUPIED, n.roi_logodds > self.config.roi_threshold)
        return VoxelClass(Occupancy.FREE, False)

    def classify_keys(self, keys):
        """Vectorised classify: (occupancy codes, is_roi flags)."""
        keys = np.atleast_2d(np.asarray(keys, dtype=np.int64))
        occ_cls = np.zeros(len(keys), dtype=np.int8)
        roi = np.zeros(len(keys), dtype=bool)
        if self._occ.size == 0 or len(keys) == 0:
            return occ_cls, roi
        idx = keys - self._okey
        ok = np.all((idx >= 0) & (idx < np.array(self._occ.shape)), axis=1)
        ii = idx[ok]
        known = self._known[ii[:, 0], ii[:, 1], ii[:, 2]]
        o = self._occ[ii[:, 0], ii[:, 1], ii[:, 2]]
        r = self._roi[ii[:, 0], ii[:, 1], ii[:, 2]]
        c = np.where(known & (o > 0), K.OCCUPIED, np.where(known & (o < 0), K.FREE, K.UNKNOWN))
        occ_cls[ok] = c
        roi[ok] = (c == K.OCCUPIED) & (r > self.config.roi_threshold)
        return occ_cls, roi

    def _roi_mask(self) -> np.ndarray:
        return self._known & (self._occ > 0) & (self._roi > self.config.roi_threshold)

    def roi_keys(self) -> np.ndarray:
        return np.argwhere(self._roi_mask()).astype(np.int64) + self._okey

    def occupied_keys(self) -> np.ndarray:
        return np.argwhere(self._known & (self._occ > 0)).astype(np.int64) + self._okey

    # --------------------------------------------------------- integration
    def integrate_scan(self, origin, points, is_roi) -> int:
        """Ray-cast one point cloud from ``origin``; returns voxels touched."""
        origin = np.asarray(origin, dtype=float).reshape(3)
        if not np.all(np.isfinite(origin)):
            raise ValueError("non-finite scan origin")
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        lab = np.asarray(is_roi, dtype=bool).reshape(-1)
        if len(lab) != len(pts):
            raise ValueError("points and is_roi lengths differ")
        finite = np.all(np.isfinite(pts), axis=1)
        pts, lab = pts[finite], lab[finite]
        if len(pts) == 0:
            return 0
        delta = pts - origin
        lengths = np.linalg.norm(delta, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            dirs = np.where(lengths[:, None] > 0, delta / lengths[:, None], 0.0)
        if self._bound_keys is None:
            t_lo = np.zeros(len(pts))
            t_hi = lengths.copy()
            end_inside = np.ones(len(pts), dtype=bool)
            box = np.vstack([self.key_of(origin)[None], self.key_of(pts)])
        else:
            lo, hi = self._bound_box_m()
            t_lo, t_hi = clip_segments(np.broadcast_to(origin, pts.shape), dirs, lengths, lo, hi)
            end_inside = self._in_bounds(self.key_of(pts))
            live = t_hi > t_lo
            a = origin + dirs[live] * t_lo[live, None]
            b = origin + dirs[live] * t_hi[live, None]
            box = np.vstack([self.key_of(a), self.key_of(b), self.key_of(pts[end_inside])])
        if len(box):
            self._ensure(box.min(axis=0) - 1, box.max(axis=0) + 1)
        if self._occ.size == 0:
            return 0
        self._scan_id += 1
        c = self.config
        touched = K.integrate_kernel(
            origin, np.ascontiguousarray(pts), lab, t_lo, t_hi, end_inside,
            float(self.resolution), self._okey, self._occ, self._roi, self._known,
            self._stamp, np.int32(self._scan_id),
            np.float32(c.hit), np.float32(c.miss), np.float32(c.clamp_min), np.float32(c.clamp_max),
            np.float32(c.roi_hit), np.float32(c.roi_miss))
        self._touch()
        return int(touched)

    # ----------------------------------------------------------- ray casts
    def _clip_one(self, origin, d, length):
        if self._bound_keys is None:
            return 0.0, float(length)
        lo, hi = self._bound_box_m()
        t_lo, t_hi = clip_segments(origin[None], d[None], [length], lo, hi)
        return float(t_lo[0]), float(t_hi[0])

    def cast_ray(self, origin, direction, max_range: float, stop_at_unknown: bool = False) -> RayHit:
        origin = np.asarray(origin, dtype=float).reshape(3)
        d = np.asarray(direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if n == 0 or not np.isfinite(n):
            raise ValueError("ray direction must be non-zero")
        if abs(n - 1.0) > 1e-9:
            d = d / n
        t_lo, t_hi = self._clip_one(origin, d, max_range)
        if t_hi <= t_lo:
            return RayHit(HitKind.CLEAR)
        kind, kx, ky, kz = K.cast_ray_kernel(origin, d, t_lo, t_hi, float(self.resolution),
                                             self._okey, self._occ, self._known, stop_at_unknown)
        if kind == K.HIT_CLEAR:
            return RayHit(HitKind.CLEAR)
        return RayHit(HitKind(kind), (int(kx), int(ky), int(kz)))

    def ray_voxels(self, origins, dirs, max_range: float, stop_at_occupied: bool = True):
        """Voxels visited by a batch of rays, see ``ray_voxels_kernel``."""
        origins = np.ascontiguousarray(np.atleast_2d(origins), dtype=float)
        dirs = np.ascontiguousarray(np.atleast_2d(dirs), dtype=float)
        lengths = np.full(len(origins), float(max_range))
        if self._bound_keys is None:
            t_lo, t_hi = np.zeros(len(origins)), lengths
        else:
            lo, hi = self._bound_box_m()
            t_lo, t_hi = clip_segments(origins, dirs, lengths, lo, hi)
        return K.ray_voxels_kernel(origins, dirs, t_lo, t_hi, float(self.resolution), self._okey,
                                   self._occ, self._known, stop_at_occupied)

    # ----------------------------------------------------------- frontiers
    def _frontiers(self, want_roi: bool) -> np.ndarray:
        if self._occ.size == 0:
            return np.zeros((0, 3), dtype=np.int64)
        idx = K.frontier_kernel(self._occ, self._roi, self._known,
                                np.float32(self.config.roi_threshold), want_roi)
        return idx + self._okey

    def roi_frontiers(self) -> np.ndarray:
        """Free voxels with an ROI 6-neighbour and an Unknown 6-neighbour."""
        return self._frontiers(True)

    def exploration_frontiers(self) -> np.ndarray:
        """Free voxels with an Occupied 6-neighbour and an Unknown 6-neighbour."""
        return self._frontiers(False)

    # ------------------------------------------------------------ clusters
    def roi_clusters(self) -> list[RoiCluster]:
        """26-connected components of ROI voxels."""
        mask = self._roi_mask()
        if not mask.any():
            return []
        nz = np.argwhere(mask)
        lo = nz.min(axis=0)
        hi = nz.max(axis=0) + 1
        sub = mask[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        labels, n = ndimage.label(sub, structure=np.ones((3, 3, 3), dtype=bool))
        idx = np.argwhere(labels > 0)
        lab = labels[idx[:, 0], idx[:, 1], idx[:, 2]]
        order = np.argsort(lab, kind="stable")
        idx, lab = idx[order], lab[order]
        splits = np.flatnonzero(np.diff(lab)) + 1
        half = 0.5 * self.resolution
        out = []
        for members in np.split(idx, splits):
            keys = members.astype(np.int64) + lo + self._okey
            centers = self.center_of(keys)
            out.append(RoiCluster(keys, centers.mean(axis=0),
                                  (centers.min(axis=0) - half, centers.max(axis=0) + half)))
        return out

    # ----------------------------------------------------------- distances
    def _roi_tree(self):
        if self._roi_cache is None:
            keys = self.roi_keys()
            tree = cKDTree(keys.astype(float)) if len(keys) else None
            lo = keys.min(axis=0) if len(keys) else None
            hi = keys.max(axis=0) if len(keys) else None
            self._roi_cache = (tree, lo, hi)
        return self._roi_cache

    def roi_distances(self, keys, d_max: float) -> np.ndarray:
        """Distance (m) from each voxel centre to the nearest ROI voxel centre,
        ``inf`` when none lies within ``d_max``."""
        if not d_max > 0:
            raise ValueError("d_max must be positive")
        keys = np.atleast_2d(np.asarray(keys, dtype=np.int64))
        out = np.full(len(keys), np.inf)
        tree, lo, hi = self._roi_tree()
        if tree is None or len(keys) == 0:
            return out
        rv = d_max / self.resolution
        pad = int(math.floor(rv)) + 1
        near = np.all((keys >= lo - pad) & (keys <= hi + pad), axis=1)
        if not near.any():
            return out
        # small slack so a neighbour at exactly d_max is not lost to rounding
        dist, _ = tree.query(keys[near].astype(float), distance_upper_bound=rv * (1 + 1e-9) + 1e-9)
        dist = dist * self.resolution
        dist[dist > d_max] = np.inf
        out[near] = dist
        return out

    def distance_to_nearest_roi(self, key, d_max: float) -> float | None:
        d = self.roi_distances(_as_key(key)[None], d_max)[0]
        return None if np.isinf(d) else float(d)

    # ------------------------------------------------------------- export
    def export(self, path):
        """Write ``resolution <r>`` then ``kx ky kz occ roi`` per known voxel."""
        keys = self.keys()
        order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0])) if len(keys) else []
        lines = [f"resolution {self.resolution!r}"]
        for k in keys[order]:
            idx = tuple(k - self._okey)
            lines.append(f"{k[0]} {k[1]} {k[2]} {float(self._occ[idx])!r} {float(self._roi[idx])!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path, config: MapConfig | None = None, bounds=None) -> "RoiOcTree":
        lines = Path(path).read_text().splitlines()
        if not lines or not lines[0].startswith("resolution "):
            raise ValueError(f"{path}: missing 'resolution' header")
        res = float(lines[0].split()[1])
        base = config or MapConfig()
        cfg = replace(base, resolution=res)
        m = cls(cfg, bounds=bounds)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            m.set_node([int(p) for p in parts[:3]], float(parts[3]), float(parts[4]))
        return m
