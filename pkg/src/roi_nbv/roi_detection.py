"""Fruit detection in label images and target matching across the camera array."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from roi_nbv.scene_sim import LabeledImage

MIN_CLUSTER_PX = 4
MIN_MATCH_FRACTION = 0.25


@dataclass
class PixelCluster:
    pixel_count: int
    centroid_px: np.ndarray
    fruit_ids: frozenset = frozenset()
    mean_depth: float = float("nan")
    image_size: tuple | None = None  # (width, height)

    def __post_init__(self):
        self.centroid_px = np.asarray(self.centroid_px, dtype=float)
        if self.pixel_count < 1:
            raise ValueError("cluster must contain at least one pixel")


@dataclass
class TargetMatch:
    per_camera: list
    reference_index: int = 0

    @property
    def reference(self) -> PixelCluster | None:
        return self.per_camera[self.reference_index]


def detect_clusters_from_mask(mask, depth=None, labels=None, min_cluster_px: int = MIN_CLUSTER_PX):
    """4-connected components of a boolean fruit mask."""
    mask = np.asarray(mask, dtype=bool)
    comp, n = ndimage.label(mask)
    if n == 0:
        return []
    H, W = mask.shape
    idx = np.arange(1, n + 1)
    counts = ndimage.sum_labels(np.ones_like(comp), comp, idx).astype(int)
    rows, cols = np.indices(mask.shape)
    cv = ndimage.mean(rows + 0.5, comp, idx)
    cu = ndimage.mean(cols + 0.5, comp, idx)
    if depth is not None:
        md = ndimage.mean(np.where(np.isfinite(depth), depth, 0.0), comp, idx)
    out = []
    for j, lab in enumerate(idx):
        if counts[j] < min_cluster_px:
            continue
        ids = frozenset()
        if labels is not None:
            ids = frozenset(int(x) for x in np.unique(labels[comp == lab]) if x >= 0)
        out.append(PixelCluster(int(counts[j]), (cu[j], cv[j]), ids,
                                float(md[j]) if depth is not None else float("nan"), (W, H)))
    return out


def detect_clusters(img: LabeledImage, min_cluster_px: int = MIN_CLUSTER_PX) -> list[PixelCluster]:
    return detect_clusters_from_mask(img.fruit_mask(), img.depth, img.labels, min_cluster_px)


def _center_distance(c: PixelCluster, center) -> float:
    if center is None:
        if c.image_size is None:
            return 0.0
        center = (0.5 * c.image_size[0], 0.5 * c.image_size[1])
    return float(np.linalg.norm(c.centroid_px - np.asarray(center, dtype=float)))


def select_reference_target(clusters, center=None) -> PixelCluster | None:
    """Largest cluster; ties go to the centroid nearest the image centre."""
    if not clusters:
        return None
    return min(clusters, key=lambda c: (-c.pixel_count, _center_distance(c, center)))


def match_target(ref: PixelCluster, clusters, min_size: float) -> PixelCluster | None:
    """Cluster nearest to ``ref`` (centroid pixel distance) among those of at
    least ``min_size`` pixels."""
    cands = [c for c in clusters if c.pixel_count >= min_size]
    if not cands:
        return None
    return min(cands, key=lambda c: float(np.linalg.norm(c.centroid_px - ref.centroid_px)))


def objective(img: LabeledImage, matched: PixelCluster | None) -> float:
    """Target size as a fraction of the image area; 0 without a target."""
    if matched is None:
        return 0.0
    H, W = img.shape
    return matched.pixel_count / float(W * H)


def array_objectives(images, min_cluster_px: int = MIN_CLUSTER_PX,
                     min_match_fraction: float = MIN_MATCH_FRACTION):
    """Objectives of the reference (index 0) and outer images.

    Returns ``(objectives, match)``; ``match.reference`` is None when the
    reference image shows no fruit.
    """
    clusters = [detect_clusters(im, min_cluster_px) for im in images]
    ref = select_reference_target(clusters[0])
    if ref is None:
        return np.zeros(len(images)), TargetMatch([None] * len(images))
    per = [ref]
    for cl in clusters[1:]:
        per.append(match_target(ref, cl, min_match_fraction * ref.pixel_count))
    f = np.array([objective(im, m) for im, m in zip(images, per)])
    return f, TargetMatch(per)


# ------------------------------------------------ colour thresholding (real images)
def rgb_to_hsi(rgb) -> np.ndarray:
    """Hue (rad, [0, 2pi)), saturation and intensity of an RGB image in [0, 1]."""
    rgb = np.asarray(rgb, dtype=float)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    i = (r + g + b) / 3.0
    mn = np.minimum(np.minimum(r, g), b)
    s = np.where(i > 0, 1.0 - mn / np.maximum(i, 1e-12), 0.0)
    num = 0.5 * ((r - g) + (r - b))
    den = np.sqrt((r - g) ** 2 + (r - b) * (g - b)) + 1e-12
    theta = np.arccos(np.clip(num / den, -1.0, 1.0))
    h = np.where(b > g, 2 * np.pi - theta, theta)
    return np.stack([h, s, i], axis=-1)


@dataclass
class HsiThreshold:
    """Red-fruit classifier for colour images; hue window wraps around 0."""

    hue_window: tuple = (-0.35, 0.35)
    min_saturation: float = 0.4
    min_intensity: float = 0.1

    def __call__(self, rgb) -> np.ndarray:
        hsi = rgb_to_hsi(rgb)
        h = np.where(hsi[..., 0] > np.pi, hsi[..., 0] - 2 * np.pi, hsi[..., 0])
        return ((h >= self.hue_window[0]) & (h <= self.hue_window[1])
                & (hsi[..., 1] >= self.min_saturation) & (hsi[..., 2] >= self.min_intensity))
