"""Slow, independent reference implementations used by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np

NEIGHBOURS6 = [np.array(v) for v in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))]


def segment_voxels(origin, direction, length, res):
    """Voxels crossed by ``origin + t d`` for t in (0, length), found by
    sorting every grid-plane crossing and sampling each interval midpoint."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    ts = [0.0, float(length)]
    for a in range(3):
        if d[a] == 0:
            continue
        k0 = o[a] / res
        k1 = (o[a] + length * d[a]) / res
        lo, hi = sorted((k0, k1))
        for k in range(math.ceil(lo), math.floor(hi) + 1):
            t = (k * res - o[a]) / d[a]
            if 0 < t < length:
                ts.append(t)
    ts = sorted(ts)
    out = []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 < 1e-12:
            continue
        p = o + 0.5 * (t0 + t1) * d
        k = tuple(int(v) for v in np.floor(p / res))
        if not out or out[-1] != k:
            out.append(k)
    return out


def sampled_voxels(origin, direction, length, res, step_frac=0.1):
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    t = np.arange(0.0, length, res * step_frac)
    return {tuple(k) for k in np.floor((o + t[:, None] * d) / res).astype(int)}


def reference_integrate(state, origin, points, is_roi, res, cfg):
    """Scalar reference for one scan. ``state`` maps key -> [occ, roi]."""
    clamp = lambda v: min(max(v, cfg.clamp_min), cfg.clamp_max)  # noqa: E731
    okey = tuple(int(v) for v in np.floor(np.asarray(origin) / res + 1e-9))
    ends = [tuple(int(v) for v in np.floor(np.asarray(p) / res + 1e-9)) for p in points]
    end_set = set(ends)
    misses = set()
    for p, e in zip(points, ends):
        v = np.asarray(p) - origin
        n = np.linalg.norm(v)
        if n == 0:
            continue
        for k in segment_voxels(origin, v / n, n, res):
            if k != okey and k != e and k not in end_set:
                misses.add(k)
    for e in dict.fromkeys(ends):
        s = state.setdefault(e, [0.0, 0.0])
        s[0] = clamp(s[0] + cfg.hit)
    done_up, done_down = set(), set()
    for e, r in zip(ends, is_roi):
        s = state[e]
        if r and e not in done_up:
            s[1] = clamp(s[1] + cfg.roi_hit)
            done_up.add(e)
        elif not r and e not in done_down:
            s[1] = clamp(s[1] + cfg.roi_miss)
            done_down.add(e)
    for k in misses:
        s = state.setdefault(k, [0.0, 0.0])
        s[0] = clamp(s[0] + cfg.miss)
    return state


def classify_brute(tree, key):
    c = tree.classify(tuple(int(v) for v in key))
    return int(c.occupancy), c.is_roi


def frontiers_brute(tree, lo, hi, want_roi):
    out = set()
    for k in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        occ, _ = classify_brute(tree, k)
        if occ != 1:
            continue
        nb = [classify_brute(tree, np.array(k) + v) for v in NEIGHBOURS6]
        has_unknown = any(o == 0 for o, _ in nb)
        has_target = any(r for _, r in nb) if want_roi else any(o == 2 for o, _ in nb)
        if has_unknown and has_target:
            out.add(k)
    return out


def nearest_roi_brute(roi_keys, key, res, d_max):
    if len(roi_keys) == 0:
        return None
    d = np.sqrt(((np.asarray(roi_keys, float) - np.asarray(key, float)) ** 2).sum(axis=1)).min() * res
    return float(d) if d <= d_max else None


def info_gain_brute(tree, pose, local_dirs, sensor_range, d_max):
    """Per-ray weighted unknown fraction, averaged, with plain Python loops."""
    res = tree.resolution
    roi = [tuple(k) for k in tree.roi_keys()]
    okey = tuple(int(v) for v in np.floor(pose.position / res + 1e-9))
    total = 0.0
    for ld in local_dirs:
        d = pose.rotation @ ld
        n_r, w_r = 0, 0.0
        for k in segment_voxels(pose.position, d, sensor_range, res):
            if k == okey:
                continue
            occ, _ = classify_brute(tree, k)
            n_r += 1
            if occ == 0:
                dist = nearest_roi_brute(roi, k, res, d_max)
                w_r += 0.5 if dist is None else 0.5 + 0.5 * (d_max - dist) / d_max
            if occ == 2:
                break
        total += w_r / n_r if n_r else 0.0
    return total / len(local_dirs)


def mann_whitney_enumerate(a, b):
    """Exact one-sided p (a > b) by enumerating all label assignments."""
    x = np.concatenate([a, b]).astype(float)
    n, na = len(x), len(a)
    from scipy.stats import rankdata
    r = rankdata(x)
    obs = r[:na].sum()
    hits = total = 0
    for comb in itertools.combinations(range(n), na):
        total += 1
        if r[list(comb)].sum() >= obs - 1e-9:
            hits += 1
    return obs - na * (na + 1) / 2, hits / total


def rasterized_coverage(fruit_boxes, cluster_boxes, cell):
    """Covered fraction of fruit box volume by cell-centre sampling."""
    covered = total = 0.0
    for lo, hi in fruit_boxes:
        axes = [np.arange(lo[k] + cell / 2, hi[k], cell) for k in range(3)]
        g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        hit = np.zeros(len(g), dtype=bool)
        for clo, chi in cluster_boxes:
            hit |= np.all((g >= clo) & (g <= chi), axis=1)
        covered += hit.sum()
        total += len(g)
    return covered / total
