"""Compiled inner loops: voxel traversal, frontier scans and primitive rendering.

Grid arrays are dense boxes indexed by ``key - origin_key``. Cells outside the
box are treated as Unknown by every kernel.
"""

import math

import numpy as np
from numba import njit

KEY_EPS = 1e-9

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

HIT_CLEAR = 0
HIT_OCCUPIED = 1
HIT_UNKNOWN = 2

SHAPE_ELLIPSOID = 0
SHAPE_RECT = 1
SHAPE_CYLINDER = 2

_F_END = 1
_F_ROI_UP = 2
_F_ROI_DOWN = 4
_F_MISS = 8


@njit(cache=True, inline="always")
def _key(x, res):
    return np.int64(math.floor(x / res + KEY_EPS))


@njit(cache=True, inline="always")
def _axis_setup(o, d, k, res):
    if d > 0.0:
        return 1, ((k + 1) * res - o) / d, res / d
    if d < 0.0:
        return -1, (k * res - o) / d, -res / d
    return 0, np.inf, np.inf


@njit(cache=True, inline="always")
def _cell_class(occ, known, ix, iy, iz):
    nx, ny, nz = occ.shape
    if ix < 0 or iy < 0 or iz < 0 or ix >= nx or iy >= ny or iz >= nz:
        return UNKNOWN
    if not known[ix, iy, iz]:
        return UNKNOWN
    v = occ[ix, iy, iz]
    if v > 0.0:
        return OCCUPIED
    if v < 0.0:
        return FREE
    return UNKNOWN


@njit(cache=True, inline="always")
def _clamp(v, lo, hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@njit(cache=True)
def integrate_kernel(origin, ends, is_roi, t_lo, t_hi, end_inside, res, okey,
                     occ, roi, known, stamp, scan_id,
                     hit, miss, lmin, lmax, roi_hit, roi_miss):
    """Apply one scan. Endpoints are processed before any miss so a voxel that
    ends some ray is never decremented by the same scan."""
    n = ends.shape[0]
    base = np.int64(scan_id) << 4
    touched = 0
    for i in range(n):
        if not end_inside[i]:
            continue
        ix = _key(ends[i, 0], res) - okey[0]
        iy = _key(ends[i, 1], res) - okey[1]
        iz = _key(ends[i, 2], res) - okey[2]
        s = stamp[ix, iy, iz]
        if (s >> 4) != scan_id:
            if not known[ix, iy, iz]:
                known[ix, iy, iz] = True
                occ[ix, iy, iz] = 0.0
                roi[ix, iy, iz] = 0.0
            occ[ix, iy, iz] = _clamp(occ[ix, iy, iz] + hit, lmin, lmax)
            s = base | _F_END
            touched += 1
        if is_roi[i]:
            if not (s & _F_ROI_UP):
                roi[ix, iy, iz] = _clamp(roi[ix, iy, iz] + roi_hit, lmin, lmax)
                s |= _F_ROI_UP
        else:
            if not (s & _F_ROI_DOWN):
                roi[ix, iy, iz] = _clamp(roi[ix, iy, iz] + roi_miss, lmin, lmax)
                s |= _F_ROI_DOWN
        stamp[ix, iy, iz] = s

    okx = _key(origin[0], res)
    oky = _key(origin[1], res)
    okz = _key(origin[2], res)
    for i in range(n):
        dx = ends[i, 0] - origin[0]
        dy = ends[i, 1] - origin[1]
        dz = ends[i, 2] - origin[2]
        length = math.sqrt(dx * dx + dy * dy + dz * dz)
        if length <= 0.0 or t_hi[i] <= t_lo[i]:
            continue
        dx /= length
        dy /= length
        dz /= length
        ekx = _key(ends[i, 0], res)
        eky = _key(ends[i, 1], res)
        ekz = _key(ends[i, 2], res)
        t0 = t_lo[i]
        t1 = t_hi[i]
        kx = _key(origin[0] + dx * t0, res)
        ky = _key(origin[1] + dy * t0, res)
        kz = _key(origin[2] + dz * t0, res)
        sx, tmx, tdx = _axis_setup(origin[0], dx, kx, res)
        sy, tmy, tdy = _axis_setup(origin[1], dy, ky, res)
        sz, tmz, tdz = _axis_setup(origin[2], dz, kz, res)
        guard = int(3.0 * (t1 - t0) / res) + 8
        for _ in range(guard):
            if end_inside[i] and kx == ekx and ky == eky and kz == ekz:
                break
            if not (kx == okx and ky == oky and kz == okz):
                ix = kx - okey[0]
                iy = ky - okey[1]
                iz = kz - okey[2]
                if 0 <= ix < occ.shape[0] and 0 <= iy < occ.shape[1] and 0 <= iz < occ.shape[2]:
                    if (stamp[ix, iy, iz] >> 4) != scan_id:
                        if not known[ix, iy, iz]:
                            known[ix, iy, iz] = True
                            occ[ix, iy, iz] = 0.0
                            roi[ix, iy, iz] = 0.0
                        occ[ix, iy, iz] = _clamp(occ[ix, iy, iz] + miss, lmin, lmax)
                        stamp[ix, iy, iz] = base | _F_MISS
                        touched += 1
            if tmx <= tmy and tmx <= tmz:
                if tmx > t1:
                    break
                kx += sx
                tmx += tdx
            elif tmy <= tmz:
                if tmy > t1:
                    break
                ky += sy
                tmy += tdy
            else:
                if tmz > t1:
                    break
                kz += sz
                tmz += tdz
    return touched


@njit(cache=True)
def cast_ray_kernel(origin, d, t_lo, t_hi, res, okey, occ, known, stop_at_unknown):
    """First Occupied (or Unknown, if requested) voxel after the origin voxel."""
    okx = _key(origin[0], res)
    oky = _key(origin[1], res)
    okz = _key(origin[2], res)
    kx = _key(origin[0] + d[0] * t_lo, res)
    ky = _key(origin[1] + d[1] * t_lo, res)
    kz = _key(origin[2] + d[2] * t_lo, res)
    sx, tmx, tdx = _axis_setup(origin[0], d[0], kx, res)
    sy, tmy, tdy = _axis_setup(origin[1], d[1], ky, res)
    sz, tmz, tdz = _axis_setup(origin[2], d[2], kz, res)
    guard = int(3.0 * (t_hi - t_lo) / res) + 8
    for _ in range(guard):
        if not (kx == okx and ky == oky and kz == okz):
            c = _cell_class(occ, known, kx - okey[0], ky - okey[1], kz - okey[2])
            if c == OCCUPIED:
                return HIT_OCCUPIED, kx, ky, kz
            if c == UNKNOWN and stop_at_unknown:
                return HIT_UNKNOWN, kx, ky, kz
        if tmx <= tmy and tmx <= tmz:
            if tmx > t_hi:
                break
            kx += sx
            tmx += tdx
        elif tmy <= tmz:
            if tmy > t_hi:
                break
            ky += sy
            tmy += tdy
        else:
            if tmz > t_hi:
                break
            kz += sz
            tmz += tdz
    return HIT_CLEAR, kx, ky, kz


@njit(cache=True)
def ray_voxels_kernel(origins, dirs, t_lo, t_hi, res, okey, occ, known, stop_at_occupied):
    """Voxels visited by each ray (origin voxel excluded), in order.

    Returns flat arrays (keys, classes, ray index). With ``stop_at_occupied``
    a ray ends after its first Occupied voxel, which is included.
    """
    n = origins.shape[0]
    cap = 0
    for i in range(n):
        if t_hi[i] > t_lo[i]:
            cap += int(3.0 * (t_hi[i] - t_lo[i]) / res) + 8
    keys = np.empty((cap, 3), dtype=np.int64)
    cls = np.empty(cap, dtype=np.int8)
    ray = np.empty(cap, dtype=np.int64)
    m = 0
    for i in range(n):
        if t_hi[i] <= t_lo[i]:
            continue
        ox = origins[i, 0]
        oy = origins[i, 1]
        oz = origins[i, 2]
        okx = _key(ox, res)
        oky = _key(oy, res)
        okz = _key(oz, res)
        t0 = t_lo[i]
        t1 = t_hi[i]
        kx = _key(ox + dirs[i, 0] * t0, res)
        ky = _key(oy + dirs[i, 1] * t0, res)
        kz = _key(oz + dirs[i, 2] * t0, res)
        sx, tmx, tdx = _axis_setup(ox, dirs[i, 0], kx, res)
        sy, tmy, tdy = _axis_setup(oy, dirs[i, 1], ky, res)
        sz, tmz, tdz = _axis_setup(oz, dirs[i, 2], kz, res)
        guard = int(3.0 * (t1 - t0) / res) + 8
        for _ in range(guard):
            if not (kx == okx and ky == oky and kz == okz):
                c = _cell_class(occ, known, kx - okey[0], ky - okey[1], kz - okey[2])
                keys[m, 0] = kx
                keys[m, 1] = ky
                keys[m, 2] = kz
                cls[m] = c
                ray[m] = i
                m += 1
                if c == OCCUPIED and stop_at_occupied:
                    break
            if tmx <= tmy and tmx <= tmz:
                if tmx > t1:
                    break
                kx += sx
                tmx += tdx
            elif tmy <= tmz:
                if tmy > t1:
                    break
                ky += sy
                tmy += tdy
            else:
                if tmz > t1:
                    break
                kz += sz
                tmz += tdz
    return keys[:m], cls[:m], ray[:m]


@njit(cache=True)
def frontier_kernel(occ, roi, known, roi_threshold, want_roi):
    """Indices of Free cells with a 6-neighbour that is Unknown and one that is
    ROI (``want_roi``) or Occupied (otherwise)."""
    nx, ny, nz = occ.shape
    out = []
    offs = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))
    for ix in range(nx):
        for iy in range(ny):
            for iz in range(nz):
                if not known[ix, iy, iz] or not (occ[ix, iy, iz] < 0.0):
                    continue
                has_unknown = False
                has_target = False
                for o in offs:
                    jx = ix + o[0]
                    jy = iy + o[1]
                    jz = iz + o[2]
                    c = _cell_class(occ, known, jx, jy, jz)
                    if c == UNKNOWN:
                        has_unknown = True
                    elif c == OCCUPIED:
                        if want_roi:
                            if roi[jx, jy, jz] > roi_threshold:
                                has_target = True
                        else:
                            has_target = True
                    if has_unknown and has_target:
                        break
                if has_unknown and has_target:
                    out.append((ix, iy, iz))
    res = np.empty((len(out), 3), dtype=np.int64)
    for i in range(len(out)):
        res[i, 0] = out[i][0]
        res[i, 1] = out[i][1]
        res[i, 2] = out[i][2]
    return res


@njit(cache=True, inline="always")
def _consider(t, best, tmin, tmax):
    if t >= tmin and t <= tmax and t < best:
        return t
    return best


@njit(cache=True)
def _intersect(kind, params, ox, oy, oz, dx, dy, dz, tmin, tmax):
    """Nearest hit parameter in [tmin, tmax] of a ray in primitive-local
    coordinates, or inf."""
    best = np.inf
    if kind == SHAPE_ELLIPSOID:
        ax = ox / params[0]
        ay = oy / params[1]
        az = oz / params[2]
        bx = dx / params[0]
        by = dy / params[1]
        bz = dz / params[2]
        a = bx * bx + by * by + bz * bz
        b = 2.0 * (ax * bx + ay * by + az * bz)
        c = ax * ax + ay * ay + az * az - 1.0
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return best
        sq = math.sqrt(disc)
        best = _consider((-b - sq) / (2.0 * a), best, tmin, tmax)
        best = _consider((-b + sq) / (2.0 * a), best, tmin, tmax)
    elif kind == SHAPE_RECT:
        if dz == 0.0:
            return best
        t = -oz / dz
        x = ox + t * dx
        y = oy + t * dy
        if abs(x) <= params[0] and abs(y) <= params[1]:
            best = _consider(t, best, tmin, tmax)
    else:
        r = params[0]
        h = params[1]
        a = dx * dx + dy * dy
        if a > 0.0:
            b = 2.0 * (ox * dx + oy * dy)
            c = ox * ox + oy * oy - r * r
            disc = b * b - 4.0 * a * c
            if disc >= 0.0:
                sq = math.sqrt(disc)
                for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
                    z = oz + t * dz
                    if abs(z) <= h:
                        best = _consider(t, best, tmin, tmax)
        if dz != 0.0:
            for zc in (-h, h):
                t = (zc - oz) / dz
                x = ox + t * dx
                y = oy + t * dy
                if x * x + y * y <= r * r:
                    best = _consider(t, best, tmin, tmax)
    return best


@njit(cache=True)
def render_kernel(origin, dirs, width, kinds, labels, centers, rots, params, pix_boxes,
                  tmin, tmax, depth, label_out):
    """Z-buffer each primitive over its conservative pixel box.

    ``dirs`` are world-frame unit pixel rays, row-major (v * width + u).
    """
    for p in range(kinds.shape[0]):
        R = rots[p]
        qx = origin[0] - centers[p, 0]
        qy = origin[1] - centers[p, 1]
        qz = origin[2] - centers[p, 2]
        ox = R[0, 0] * qx + R[1, 0] * qy + R[2, 0] * qz
        oy = R[0, 1] * qx + R[1, 1] * qy + R[2, 1] * qz
        oz = R[0, 2] * qx + R[1, 2] * qy + R[2, 2] * qz
        u0, u1, v0, v1 = pix_boxes[p, 0], pix_boxes[p, 1], pix_boxes[p, 2], pix_boxes[p, 3]
        for v in range(v0, v1):
            for u in range(u0, u1):
                k = v * width + u
                wx = dirs[k, 0]
                wy = dirs[k, 1]
                wz = dirs[k, 2]
                dx = R[0, 0] * wx + R[1, 0] * wy + R[2, 0] * wz
                dy = R[0, 1] * wx + R[1, 1] * wy + R[2, 1] * wz
                dz = R[0, 2] * wx + R[1, 2] * wy + R[2, 2] * wz
                t = _intersect(kinds[p], params[p], ox, oy, oz, dx, dy, dz, tmin, tmax)
                if t < depth[k]:
                    depth[k] = t
                    label_out[k] = labels[p]
