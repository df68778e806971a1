"""Axis-aligned BVH over triangles plus the numba kernels built on it.

The BVH accelerates exact point-to-mesh distance; a brute-force path over
the same per-triangle routine is kept as the test oracle and the two agree
bit-exactly (min over the identical set of squared distances). Inside/outside
comes from the generalized winding number (van Oosterom-Strackee solid
angles, threshold 0.5). Points outside the mesh AABB are outside the convex
hull, where |w| < 0.5 always holds, so the fast paths skip the winding sum
there; the brute oracle always evaluates it.

All kernels parallelize over query points only (never reduce across
triangles in parallel), so results are deterministic.
"""

import math

import numpy as np
from numba import njit, prange

_STACK_DEPTH = 256
_LEAF_SIZE = 4


def build_bvh(triangle_vertices: np.ndarray):
    """Median-split BVH. Returns (node_min, node_max, node_left, node_right,
    node_start, node_count, tri_order); leaves have node_left == -1 and index
    tri_order[start:start+count]."""
    tv = np.ascontiguousarray(triangle_vertices, dtype=np.float64)
    n_tri = tv.shape[0]
    tri_min = tv.min(axis=1)
    tri_max = tv.max(axis=1)
    centroids = tv.mean(axis=1)

    node_min, node_max = [], []
    node_left, node_right = [], []
    node_start, node_count = [], []
    tri_order = np.empty(n_tri, dtype=np.int64)
    cursor = 0

    def new_node(idx):
        node_min.append(tri_min[idx].min(axis=0))
        node_max.append(tri_max[idx].max(axis=0))
        node_left.append(-1)
        node_right.append(-1)
        node_start.append(-1)
        node_count.append(0)
        return len(node_min) - 1

    # iterative partitioning; each stack entry is (node_id, triangle indices)
    root_idx = np.arange(n_tri, dtype=np.int64)
    stack = [(new_node(root_idx), root_idx)]
    while stack:
        nid, idx = stack.pop()
        if len(idx) <= _LEAF_SIZE:
            nonlocal_start = cursor
            tri_order[nonlocal_start:nonlocal_start + len(idx)] = idx
            node_start[nid] = nonlocal_start
            node_count[nid] = len(idx)
            cursor += len(idx)
            continue
        cen = centroids[idx]
        axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
        order = np.argsort(cen[:, axis], kind="stable")
        half = len(idx) // 2
        left_idx = idx[order[:half]]
        right_idx = idx[order[half:]]
        lid = new_node(left_idx)
        rid = new_node(right_idx)
        node_left[nid] = lid
        node_right[nid] = rid
        stack.append((rid, right_idx))
        stack.append((lid, left_idx))

    return (np.array(node_min), np.array(node_max),
            np.array(node_left, dtype=np.int64), np.array(node_right, dtype=np.int64),
            np.array(node_start, dtype=np.int64), np.array(node_count, dtype=np.int64),
            tri_order)


@njit(cache=True)
def _point_triangle_sqdist(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    """Squared distance from P to triangle ABC (Ericson, RTCD 5.1.5).

    The closest point is formed explicitly before squaring, which avoids the
    cancellation-prone ||ap||^2 - t^2||ab||^2 shortcuts."""
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        qx, qy, qz = ax, ay, az
    else:
        bpx, bpy, bpz = px - bx, py - by, pz - bz
        d3 = abx * bpx + aby * bpy + abz * bpz
        d4 = acx * bpx + acy * bpy + acz * bpz
        if d3 >= 0.0 and d4 <= d3:
            qx, qy, qz = bx, by, bz
        else:
            vc = d1 * d4 - d3 * d2
            if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                v = d1 / (d1 - d3)
                qx, qy, qz = ax + v * abx, ay + v * aby, az + v * abz
            else:
                cpx, cpy, cpz = px - cx, py - cy, pz - cz
                d5 = abx * cpx + aby * cpy + abz * cpz
                d6 = acx * cpx + acy * cpy + acz * cpz
                if d6 >= 0.0 and d5 <= d6:
                    qx, qy, qz = cx, cy, cz
                else:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                        w = d2 / (d2 - d6)
                        qx, qy, qz = ax + w * acx, ay + w * acy, az + w * acz
                    else:
                        va = d3 * d6 - d5 * d4
                        if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
                            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                            qx = bx + w * (cx - bx)
                            qy = by + w * (cy - by)
                            qz = bz + w * (cz - bz)
                        else:
                            denom = 1.0 / (va + vb + vc)
                            v = vb * denom
                            w = vc * denom
                            qx = ax + abx * v + acx * w
                            qy = ay + aby * v + acy * w
                            qz = az + abz * v + acz * w
    dx, dy, dz = px - qx, py - qy, pz - qz
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def _brute_min_sqdist(tv, px, py, pz):
    best = np.inf
    for t in range(tv.shape[0]):
        d2 = _point_triangle_sqdist(
            tv[t, 0, 0], tv[t, 0, 1], tv[t, 0, 2],
            tv[t, 1, 0], tv[t, 1, 1], tv[t, 1, 2],
            tv[t, 2, 0], tv[t, 2, 1], tv[t, 2, 2],
            px, py, pz)
        if d2 < best:
            best = d2
    return best


@njit(cache=True)
def _aabb_sqdist(nmin, nmax, px, py, pz):
    d = 0.0
    v = nmin[0] - px
    if v > 0.0:
        d += v * v
    v = px - nmax[0]
    if v > 0.0:
        d += v * v
    v = nmin[1] - py
    if v > 0.0:
        d += v * v
    v = py - nmax[1]
    if v > 0.0:
        d += v * v
    v = nmin[2] - pz
    if v > 0.0:
        d += v * v
    v = pz - nmax[2]
    if v > 0.0:
        d += v * v
    return d


@njit(cache=True)
def _bvh_min_sqdist(node_min, node_max, node_left, node_right,
                    node_start, node_count, tri_order, tv,
                    px, py, pz, stack):
    best = np.inf
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        nid = stack[sp]
        if _aabb_sqdist(node_min[nid], node_max[nid], px, py, pz) >= best:
            continue
        left = node_left[nid]
        if left < 0:
            s = node_start[nid]
            for k in range(s, s + node_count[nid]):
                t = tri_order[k]
                d2 = _point_triangle_sqdist(
                    tv[t, 0, 0], tv[t, 0, 1], tv[t, 0, 2],
                    tv[t, 1, 0], tv[t, 1, 1], tv[t, 1, 2],
                    tv[t, 2, 0], tv[t, 2, 1], tv[t, 2, 2],
                    px, py, pz)
                if d2 < best:
                    best = d2
        else:
            right = node_right[nid]
            dl = _aabb_sqdist(node_min[left], node_max[left], px, py, pz)
            dr = _aabb_sqdist(node_min[right], node_max[right], px, py, pz)
            # push the farther child first so the nearer is popped first
            if dl <= dr:
                stack[sp] = right
                stack[sp + 1] = left
            else:
                stack[sp] = left
                stack[sp + 1] = right
            sp += 2
    return best


@njit(cache=True)
def _winding_number(tv, px, py, pz):
    """Generalized winding number via summed signed solid angles."""
    total = 0.0
    for t in range(tv.shape[0]):
        ax_, ay_, az_ = tv[t, 0, 0] - px, tv[t, 0, 1] - py, tv[t, 0, 2] - pz
        bx_, by_, bz_ = tv[t, 1, 0] - px, tv[t, 1, 1] - py, tv[t, 1, 2] - pz
        cx_, cy_, cz_ = tv[t, 2, 0] - px, tv[t, 2, 1] - py, tv[t, 2, 2] - pz
        la = math.sqrt(ax_ * ax_ + ay_ * ay_ + az_ * az_)
        lb = math.sqrt(bx_ * bx_ + by_ * by_ + bz_ * bz_)
        lc = math.sqrt(cx_ * cx_ + cy_ * cy_ + cz_ * cz_)
        num = (ax_ * (by_ * cz_ - bz_ * cy_)
               - ay_ * (bx_ * cz_ - bz_ * cx_)
               + az_ * (bx_ * cy_ - by_ * cx_))
        den = (la * lb * lc
               + (ax_ * bx_ + ay_ * by_ + az_ * bz_) * lc
               + (bx_ * cx_ + by_ * cy_ + bz_ * cz_) * la
               + (cx_ * ax_ + cy_ * ay_ + cz_ * az_) * lb)
        total += 2.0 * math.atan2(num, den)
    return total / (4.0 * math.pi)


@njit(parallel=True, cache=True)
def signed_distances_bvh(points, node_min, node_max, node_left, node_right,
                         node_start, node_count, tri_order, tv,
                         aabb_min, aabb_max):
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        stack = np.empty(_STACK_DEPTH, dtype=np.int64)
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        d = math.sqrt(_bvh_min_sqdist(node_min, node_max, node_left, node_right,
                                      node_start, node_count, tri_order, tv,
                                      px, py, pz, stack))
        if (aabb_min[0] <= px <= aabb_max[0]
                and aabb_min[1] <= py <= aabb_max[1]
                and aabb_min[2] <= pz <= aabb_max[2]):
            if _winding_number(tv, px, py, pz) > 0.5:
                d = -d
        out[i] = d
    return out


@njit(parallel=True, cache=True)
def signed_distances_brute(points, tv):
    """Reference path: full triangle scan for distance and winding."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        d = math.sqrt(_brute_min_sqdist(tv, px, py, pz))
        if _winding_number(tv, px, py, pz) > 0.5:
            d = -d
        out[i] = d
    return out


@njit(parallel=True, cache=True)
def winding_numbers(points, tv):
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        out[i] = _winding_number(tv, points[i, 0], points[i, 1], points[i, 2])
    return out


@njit(parallel=True, cache=True)
def fill_grid(nx, ny, nz, bx, by, bz, sx, sy, sz,
              node_min, node_max, node_left, node_right,
              node_start, node_count, tri_order, tv,
              aabb_min, aabb_max):
    """Signed distance at every voxel center, x-fastest flat float32 output."""
    values = np.empty(nx * ny * nz, dtype=np.float32)
    for iz in prange(nz):
        stack = np.empty(_STACK_DEPTH, dtype=np.int64)
        pz = bz + sz * iz
        for iy in range(ny):
            py = by + sy * iy
            base = nx * (iy + ny * iz)
            for ix in range(nx):
                px = bx + sx * ix
                d = math.sqrt(_bvh_min_sqdist(
                    node_min, node_max, node_left, node_right,
                    node_start, node_count, tri_order, tv, px, py, pz, stack))
                if (aabb_min[0] <= px <= aabb_max[0]
                        and aabb_min[1] <= py <= aabb_max[1]
                        and aabb_min[2] <= pz <= aabb_max[2]):
                    if _winding_number(tv, px, py, pz) > 0.5:
                        d = -d
                values[base + ix] = d
    return values


@njit(parallel=True, cache=True)
def interp_trilinear(values, nx, ny, nz, bx0, by0, bz0, bx1, by1, bz1,
                     sx, sy, sz, points):
    """Clamped trilinear interpolation on an x-fastest flat float32 grid.

    Corner values are promoted to float64 before any arithmetic and the lerp
    order is fixed (x, then y, then z); the frontend binding mirrors this
    op-for-op so results compare bitwise."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        x = points[i, 0]
        y = points[i, 1]
        z = points[i, 2]
        if x < bx0:
            x = bx0
        elif x > bx1:
            x = bx1
        if y < by0:
            y = by0
        elif y > by1:
            y = by1
        if z < bz0:
            z = bz0
        elif z > bz1:
            z = bz1
        tx = (x - bx0) / sx
        ty = (y - by0) / sy
        tz = (z - bz0) / sz
        ix = int(math.floor(tx))
        iy = int(math.floor(ty))
        iz = int(math.floor(tz))
        if ix > nx - 2:
            ix = nx - 2
        if iy > ny - 2:
            iy = ny - 2
        if iz > nz - 2:
            iz = nz - 2
        if ix < 0:
            ix = 0
        if iy < 0:
            iy = 0
        if iz < 0:
            iz = 0
        fx = tx - ix
        fy = ty - iy
        fz = tz - iz
        b000 = ix + nx * (iy + ny * iz)
        b001 = ix + nx * (iy + ny * (iz + 1))
        b010 = ix + nx * ((iy + 1) + ny * iz)
        b011 = ix + nx * ((iy + 1) + ny * (iz + 1))
        c000 = np.float64(values[b000])
        c100 = np.float64(values[b000 + 1])
        c010 = np.float64(values[b010])
        c110 = np.float64(values[b010 + 1])
        c001 = np.float64(values[b001])
        c101 = np.float64(values[b001 + 1])
        c011 = np.float64(values[b011])
        c111 = np.float64(values[b011 + 1])
        c00 = c000 + fx * (c100 - c000)
        c10 = c010 + fx * (c110 - c010)
        c01 = c001 + fx * (c101 - c001)
        c11 = c011 + fx * (c111 - c011)
        c0 = c00 + fy * (c10 - c00)
        c1 = c01 + fy * (c11 - c01)
        out[i] = c0 + fz * (c1 - c0)
    return out


@njit(parallel=True, cache=True)
def interp_nearest(values, nx, ny, nz, bx0, by0, bz0, bx1, by1, bz1,
                   sx, sy, sz, points):
    """Clamped nearest-voxel lookup (bit-exact reproduction of stored values)."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        x = points[i, 0]
        y = points[i, 1]
        z = points[i, 2]
        if x < bx0:
            x = bx0
        elif x > bx1:
            x = bx1
        if y < by0:
            y = by0
        elif y > by1:
            y = by1
        if z < bz0:
            z = bz0
        elif z > bz1:
            z = bz1
        ix = int(math.floor((x - bx0) / sx + 0.5))
        iy = int(math.floor((y - by0) / sy + 0.5))
        iz = int(math.floor((z - bz0) / sz + 0.5))
        if ix > nx - 1:
            ix = nx - 1
        if iy > ny - 1:
            iy = ny - 1
        if iz > nz - 1:
            iz = nz - 1
        if ix < 0:
            ix = 0
        if iy < 0:
            iy = 0
        if iz < 0:
            iz = 0
        out[i] = np.float64(values[ix + nx * (iy + ny * iz)])
    return out
