"""Bounding volume hierarchy over mesh triangles.

The index answers three kinds of query, all compiled with numba:

* segment / triangle intersection (visibility classification),
* closest distance from a point to the surface (SDF, Hausdorff),
* axis-parallel crossing counts (inside/outside parity).

Trees are built by median split on the longest centroid axis with leaves
of at most four triangles, so construction is deterministic. The arrays of a
built index are never written again and can be read by any number of
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .exceptions import DegenerateInputError
from .mesh import TriMesh

LEAF_SIZE = 4
GRAZE_TOL = 1e-9
# boxes are padded well beyond the triangle test tolerances so that the tree
# never prunes a triangle the brute-force loop would report
_BOX_PAD = 1e-6


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    """Flattened BVH. ``tri`` holds triangle corners in leaf order."""

    tri: np.ndarray  # (m, 3, 3) corners, leaf order
    tri_ids: np.ndarray  # (m,) original triangle index per leaf slot
    node_lo: np.ndarray
    node_hi: np.ndarray
    node_left: np.ndarray  # -1 for leaves
    node_right: np.ndarray
    node_start: np.ndarray
    node_count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.node_lo)

    @property
    def n_triangles(self) -> int:
        return len(self.tri)

    def root_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.node_lo[0], self.node_hi[0]

    def arrays(self):
        return (self.tri, self.node_lo, self.node_hi, self.node_left, self.node_right,
                self.node_start, self.node_count)


@nb.njit(cache=True)
def _build(lo, hi, cen, leaf_size):
    m = lo.shape[0]
    order = np.arange(m)
    cap = 2 * m + 1
    n_lo = np.empty((cap, 3))
    n_hi = np.empty((cap, 3))
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    start = np.zeros(cap, dtype=np.int64)
    count = np.zeros(cap, dtype=np.int64)
    stack = np.empty((cap, 3), dtype=np.int64)  # node, start, end
    stack[0, 0], stack[0, 1], stack[0, 2] = 0, 0, m
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node, s, e = stack[sp, 0], stack[sp, 1], stack[sp, 2]
        blo = np.full(3, np.inf)
        bhi = np.full(3, -np.inf)
        clo = np.full(3, np.inf)
        chi = np.full(3, -np.inf)
        for k in range(s, e):
            t = order[k]
            for a in range(3):
                blo[a] = min(blo[a], lo[t, a])
                bhi[a] = max(bhi[a], hi[t, a])
                clo[a] = min(clo[a], cen[t, a])
                chi[a] = max(chi[a], cen[t, a])
        n_lo[node] = blo
        n_hi[node] = bhi
        start[node] = s
        count[node] = e - s
        if e - s <= leaf_size:
            continue
        axis = 0
        for a in range(1, 3):
            if chi[a] - clo[a] > chi[axis] - clo[axis]:
                axis = a
        keys = np.empty(e - s)
        for k in range(s, e):
            keys[k - s] = cen[order[k], axis]
        perm = np.argsort(keys, kind="mergesort")
        seg = order[s:e].copy()
        for k in range(e - s):
            order[s + k] = seg[perm[k]]
        mid = (s + e) // 2
        lc, rc = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node], right[node] = lc, rc
        stack[sp, 0], stack[sp, 1], stack[sp, 2] = rc, mid, e
        sp += 1
        stack[sp, 0], stack[sp, 1], stack[sp, 2] = lc, s, mid
        sp += 1
    return order, n_lo[:n_nodes], n_hi[:n_nodes], left[:n_nodes], right[:n_nodes], start[:n_nodes], count[:n_nodes]


def build_index(mesh: TriMesh) -> SpatialIndex:
    if not mesh.n_triangles:
        raise DegenerateInputError("cannot index an empty mesh")
    c = np.ascontiguousarray(mesh.corners())
    order, nlo, nhi, left, right, start, count = _build(
        c.min(axis=1), c.max(axis=1), c.mean(axis=1), LEAF_SIZE
    )
    idx = SpatialIndex(np.ascontiguousarray(c[order]), order, nlo, nhi, left, right, start, count)
    for a in (idx.tri, idx.tri_ids, nlo, nhi, left, right, start, count):
        a.setflags(write=False)
    return idx


# ----------------------------------------------------------------------------
# segment queries


@nb.njit(cache=True, inline="always")
def _seg_tri(ax, ay, az, dx, dy, dz, tri, k, tmin, tmax):
    """Moller-Trumbore with a conservative margin on every boundary."""
    e1x = tri[k, 1, 0] - tri[k, 0, 0]
    e1y = tri[k, 1, 1] - tri[k, 0, 1]
    e1z = tri[k, 1, 2] - tri[k, 0, 2]
    e2x = tri[k, 2, 0] - tri[k, 0, 0]
    e2y = tri[k, 2, 1] - tri[k, 0, 1]
    e2z = tri[k, 2, 2] - tri[k, 0, 2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    # parallel (coplanar) segments never register a crossing
    scale = np.sqrt((dx * dx + dy * dy + dz * dz) * (e1x * e1x + e1y * e1y + e1z * e1z)
                    * (e2x * e2x + e2y * e2y + e2z * e2z))
    if abs(det) <= 1e-12 * scale:
        return False
    inv = 1.0 / det
    sx = ax - tri[k, 0, 0]
    sy = ay - tri[k, 0, 1]
    sz = az - tri[k, 0, 2]
    u = (sx * px + sy * py + sz * pz) * inv
    if u < -GRAZE_TOL or u > 1.0 + GRAZE_TOL:
        return False
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -GRAZE_TOL or u + v > 1.0 + GRAZE_TOL:
        return False
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    return t >= tmin - GRAZE_TOL and t <= tmax + GRAZE_TOL


@nb.njit(cache=True, inline="always")
def _seg_box(ax, ay, az, dx, dy, dz, lo, hi, node, tmin, tmax):
    t0 = tmin - _BOX_PAD
    t1 = tmax + _BOX_PAD
    o = (ax, ay, az)
    d = (dx, dy, dz)
    for a in range(3):
        blo = lo[node, a] - _BOX_PAD
        bhi = hi[node, a] + _BOX_PAD
        if abs(d[a]) < 1e-300:
            if o[a] < blo or o[a] > bhi:
                return False
            continue
        inv = 1.0 / d[a]
        ta = (blo - o[a]) * inv
        tb = (bhi - o[a]) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


@nb.njit(cache=True)
def _seg_hit(tri, lo, hi, left, right, start, count, a, b, tmin, tmax):
    ax, ay, az = a[0], a[1], a[2]
    dx, dy, dz = b[0] - ax, b[1] - ay, b[2] - az
    stack = np.empty(128, dtype=np.int64)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _seg_box(ax, ay, az, dx, dy, dz, lo, hi, node, tmin, tmax):
            continue
        if left[node] < 0:
            for k in range(start[node], start[node] + count[node]):
                if _seg_tri(ax, ay, az, dx, dy, dz, tri, k, tmin, tmax):
                    return True
        else:
            stack[sp] = right[node]
            stack[sp + 1] = left[node]
            sp += 2
    return False


@nb.njit(cache=True)
def _seg_hit_brute(tri, a, b, tmin, tmax):
    ax, ay, az = a[0], a[1], a[2]
    dx, dy, dz = b[0] - ax, b[1] - ay, b[2] - az
    for k in range(tri.shape[0]):
        if _seg_tri(ax, ay, az, dx, dy, dz, tri, k, tmin, tmax):
            return True
    return False


@nb.njit(cache=True, parallel=True)
def _seg_hit_many(tri, lo, hi, left, right, start, count, A, B, tmin, tmax):
    out = np.zeros(A.shape[0], dtype=np.bool_)
    for q in nb.prange(A.shape[0]):
        out[q] = _seg_hit(tri, lo, hi, left, right, start, count, A[q], B[q], tmin, tmax)
    return out


@nb.njit(cache=True, parallel=True)
def _seg_hit_many_brute(tri, A, B, tmin, tmax):
    out = np.zeros(A.shape[0], dtype=np.bool_)
    for q in nb.prange(A.shape[0]):
        out[q] = _seg_hit_brute(tri, A[q], B[q], tmin, tmax)
    return out


def _check_range(t_min, t_max):
    if not (0.0 <= t_min < t_max <= 1.0):
        raise ValueError("need 0 <= t_min < t_max <= 1")


def segment_intersects(index: SpatialIndex, a, b, t_min: float = 0.0, t_max: float = 1.0) -> bool:
    """Whether ``a + t (b - a)`` meets any triangle for ``t`` in ``[t_min, t_max]``.

    Touching a triangle within 1e-9 (barycentric) of its boundary counts as
    a hit; segments lying in a triangle's plane never do.
    """
    _check_range(t_min, t_max)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return bool(_seg_hit(*index.arrays(), a, b, float(t_min), float(t_max)))


def segments_intersect(index: SpatialIndex, A, B, t_min: float = 0.0, t_max: float = 1.0) -> np.ndarray:
    _check_range(t_min, t_max)
    A = np.ascontiguousarray(A, dtype=np.float64).reshape(-1, 3)
    B = np.ascontiguousarray(B, dtype=np.float64).reshape(-1, 3)
    return _seg_hit_many(*index.arrays(), A, B, float(t_min), float(t_max))


def segments_intersect_brute(mesh: TriMesh, A, B, t_min: float = 0.0, t_max: float = 1.0) -> np.ndarray:
    """Reference answer: every segment against every triangle, no tree."""
    _check_range(t_min, t_max)
    A = np.ascontiguousarray(A, dtype=np.float64).reshape(-1, 3)
    B = np.ascontiguousarray(B, dtype=np.float64).reshape(-1, 3)
    return _seg_hit_many_brute(np.ascontiguousarray(mesh.corners()), A, B, float(t_min), float(t_max))


# ----------------------------------------------------------------------------
# closest distance


@nb.njit(cache=True, inline="always")
def _point_tri_dist2(px, py, pz, tri, k):
    """Squared distance to a triangle (Ericson, Real-Time Collision Detection 5.1.5)."""
    ax, ay, az = tri[k, 0, 0], tri[k, 0, 1], tri[k, 0, 2]
    bx, by, bz = tri[k, 1, 0], tri[k, 1, 1], tri[k, 1, 2]
    cx, cy, cz = tri[k, 2, 0], tri[k, 2, 1], tri[k, 2, 2]
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
                w = d1 / (d1 - d3)
                qx, qy, qz = ax + w * abx, ay + w * aby, az + w * abz
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
                            den = va + vb + vc
                            if den == 0.0:
                                # zero-area triangle: nearest of its corners
                                da = apx * apx + apy * apy + apz * apz
                                db = bpx * bpx + bpy * bpy + bpz * bpz
                                dc = cpx * cpx + cpy * cpy + cpz * cpz
                                return min(da, min(db, dc))
                            den = 1.0 / den
                            v = vb * den
                            w = vc * den
                            qx = ax + abx * v + acx * w
                            qy = ay + aby * v + acy * w
                            qz = az + abz * v + acz * w
    ex, ey, ez = px - qx, py - qy, pz - qz
    return ex * ex + ey * ey + ez * ez


@nb.njit(cache=True, inline="always")
def _box_dist2(px, py, pz, lo, hi, node):
    d = 0.0
    p = (px, py, pz)
    for a in range(3):
        if p[a] < lo[node, a]:
            t = lo[node, a] - p[a]
            d += t * t
        elif p[a] > hi[node, a]:
            t = p[a] - hi[node, a]
            d += t * t
    return d


@nb.njit(cache=True)
def _closest(tri, lo, hi, left, right, start, count, px, py, pz, bound2):
    best = bound2
    best_k = -1
    stack = np.empty(128, dtype=np.int64)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if _box_dist2(px, py, pz, lo, hi, node) >= best:
            continue
        if left[node] < 0:
            for k in range(start[node], start[node] + count[node]):
                d = _point_tri_dist2(px, py, pz, tri, k)
                if d < best:
                    best = d
                    best_k = k
        else:
            l, r = left[node], right[node]
            dl = _box_dist2(px, py, pz, lo, hi, l)
            dr = _box_dist2(px, py, pz, lo, hi, r)
            # push the farther child first so the nearer one is popped next
            if dl <= dr:
                stack[sp] = r
                stack[sp + 1] = l
            else:
                stack[sp] = l
                stack[sp + 1] = r
            sp += 2
    return best, best_k


@nb.njit(cache=True, parallel=True)
def _closest_many(tri, lo, hi, left, right, start, count, P, bound2):
    n = P.shape[0]
    d2 = np.empty(n)
    ids = np.empty(n, dtype=np.int64)
    for q in nb.prange(n):
        d2[q], ids[q] = _closest(tri, lo, hi, left, right, start, count, P[q, 0], P[q, 1], P[q, 2], bound2)
    return d2, ids


@nb.njit(cache=True, parallel=True)
def _closest_many_brute(tri, P):
    n = P.shape[0]
    d2 = np.empty(n)
    for q in nb.prange(n):
        best = np.inf
        for k in range(tri.shape[0]):
            d = _point_tri_dist2(P[q, 0], P[q, 1], P[q, 2], tri, k)
            if d < best:
                best = d
        d2[q] = best
    return d2


def closest_distance(index: SpatialIndex, points, max_distance: float = np.inf, return_triangle: bool = False):
    """Unsigned distance from each point to the nearest triangle.

    Points farther than ``max_distance`` report ``max_distance`` (triangle
    id -1), which lets narrow-band callers skip most of the tree.
    """
    P = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    bound2 = np.inf if not np.isfinite(max_distance) else float(max_distance) ** 2
    d2, slot = _closest_many(*index.arrays(), P, bound2)
    dist = np.sqrt(d2)
    if not return_triangle:
        return dist
    tri = np.where(slot >= 0, index.tri_ids[np.maximum(slot, 0)], -1)
    return dist, tri


def closest_distance_brute(mesh: TriMesh, points) -> np.ndarray:
    P = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    return np.sqrt(_closest_many_brute(np.ascontiguousarray(mesh.corners()), P))


# ----------------------------------------------------------------------------
# crossing parity along coordinate axes


@nb.njit(cache=True, inline="always")
def _edge_side(ay, az, by, bz, py, pz):
    """Side of p relative to line a->b under a fixed symbolic perturbation of p.

    The edge is evaluated in a canonical direction so two triangles sharing
    it get bit-identical values, then the sign is flipped back.
    """
    flip = 1
    if (by < ay) or (by == ay and bz < az):
        ay, az, by, bz = by, bz, ay, az
        flip = -1
    f = (by - ay) * (pz - az) - (bz - az) * (py - ay)
    if f > 0:
        return flip
    if f < 0:
        return -flip
    # p + (e, e^2): first order term is -(bz - az), then (by - ay)
    if bz != az:
        return flip if -(bz - az) > 0 else -flip
    if by != ay:
        return flip if (by - ay) > 0 else -flip
    return 0


@nb.njit(cache=True, inline="always")
def _covers(ay, az, by, bz, cy, cz, py, pz):
    s1 = _edge_side(ay, az, by, bz, py, pz)
    if s1 == 0:
        return False
    s2 = _edge_side(by, bz, cy, cz, py, pz)
    if s2 != s1:
        return False
    s3 = _edge_side(cy, cz, ay, az, py, pz)
    return s3 == s1


@nb.njit(cache=True, inline="always")
def _crossing(tri, k, axis, py, pz):
    """Coordinate along ``axis`` where the line (py, pz) pierces triangle k."""
    j = (axis + 1) % 3
    l = (axis + 2) % 3
    ax_, ay_, az_ = tri[k, 0, axis], tri[k, 0, j], tri[k, 0, l]
    e1a, e1j, e1l = tri[k, 1, axis] - ax_, tri[k, 1, j] - ay_, tri[k, 1, l] - az_
    e2a, e2j, e2l = tri[k, 2, axis] - ax_, tri[k, 2, j] - ay_, tri[k, 2, l] - az_
    na = e1j * e2l - e1l * e2j
    nj = e1l * e2a - e1a * e2l
    nl = e1a * e2j - e1j * e2a
    return ax_ - (nj * (py - ay_) + nl * (pz - az_)) / na


@nb.njit(cache=True)
def _count_crossings_brute(tri, axis, P):
    """Crossings of the ray ``p + t e_axis`` (t > 0) with every triangle."""
    j = (axis + 1) % 3
    l = (axis + 2) % 3
    out = np.zeros(P.shape[0], dtype=np.int64)
    for q in range(P.shape[0]):
        py, pz = P[q, j], P[q, l]
        c = 0
        for k in range(tri.shape[0]):
            if _covers(tri[k, 0, j], tri[k, 0, l], tri[k, 1, j], tri[k, 1, l],
                       tri[k, 2, j], tri[k, 2, l], py, pz):
                if _crossing(tri, k, axis, py, pz) > P[q, axis]:
                    c += 1
        out[q] = c
    return out


def points_inside(mesh: TriMesh, points, axis: int = 0) -> np.ndarray:
    """Ray-parity inside test along one coordinate axis (brute force over triangles).

    Shared edges and vertices are resolved by a symbolic perturbation of the
    ray, so each crossing of a closed surface is counted exactly once.
    """
    P = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    tri = np.ascontiguousarray(mesh.corners())
    return _count_crossings_brute(tri, axis, P) % 2 == 1


def points_inside_vote(mesh: TriMesh, points) -> np.ndarray:
    """Majority vote of the parity test along x, y and z."""
    votes = sum(points_inside(mesh, points, a).astype(np.int64) for a in range(3))
    return votes >= 2
