"""Ear-clipping triangulation of planar polygons with holes.

Outer boundaries are counter-clockwise, holes clockwise. Holes are spliced
into their enclosing boundary with bridge edges before clipping, so the
output only ever references the input vertex ids.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateCutError


def signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def point_in_polygon(p, pts: np.ndarray) -> int:
    """1 inside, 0 on boundary, -1 outside (crossing number with boundary check)."""
    x, y = float(p[0]), float(p[1])
    n = len(pts)
    inside = False
    for k in range(n):
        ax, ay = pts[k]
        bx, by = pts[(k + 1) % n]
        cr = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        if abs(cr) <= 1e-14 and min(ax, bx) - 1e-14 <= x <= max(ax, bx) + 1e-14 \
                and min(ay, by) - 1e-14 <= y <= max(ay, by) + 1e-14:
            return 0
        if (ay > y) != (by > y):
            xi = ax + (y - ay) * (bx - ax) / (by - ay)
            if xi > x:
                inside = not inside
    return 1 if inside else -1


def _bridge(outer_ids: list, holes: list, pos) -> list:
    """Splice hole loops into the outer loop (Eberly's visible-vertex method)."""
    ids = list(outer_ids)
    # rightmost hole first, so later bridges can attach to earlier holes
    holes = sorted(holes, key=lambda h: -max(pos[i][0] for i in h))
    for hole in holes:
        hpts = np.array([pos[i] for i in hole])
        hk = int(np.argmax(hpts[:, 0] + 1e-12 * hpts[:, 1]))
        m = hpts[hk]
        best_t, best_k = np.inf, -1
        n = len(ids)
        for k in range(n):
            a, b = pos[ids[k]], pos[ids[(k + 1) % n]]
            if (a[1] - m[1]) * (b[1] - m[1]) > 0:
                continue
            if a[1] == b[1]:
                if a[1] != m[1]:
                    continue
                cands = [(a[0] - m[0], k), (b[0] - m[0], (k + 1) % n)]
                for t, kk in cands:
                    if 0 <= t < best_t:
                        best_t, best_k = t, kk
                continue
            t = a[0] + (m[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) - m[0]
            if 0 <= t < best_t:
                best_t = t
                # visible candidate: endpoint with larger x
                best_k = k if a[0] > b[0] else (k + 1) % n
        if best_k < 0:
            raise DegenerateCutError("hole is not enclosed by its boundary loop")
        ip = np.array([m[0] + best_t, m[1]])
        p = pos[ids[best_k]]
        # a reflex vertex inside triangle (m, ip, p) blocks visibility; take
        # the one with the smallest angle to the ray
        tri_ccw = _cross(m, ip, p) >= 0
        best_ang = None
        for k in range(n):
            q = pos[ids[k]]
            if ids[k] == ids[best_k] or q[0] < m[0]:
                continue
            prev, nxt = pos[ids[k - 1]], pos[ids[(k + 1) % n]]
            if _cross(prev, q, nxt) > 0:
                continue
            c1, c2, c3 = _cross(m, ip, q), _cross(ip, p, q), _cross(p, m, q)
            inside = (c1 >= 0 and c2 >= 0 and c3 >= 0) if tri_ccw else (c1 <= 0 and c2 <= 0 and c3 <= 0)
            if not inside:
                continue
            d = q - m
            ang = abs(np.arctan2(d[1], d[0]))
            if best_ang is None or ang < best_ang or (ang == best_ang and d @ d < (pos[ids[best_k]] - m) @ (pos[ids[best_k]] - m)):
                best_ang, best_k = ang, k
        hole_seq = list(hole[hk:]) + list(hole[: hk + 1])
        ids = ids[: best_k + 1] + hole_seq + ids[best_k:]
    return ids


def _ear_clip(ids: list, pos) -> list:
    pts = np.array([pos[i] for i in ids], dtype=np.float64)
    n = len(ids)
    if n < 3:
        return []
    scale = float(np.ptp(pts, axis=0).max()) or 1.0
    eps = 1e-13 * scale * scale
    nxt = list(range(1, n)) + [0]
    prv = [n - 1] + list(range(n - 1))
    alive = np.ones(n, dtype=bool)
    out = []
    remaining = n

    def is_ear(i):
        a, b, c = pts[prv[i]], pts[i], pts[nxt[i]]
        if _cross(a, b, c) <= eps:
            return False
        idx = np.flatnonzero(alive)
        q = pts[idx]
        same = (
            np.all(q == a, axis=1) | np.all(q == b, axis=1) | np.all(q == c, axis=1)
        )
        c1 = (b[0] - a[0]) * (q[:, 1] - a[1]) - (b[1] - a[1]) * (q[:, 0] - a[0])
        c2 = (c[0] - b[0]) * (q[:, 1] - b[1]) - (c[1] - b[1]) * (q[:, 0] - b[0])
        c3 = (a[0] - c[0]) * (q[:, 1] - c[1]) - (a[1] - c[1]) * (q[:, 0] - c[0])
        blocked = (c1 >= -eps) & (c2 >= -eps) & (c3 >= -eps) & ~same
        return not blocked.any()

    i = 0
    stall = 0
    while remaining > 3:
        if is_ear(i):
            out.append((ids[prv[i]], ids[i], ids[nxt[i]]))
            alive[i] = False
            nxt[prv[i]] = nxt[i]
            prv[nxt[i]] = prv[i]
            remaining -= 1
            i = prv[i]
            stall = 0
            continue
        i = nxt[i]
        stall += 1
        if stall > remaining:
            # no valid ear: clip the most convex corner so the fan stays closed
            cand = np.flatnonzero(alive)
            crosses = [_cross(pts[prv[k]], pts[k], pts[nxt[k]]) for k in cand]
            k = int(cand[int(np.argmax(crosses))])
            if crosses[int(np.argmax(crosses))] <= 0:
                raise DegenerateCutError("polygon has no convex corner")
            out.append((ids[prv[k]], ids[k], ids[nxt[k]]))
            alive[k] = False
            nxt[prv[k]] = nxt[k]
            prv[nxt[k]] = prv[k]
            remaining -= 1
            i = prv[k]
            stall = 0
    # the last triangle closes the fan even when it is flat
    k = int(np.flatnonzero(alive)[0])
    out.append((ids[prv[k]], ids[k], ids[nxt[k]]))
    return out


def triangulate_loops(loops: list, positions: np.ndarray) -> np.ndarray:
    """Triangulate the region bounded by ``loops``.

    Parameters
    ----------
    loops : list of sequences of int
        Vertex ids, CCW for outer boundaries and CW for holes.
    positions : (n, 2) array
        2D coordinates indexed by vertex id.

    Returns
    -------
    (t, 3) int array of CCW triangles.
    """
    pos = np.asarray(positions, dtype=np.float64)
    outers, holes = [], []
    for loop in loops:
        loop = list(loop)
        if len(loop) < 3:
            continue
        a = signed_area(pos[loop])
        (outers if a > 0 else holes).append((abs(a), loop))
    outers.sort(key=lambda t: t[0])
    groups = {id(o[1]): [] for o in outers}
    for _, hole in holes:
        hp = pos[hole]
        owner = None
        for _, outer in outers:
            opts = pos[outer]
            verdicts = [point_in_polygon(q, opts) for q in hp]
            if any(v == 1 for v in verdicts) and not any(v == -1 for v in verdicts):
                owner = outer
                break
        if owner is None:
            raise DegenerateCutError("hole loop without an enclosing boundary")
        groups[id(owner)].append(hole)
    tris = []
    for _, outer in outers:
        ring = _bridge(outer, groups[id(outer)], pos) if groups[id(outer)] else outer
        tris.extend(_ear_clip(ring, pos))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def plane_frame(normal) -> tuple:
    """Orthonormal ``(e1, e2)`` spanning the plane, with ``e1 x e2 = normal``."""
    n = np.asarray(normal, dtype=np.float64)
    a = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)
