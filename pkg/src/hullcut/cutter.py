"""Plane cuts of closed meshes with capped cross-sections."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateCutError, EmptySideError
from .mesh import TriMesh, connected_components
from .planes import CuttingPlane
from .triangulate import plane_frame, triangulate_loops

SNAP_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class CutResult:
    negative: TriMesh
    positive: TriMesh
    # cap loops per side as arrays of 3D points, in cap winding
    negative_loops: list
    positive_loops: list
    # per side: original vertex index, or -1 for a vertex created on the plane
    negative_source: np.ndarray
    positive_source: np.ndarray

    @property
    def cap_area(self) -> float:
        return _cap_area(self.negative_loops)


def _cap_area(loops) -> float:
    total = np.zeros(3)
    for pts in loops:
        total += 0.5 * np.cross(pts, np.roll(pts, -1, axis=0)).sum(axis=0)
    return float(np.linalg.norm(total))


def _trace_loops(edges: list, pos2d: np.ndarray) -> list:
    """Chain directed edges into closed loops.

    Where several edges leave the same vertex, the walk takes the first one
    clockwise from the edge it arrived on, which keeps loops that touch at a
    vertex separate.
    """
    out = defaultdict(list)
    for u, v in edges:
        out[u].append(v)
    used = set()
    loops = []
    for start in edges:
        if start in used:
            continue
        loop = [start[0]]
        used.add(start)
        prev, cur = start
        while cur != loop[0] or len(loop) < 2:
            cands = [w for w in out[cur] if (cur, w) not in used]
            if not cands:
                if cur == loop[0]:
                    break
                raise DegenerateCutError("open cross-section chain")
            if len(cands) > 1:
                back = pos2d[prev] - pos2d[cur]
                a_back = np.arctan2(back[1], back[0])

                def cw(w):
                    d = pos2d[w] - pos2d[cur]
                    ang = (a_back - np.arctan2(d[1], d[0])) % (2 * np.pi)
                    return ang if ang > 0 else 2 * np.pi

                cands.sort(key=cw)
            nxt = cands[0]
            used.add((cur, nxt))
            loop.append(cur)
            prev, cur = cur, nxt
            if cur == loop[0]:
                break
        loop = loop[1:] if loop[0] == loop[1] else loop
        if len(loop) < 3:
            raise DegenerateCutError("cross-section loop with fewer than 3 vertices")
        loops.append(loop)
    return loops


def cut_by_plane(mesh: TriMesh, plane: CuttingPlane) -> CutResult:
    """Split a closed, consistently oriented mesh into its two half-spaces.

    Vertices within 1e-7 of the plane are treated as lying on it (they are
    not moved). Crossing triangles are split, and the open boundary of each
    side is closed with an ear-clipped cap.
    """
    n = plane.normal
    V = mesh.vertices
    T = mesh.triangles
    d = V @ n - plane.offset
    s = np.where(np.abs(d) <= SNAP_TOL, 0, np.sign(d)).astype(np.int8)
    if not (s < 0).any() or not (s > 0).any():
        raise EmptySideError("plane does not separate the mesh")

    st = s[T]
    crossing = (st.min(axis=1) < 0) & (st.max(axis=1) > 0)

    # new on-plane vertices, one per crossed undirected edge
    new_pts = []
    new_id = {}
    nv = len(V)

    def cut_vertex(a, b):
        key = (a, b) if a < b else (b, a)
        k = new_id.get(key)
        if k is None:
            p, q = key
            t = d[p] / (d[p] - d[q])
            new_pts.append(V[p] + t * (V[q] - V[p]))
            k = nv + len(new_pts) - 1
            new_id[key] = k
        return k

    neg, pos = [], []
    plain = ~crossing
    tp = T[plain]
    sp = st[plain]
    on = np.all(sp == 0, axis=1)
    to_neg = (sp.min(axis=1) < 0) & ~on
    if on.any():
        c = V[tp[on]]
        fn = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]) @ n
        # a face lying on the plane bounds the side its normal points away from
        to_neg[np.flatnonzero(on)[fn > 0]] = True
    neg.append(tp[to_neg])
    pos.append(tp[~to_neg])

    extra_neg, extra_pos = [], []
    for tri, sg in zip(T[crossing], st[crossing]):
        tri = [int(x) for x in tri]
        sg = [int(x) for x in sg]
        if 0 in sg:
            r = sg.index(0)
            a, b, c = tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]
            sb = sg[(r + 1) % 3]
            p = cut_vertex(b, c)
            first, second = (a, b, p), (a, p, c)
            (extra_neg if sb < 0 else extra_pos).append(first)
            (extra_pos if sb < 0 else extra_neg).append(second)
        else:
            # rotate so the lone vertex comes first
            r = next(k for k in range(3) if sg[k] != sg[(k + 1) % 3] and sg[k] != sg[(k + 2) % 3])
            a, b, c = tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]
            p = cut_vertex(a, b)
            q = cut_vertex(a, c)
            lone, rest = (extra_neg, extra_pos) if sg[r] < 0 else (extra_pos, extra_neg)
            lone.append((a, p, q))
            rest.append((p, b, c))
            rest.append((p, c, q))

    allv = np.vstack([V, np.array(new_pts).reshape(-1, 3)])
    source = np.concatenate([np.arange(nv), np.full(len(new_pts), -1)])
    on_plane = np.concatenate([s == 0, np.ones(len(new_pts), dtype=bool)])
    sides = []
    for base, extra, cap_normal in ((neg, extra_neg, n), (pos, extra_pos, -n)):
        tris = np.vstack(base + [np.array(extra, dtype=np.int64).reshape(-1, 3)])
        sides.append(_close_side(allv, tris, on_plane, cap_normal, source))
    (nm, nloops, nsrc), (pm, ploops, psrc) = sides
    return CutResult(nm, pm, nloops, ploops, nsrc, psrc)


def _close_side(allv, tris, on_plane, cap_normal, source):
    if not len(tris):
        raise EmptySideError("one side of the cut is empty")
    he = tris[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    present = set(map(tuple, he.tolist()))
    boundary = [(v, u) for u, v in he.tolist() if (v, u) not in present]
    loops3d = []
    cap = np.zeros((0, 3), dtype=np.int64)
    if boundary:
        ends = np.unique(np.array(boundary).ravel())
        if not on_plane[ends].all():
            raise DegenerateCutError("open boundary off the cutting plane")
        e1, e2 = plane_frame(cap_normal)
        pos2d = np.zeros((len(allv), 2))
        pos2d[ends] = np.c_[allv[ends] @ e1, allv[ends] @ e2]
        loops = _trace_loops(boundary, pos2d)
        cap = triangulate_loops(loops, pos2d)
        loops3d = [allv[lp] for lp in loops]
    full = np.vstack([tris, cap])
    used = np.zeros(len(allv), dtype=bool)
    used[full.ravel()] = True
    remap = np.cumsum(used) - 1
    return TriMesh(allv[used], remap[full]), loops3d, source[used]


def split_and_separate(mesh: TriMesh, plane: CuttingPlane) -> list:
    """Cut, then split each side into its edge-connected components.

    Returns ``(side, mesh)`` pairs with side -1 (negative) or +1 (positive).
    """
    res = cut_by_plane(mesh, plane)
    out = []
    for side, m in ((-1, res.negative), (1, res.positive)):
        out.extend((side, c) for c in connected_components(m))
    return out
