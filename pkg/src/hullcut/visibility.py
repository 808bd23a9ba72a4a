"""Offset cages, visibility edges and the visibility concavity.

Two mesh vertices see each other "from outside" when the segment joining
them leaves the cage (the surface offset outward by ``epsilon``) while not
crossing the mesh itself. The total length of these segments is the
visibility concavity of the mesh; it is zero for convex shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy.spatial import ConvexHull as _QHull
from scipy.spatial import QhullError

from .bvh import SpatialIndex, _seg_hit, build_index, segments_intersect_brute
from .mesh import TriMesh, validate
from .sdf import build_sdf, extract_isosurface

DEFAULT_EPSILON = 0.03
ENDPOINT_CLIP = 1e-4
# rows of the pair matrix handled per kernel call (bounds the flag buffer)
_PAIR_BLOCK = 20_000_000


@dataclass(frozen=True, eq=False)
class CageMesh:
    """Watertight surface offset outward from a source mesh by ``epsilon``."""

    mesh: TriMesh
    epsilon: float
    index: SpatialIndex = field(repr=False)


def build_cage(mesh: TriMesh, epsilon: float = DEFAULT_EPSILON, resolution: int = 100) -> CageMesh:
    """Offset surface at distance ``epsilon`` from a normalized mesh.

    The grid cell is ``1 / resolution`` in normalized units regardless of the
    size of ``mesh``, so the cage of a small part is as accurate as the cage of
    the whole model. Padding grows with ``epsilon`` so the offset surface
    never reaches the grid boundary.

    The grid is laid out along the principal axes of the vertices, so a
    rotated mesh gets the correspondingly rotated cage.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    h = 1.0 / int(resolution)
    padding = int(math.ceil(epsilon / h)) + 3
    center, axes = principal_frame(mesh.vertices)
    local = mesh.with_vertices((mesh.vertices - center) @ axes.T)
    grid = build_sdf(local, resolution, cell_size=h, padding=padding, band=epsilon + 2.0 * h, centered=True)
    surface = extract_isosurface(grid, float(epsilon))
    surface = surface.with_vertices(surface.vertices @ axes + center)
    return CageMesh(surface, float(epsilon), build_index(surface))


def principal_frame(points) -> tuple:
    """Centroid and principal axes (rows, right-handed) of a point set.

    Axes are ordered by decreasing variance. The first two are signed so the
    third moment along them is non-negative; the third completes a rotation.
    """
    p = np.asarray(points, dtype=np.float64)
    center = p.mean(axis=0)
    c = p - center
    _, vecs = np.linalg.eigh(c.T @ c)
    axes = vecs[:, ::-1].T.copy()
    for a in range(2):
        if np.sum((c @ axes[a]) ** 3) < 0:
            axes[a] = -axes[a]
    axes[2] = np.cross(axes[0], axes[1])
    return center, axes


@dataclass(frozen=True, eq=False)
class VisibilityEdge:
    i: int
    j: int
    length: float


@dataclass(frozen=True, eq=False)
class VisibilitySet:
    """Visibility edges as parallel arrays, sorted by ``(i, j)`` with ``i < j``."""

    pairs: np.ndarray  # (e, 2) int64
    lengths: np.ndarray  # (e,) float64
    total_length: float = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        ln = np.asarray(self.lengths, dtype=np.float64).reshape(-1)
        if len(p) != len(ln):
            raise ValueError("pairs and lengths differ in length")
        if len(p):
            if np.any(p[:, 0] >= p[:, 1]):
                raise ValueError("visibility pairs must satisfy i < j")
            order = np.lexsort((p[:, 1], p[:, 0]))
            p, ln = p[order], ln[order]
            if np.any(np.all(p[1:] == p[:-1], axis=1)):
                raise ValueError("duplicate visibility pair")
        p.setflags(write=False)
        ln.setflags(write=False)
        object.__setattr__(self, "pairs", p)
        object.__setattr__(self, "lengths", ln)
        object.__setattr__(self, "total_length", float(ln.sum()))

    @classmethod
    def empty(cls) -> VisibilitySet:
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0))

    @classmethod
    def from_pairs(cls, pairs, vertices) -> VisibilitySet:
        p = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        v = np.asarray(vertices)
        return cls(p, np.linalg.norm(v[p[:, 1]] - v[p[:, 0]], axis=1))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        for (i, j), ln in zip(self.pairs, self.lengths):
            yield VisibilityEdge(int(i), int(j), float(ln))

    def __bool__(self) -> bool:
        return len(self.pairs) > 0


@nb.njit(cache=True, parallel=True)
def _visible_block(V, r0, r1, c_tri, c_lo, c_hi, c_left, c_right, c_start, c_count,
                   m_tri, m_lo, m_hi, m_left, m_right, m_start, m_count, delta):
    n = V.shape[0]
    flags = np.zeros((r1 - r0, n), dtype=np.bool_)
    for r in nb.prange(r1 - r0):
        i = r0 + r
        for j in range(i + 1, n):
            if not _seg_hit(c_tri, c_lo, c_hi, c_left, c_right, c_start, c_count, V[i], V[j], 0.0, 1.0):
                continue
            if _seg_hit(m_tri, m_lo, m_hi, m_left, m_right, m_start, m_count, V[i], V[j], delta, 1.0 - delta):
                continue
            flags[r, j] = True
    return flags


@nb.njit(cache=True)
def _all_separated(tri, normals, offsets, margin):
    """True when every triangle lies beyond a single plane of the polytope."""
    last = 0
    F = normals.shape[0]
    for t in range(tri.shape[0]):
        found = False
        for step in range(F):
            f = (last + step) % F
            m = np.inf
            for c in range(3):
                s = (normals[f, 0] * tri[t, c, 0] + normals[f, 1] * tri[t, c, 1]
                     + normals[f, 2] * tri[t, c, 2] + offsets[f])
                m = min(m, s)
            if m > margin:
                found = True
                last = f
                break
        if not found:
            return False
    return True


def cage_clears_hull(mesh: TriMesh, cage: CageMesh, margin: float = 1e-7) -> bool:
    """Whether the cage provably misses the convex hull of the mesh vertices.

    Every vertex-to-vertex segment lies in that hull, so when this holds no
    pair can meet the cage and the visibility set is empty.
    """
    try:
        eq = _QHull(mesh.vertices).equations
    except (QhullError, ValueError):
        return False
    scale = float(np.abs(mesh.vertices).max()) or 1.0
    return bool(_all_separated(np.ascontiguousarray(cage.mesh.corners()), np.ascontiguousarray(eq[:, :3]),
                               np.ascontiguousarray(eq[:, 3]), margin * scale))


def compute_visibility_edges(
    mesh: TriMesh,
    cage: CageMesh,
    *,
    mesh_index: SpatialIndex | None = None,
    delta: float = ENDPOINT_CLIP,
) -> VisibilitySet:
    """All vertex pairs whose segment meets the cage but not the mesh.

    The mesh test ignores ``t < delta`` and ``t > 1 - delta`` because the
    endpoints lie on the mesh. Every unordered pair is examined unless the
    cage is shown to stay clear of the vertex hull, in which case the set is
    empty without testing pairs.
    """
    V = np.ascontiguousarray(mesh.vertices)
    n = len(V)
    if n < 2 or cage_clears_hull(mesh, cage):
        return VisibilitySet.empty()
    midx = mesh_index if mesh_index is not None else build_index(mesh)
    rows = max(1, _PAIR_BLOCK // n)
    found = []
    for r0 in range(0, n, rows):
        r1 = min(n, r0 + rows)
        flags = _visible_block(V, r0, r1, *cage.index.arrays(), *midx.arrays(), float(delta))
        ii, jj = np.nonzero(flags)
        if len(ii):
            found.append(np.stack([ii + r0, jj], axis=1))
    if not found:
        return VisibilitySet.empty()
    return VisibilitySet.from_pairs(np.vstack(found), V)


def compute_visibility_edges_brute(mesh: TriMesh, cage: CageMesh, delta: float = ENDPOINT_CLIP) -> VisibilitySet:
    """Reference classification: every pair against every triangle, no acceleration."""
    V = mesh.vertices
    ii, jj = np.triu_indices(len(V), k=1)
    if not len(ii):
        return VisibilitySet.empty()
    hits_cage = segments_intersect_brute(cage.mesh, V[ii], V[jj], 0.0, 1.0)
    hits_mesh = segments_intersect_brute(mesh, V[ii], V[jj], delta, 1.0 - delta)
    keep = hits_cage & ~hits_mesh
    return VisibilitySet.from_pairs(np.stack([ii[keep], jj[keep]], axis=1), V)


def visibility_concavity(edges: VisibilitySet) -> float:
    return edges.total_length


def decomposition_visibility_concavity(parts) -> float:
    return float(sum(e.total_length for e in parts))


def cage_contains_vertices(mesh: TriMesh, cage: CageMesh) -> bool:
    from .bvh import points_inside_vote

    return bool(points_inside_vote(cage.mesh, mesh.vertices).all()) and validate(cage.mesh).watertight
