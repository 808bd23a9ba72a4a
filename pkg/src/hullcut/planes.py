"""Candidate cutting planes and their value.

A plane's value is the total length of the visibility edges it separates:
cutting along it removes those edges from the concavity (to first order,
ignoring edges created by the cut itself). Candidates are the perpendicular
bisectors of sampled visibility edges plus the planes of large flat regions
of the surface, the latter with doubled value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy.spatial import cKDTree

from .exceptions import NoUsefulPlaneError
from .mesh import TriMesh
from .visibility import VisibilitySet

EDGE = "edge-bisector"
FLAT = "flat-surface"
_KIND_RANK = {EDGE: 0, FLAT: 1}
SIDE_TOL = 1e-9

FLAT_ANGLE_DEG = 2.0
FLAT_OFFSET_TOL = 1e-3
FLAT_MIN_AREA_FRACTION = 0.02


@dataclass(frozen=True, eq=False)
class CuttingPlane:
    """Oriented plane ``{x : normal . x = offset}``; positive side is along ``normal``."""

    normal: np.ndarray
    offset: float
    kind: str = EDGE
    source: tuple = ()
    value_multiplier: float = 1.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(n)
        if not norm > 0:
            raise ValueError("plane normal must be non-zero")
        if abs(norm - 1.0) > 1e-12:
            n = n / norm
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown plane kind {self.kind!r}")
        if self.value_multiplier not in (1.0, 2.0):
            raise ValueError("value multiplier must be 1 or 2")
        object.__setattr__(self, "source", tuple(int(s) for s in self.source))

    def signed_distance(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.normal - self.offset

    def sort_key(self) -> tuple:
        return (_KIND_RANK[self.kind], self.source)

    def as_dict(self) -> dict:
        return {
            "normal": [float(x) for x in self.normal],
            "offset": self.offset,
            "kind": self.kind,
            "source": list(self.source),
            "value_multiplier": self.value_multiplier,
        }


@dataclass(frozen=True, eq=False)
class PlaneCandidateSet:
    """Candidates sorted by descending score; ties by (kind, source)."""

    planes: list
    scores: np.ndarray
    values: np.ndarray = field(repr=False)  # raw plane values before the multiplier

    def __len__(self) -> int:
        return len(self.planes)

    @property
    def best(self) -> CuttingPlane:
        return self.planes[0]


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _hash_order(pairs: np.ndarray, seed) -> np.ndarray:
    """Edge indices ordered by a seeded hash of the vertex pair.

    Unlike drawing positions, the priority of an edge does not depend on
    which other edges are present, so a few edges appearing or vanishing
    leave the rest of the sample unchanged.
    """
    s = np.random.default_rng(seed).integers(0, 2**63, dtype=np.uint64)
    p = np.sort(np.asarray(pairs, dtype=np.int64), axis=1).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix(_splitmix(p[:, 0] ^ s) ^ p[:, 1])
    return np.lexsort((np.arange(len(h)), h))


def sample_edge_planes(edges: VisibilitySet, vertices, k: int, seed) -> list:
    """Perpendicular bisector planes of ``min(k, len(edges))`` random edges."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not len(edges):
        return []
    pick = np.sort(_hash_order(edges.pairs, seed)[: min(k, len(edges))])
    v = np.asarray(vertices, dtype=np.float64)
    planes = []
    for e in pick:
        i, j = edges.pairs[e]
        d = v[j] - v[i]
        ln = np.linalg.norm(d)
        if ln == 0:
            continue
        n = d / ln
        planes.append(CuttingPlane(n, float(n @ (0.5 * (v[i] + v[j]))), EDGE, (i, j), 1.0))
    return planes


def extract_flat_planes(mesh: TriMesh, max_planes: int = 8) -> list:
    """Planes of the largest flat regions, each carrying a value multiplier of 2.

    Triangles are grouped greedily, largest first: a group collects every
    ungrouped triangle whose normal is within 2 degrees of the seed's and
    whose corners lie within 1e-3 of the seed's plane. Groups covering at
    least 2% of the surface become planes.
    """
    if max_planes <= 0 or not mesh.n_triangles:
        return []
    areas = mesh.triangle_areas()
    total = areas.sum()
    normals = mesh.face_normals()
    corners = mesh.corners()
    valid = areas > 0
    # equal-area triangles are common on remeshed faces; round so rotation
    # noise cannot reorder them
    order = np.lexsort((np.arange(len(areas)), -np.round(areas / total, 10)))
    tree = cKDTree(normals)
    chord = 2.0 * np.sin(np.radians(FLAT_ANGLE_DEG) / 2.0)
    assigned = ~valid
    clusters = []
    for seed in order:
        if assigned[seed]:
            continue
        n0 = normals[seed]
        d0 = float(n0 @ corners[seed, 0])
        cand = np.array(sorted(tree.query_ball_point(n0, chord * (1 + 1e-9))), dtype=np.int64)
        cand = cand[~assigned[cand]]
        off = np.abs(corners[cand] @ n0 - d0).max(axis=1)
        members = cand[off <= FLAT_OFFSET_TOL]
        assigned[members] = True
        area = areas[members].sum()
        if area >= FLAT_MIN_AREA_FRACTION * total:
            clusters.append((area, int(seed), members))
    clusters.sort(key=lambda c: (-round(c[0] / total, 10), c[1]))
    planes = []
    for cid, (area, _, members) in enumerate(clusters[:max_planes]):
        w = areas[members]
        n = (normals[members] * w[:, None]).sum(axis=0)
        n /= np.linalg.norm(n)
        cen = corners[members].mean(axis=1)
        planes.append(CuttingPlane(n, float((cen @ n * w).sum() / w.sum()), FLAT, (cid,), 2.0))
    return planes


@nb.njit(cache=True, parallel=True)
def _plane_values(normals, offsets, V, pairs, lengths, tol):
    K = normals.shape[0]
    out = np.zeros(K)
    for c in nb.prange(K):
        nx, ny, nz, off = normals[c, 0], normals[c, 1], normals[c, 2], offsets[c]
        d = np.empty(V.shape[0])
        for v in range(V.shape[0]):
            d[v] = nx * V[v, 0] + ny * V[v, 1] + nz * V[v, 2] - off
        s = 0.0
        for e in range(pairs.shape[0]):
            a = d[pairs[e, 0]]
            b = d[pairs[e, 1]]
            if (a > tol and b < -tol) or (a < -tol and b > tol):
                s += lengths[e]
        out[c] = s
    return out


def plane_values(planes, edges: VisibilitySet, vertices) -> np.ndarray:
    """Value of every plane in ``planes`` (no multiplier), evaluated in parallel."""
    if not planes:
        return np.zeros(0)
    normals = np.ascontiguousarray([p.normal for p in planes], dtype=np.float64)
    offsets = np.array([p.offset for p in planes], dtype=np.float64)
    return _plane_values(normals, offsets, np.ascontiguousarray(vertices, dtype=np.float64),
                         np.ascontiguousarray(edges.pairs), np.ascontiguousarray(edges.lengths), SIDE_TOL)


def plane_value(plane: CuttingPlane, edges: VisibilitySet, vertices) -> float:
    """Total length of edges whose endpoints lie strictly on opposite sides.

    An endpoint within 1e-9 of the plane counts as on it, and such an edge
    is not cut.
    """
    return float(plane_values([plane], edges, vertices)[0])


def plane_value_reference(plane: CuttingPlane, edges: VisibilitySet, vertices) -> float:
    """Straight Python loop over the edges, in the same summation order."""
    nx, ny, nz = (float(x) for x in plane.normal)
    off = plane.offset
    v = np.asarray(vertices, dtype=np.float64)
    total = 0.0
    for (i, j), ln in zip(edges.pairs.tolist(), edges.lengths.tolist()):
        a = nx * v[i, 0] + ny * v[i, 1] + nz * v[i, 2] - off
        b = nx * v[j, 0] + ny * v[j, 1] + nz * v[j, 2] - off
        if (a > SIDE_TOL and b < -SIDE_TOL) or (a < -SIDE_TOL and b > SIDE_TOL):
            total += ln
    return total


def score_candidates(planes, edges: VisibilitySet, vertices) -> PlaneCandidateSet:
    values = plane_values(planes, edges, vertices)
    scores = values * np.array([p.value_multiplier for p in planes]) if planes else values
    order = sorted(range(len(planes)), key=lambda c: (-scores[c], planes[c].sort_key()))
    return PlaneCandidateSet([planes[c] for c in order], scores[order], values[order])


def select_best_plane(
    mesh: TriMesh,
    edges: VisibilitySet,
    k: int = 1024,
    seed=0,
    max_flat_planes: int = 8,
    use_flat_planes: bool = True,
) -> tuple:
    """Highest scoring candidate plane and the full ranked candidate set."""
    if not len(edges):
        raise NoUsefulPlaneError("part has no visibility edges")
    planes = sample_edge_planes(edges, mesh.vertices, k, seed)
    if use_flat_planes:
        planes += extract_flat_planes(mesh, max_flat_planes)
    ranked = score_candidates(planes, edges, mesh.vertices)
    if not len(ranked) or ranked.scores[0] <= 0:
        raise NoUsefulPlaneError("no candidate plane cuts a visibility edge")
    return ranked.best, ranked
