"""Convex hulls and the collision-aware concavity score.

The score of a mesh against its convex hull is the smaller of two lengths:
a sampled two-sided Hausdorff distance, and the radius of the sphere whose
volume equals the volume the hull adds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull as _QHull
from scipy.spatial import QhullError

from .bvh import build_index, closest_distance
from .exceptions import DegenerateHullError
from .mesh import TriMesh, concatenate, signed_volume
from .triangulate import plane_frame, triangulate_loops

DEFAULT_SAMPLES = 2048
INSIDE_TOL = 1e-7
COMBINE_MODES = ("min", "max")


@dataclass(frozen=True, eq=False)
class ConvexHull:
    mesh: TriMesh
    volume: float
    equations: np.ndarray  # (f, 4): n . x + d <= 0 inside

    def contains(self, points, tol: float = INSIDE_TOL) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.all(p @ self.equations[:, :3].T + self.equations[:, 3] <= tol, axis=1)


def convex_hull(points) -> ConvexHull:
    """Convex hull of at least four non-coplanar points (Quickhull via qhull)."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(p) < 4:
        raise DegenerateHullError("need at least 4 points for a 3D hull")
    c = p - p.mean(axis=0)
    _, s, vt = np.linalg.svd(c, full_matrices=False)
    if np.abs(c @ vt[2]).max() <= 1e-9:
        raise DegenerateHullError("points are coplanar")
    try:
        qh = _QHull(p)
    except QhullError as exc:
        raise DegenerateHullError(str(exc)) from exc
    mesh = TriMesh(p, _facet_triangles(p, qh.simplices, qh.equations)).compact()
    return ConvexHull(mesh, float(qh.volume), qh.equations.copy())


def _facet_triangles(p: np.ndarray, simplices: np.ndarray, equations: np.ndarray) -> np.ndarray:
    """Re-triangulate each planar hull facet from its input point indices.

    qhull splits merged facets arbitrarily, and differently for a rotated
    copy of the same points. Rebuilding every facet as a polygon that starts
    at its lowest point index gives a triangulation that rotates with the
    input.
    """
    _, inv, counts = np.unique(equations, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    single = counts[inv] == 1
    # single-simplex facets: wind along the normal, start at the lowest index
    tri = simplices[single].astype(np.int64)
    c = p[tri]
    flip = np.einsum("ij,ij->i", np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), equations[single, :3]) < 0
    tri[flip] = tri[flip][:, ::-1]
    shift = np.argmin(tri, axis=1)
    tri = np.take_along_axis(tri, (shift[:, None] + np.arange(3)) % 3, axis=1)
    out = [tri[np.lexsort(tri.T[::-1])]]
    groups: dict = {}
    for simplex, eq in zip(simplices[~single].tolist(), map(tuple, equations[~single].tolist())):
        groups.setdefault(eq, set()).update(simplex)
    facets = sorted((sorted(ids), np.array(eq[:3])) for eq, ids in groups.items())
    for ids, normal in facets:
        ids = np.array(ids)
        e1, e2 = plane_frame(normal)
        q = np.c_[p[ids] @ e1, p[ids] @ e2]
        ang = np.arctan2(*(q - q.mean(axis=0)).T[::-1])
        loop = ids[np.argsort(ang, kind="stable")]
        loop = np.roll(loop, -int(np.argmin(loop)))
        pos2d = np.zeros((len(p), 2))
        pos2d[ids] = q
        out.append(triangulate_loops([loop.tolist()], pos2d))
    return np.vstack(out)


def padded_convex_hull(points, jitter: float = 1e-6) -> ConvexHull:
    """Hull that tolerates flat input by thickening it along the best-fit normal."""
    try:
        return convex_hull(points)
    except DegenerateHullError:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(p) == 0:
            raise
        c = p - p.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=True)
        normal = vt[-1]
        extra = [p + jitter * normal, p - jitter * normal]
        if len(p) < 3:
            # a point or a segment: thicken in the two remaining directions too
            extra += [p + jitter * vt[1], p - jitter * vt[1]]
        return convex_hull(np.vstack(extra))


@dataclass(frozen=True)
class ConcavityScore:
    hausdorff: float
    volume_radius: float
    combined: float

    def as_dict(self) -> dict:
        return {"hausdorff": self.hausdorff, "volume_radius": self.volume_radius, "combined": self.combined}


def _combine(a: float, b: float, mode: str) -> float:
    if mode == "min":
        return min(a, b)
    if mode == "max":
        return max(a, b)
    raise ValueError(f"unknown combine mode {mode!r}; expected one of {COMBINE_MODES}")


def surface_samples(mesh: TriMesh, n: int, seed) -> np.ndarray:
    """``n`` area-weighted uniform surface points followed by all vertices."""
    rng = np.random.default_rng(seed)
    areas = mesh.triangle_areas()
    total = areas.sum()
    if n <= 0 or total <= 0:
        return mesh.vertices.copy()
    tri = rng.choice(len(areas), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    c = mesh.corners()[tri]
    pts = (1 - r1)[:, None] * c[:, 0] + (r1 * (1 - r2))[:, None] * c[:, 1] + (r1 * r2)[:, None] * c[:, 2]
    return np.vstack([pts, mesh.vertices])


def sampled_hausdorff(a: TriMesh, b: TriMesh, samples: int = DEFAULT_SAMPLES, seed=0) -> float:
    """Two-sided Hausdorff distance estimated from surface samples.

    Each side is sampled with its own generator seeded by ``seed``, so
    swapping ``a`` and ``b`` gives exactly the same value.
    """
    pa = surface_samples(a, samples, seed)
    pb = surface_samples(b, samples, seed)
    d_ab = closest_distance(build_index(b), pa).max()
    d_ba = closest_distance(build_index(a), pb).max()
    return float(max(d_ab, d_ba))


def sphere_radius(volume: float) -> float:
    return (3.0 * max(volume, 0.0) / (4.0 * math.pi)) ** (1.0 / 3.0)


def volume_radius(mesh: TriMesh, hull: ConvexHull) -> float:
    """Radius of the sphere whose volume is the hull's excess over the mesh."""
    return sphere_radius(hull.volume - signed_volume(mesh))


def collision_concavity(mesh: TriMesh, samples: int = DEFAULT_SAMPLES, seed=0, combine: str = "min",
                        hull: ConvexHull | None = None) -> ConcavityScore:
    if hull is None:
        hull = padded_convex_hull(mesh.vertices)
    h = sampled_hausdorff(mesh, hull.mesh, samples, seed)
    r = volume_radius(mesh, hull)
    return ConcavityScore(h, r, _combine(h, r, combine))


def evaluate_decomposition(input_mesh: TriMesh, hulls, samples: int = DEFAULT_SAMPLES, seed=0,
                           combine: str = "min") -> ConcavityScore:
    """Score a set of non-overlapping hulls against the mesh they approximate.

    Input samples that fall inside some hull are covered and only count in
    the volume term. Hull samples lying inside a second hull are interior to
    the union and are skipped. The volume term uses the absolute difference
    between the summed hull volume and the input volume, so missing material
    is penalized as much as excess.
    """
    hulls = list(hulls)
    if not hulls:
        raise ValueError("decomposition has no parts")
    union = concatenate([h.mesh for h in hulls])
    p_in = surface_samples(input_mesh, samples, seed)
    covered = np.zeros(len(p_in), dtype=bool)
    for h in hulls:
        covered |= h.contains(p_in)
    d_in = closest_distance(build_index(union), p_in[~covered]).max() if (~covered).any() else 0.0
    p_union = surface_samples(union, samples, seed)
    # a hull point inside a second hull is interior to the union (e.g. a shared cut face)
    inside_count = sum(h.contains(p_union).astype(np.int64) for h in hulls)
    p_union = p_union[inside_count <= 1]
    d_union = closest_distance(build_index(input_mesh), p_union).max() if len(p_union) else 0.0
    haus = float(max(d_in, d_union))
    vol = sphere_radius(abs(sum(h.volume for h in hulls) - signed_volume(input_mesh)))
    return ConcavityScore(haus, vol, _combine(haus, vol, combine))
