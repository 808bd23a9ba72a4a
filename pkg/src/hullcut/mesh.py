"""Indexed triangle meshes: measures, normalization, connectivity, validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components as _graph_components

from .exceptions import DegenerateInputError

DEGENERATE_AREA = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh with counter-clockwise (outward) winding.

    ``vertices`` is ``(n, 3)`` float64 and ``triangles`` is ``(m, 3)`` int64.
    Both arrays are made read-only so a mesh can be shared between workers.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64, copy=True).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int64, copy=True).reshape(-1, 3)
        if len(t):
            if t.min() < 0 or t.max() >= len(v):
                raise DegenerateInputError("triangle index out of range")
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise DegenerateInputError("triangle repeats a vertex index")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "triangles", _frozen(t))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """``(m, 3, 3)`` array of triangle corner positions."""
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def face_normals(self) -> np.ndarray:
        c = self.corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)

    def surface_area(self) -> float:
        return float(self.triangle_areas().sum())

    def aabb(self) -> Aabb:
        if not self.n_vertices:
            raise DegenerateInputError("empty mesh has no bounding box")
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def flipped(self) -> TriMesh:
        return TriMesh(self.vertices, self.triangles[:, ::-1])

    def transformed(self, transform: Transform) -> TriMesh:
        return TriMesh(transform.apply(self.vertices), self.triangles)

    def with_vertices(self, vertices) -> TriMesh:
        return TriMesh(vertices, self.triangles)

    def compact(self) -> TriMesh:
        """Drop vertices not referenced by any triangle, preserving order."""
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        if used.all():
            return self
        remap = np.cumsum(used) - 1
        return TriMesh(self.vertices[used], remap[self.triangles])


@dataclass(frozen=True)
class Aabb:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def overlaps(self, other: Aabb, tol: float = 0.0) -> bool:
        return bool(np.all(self.lo <= other.hi + tol) and np.all(other.lo <= self.hi + tol))

    def overlap_volume(self, other: Aabb) -> float:
        d = np.minimum(self.hi, other.hi) - np.maximum(self.lo, other.lo)
        return float(np.prod(np.clip(d, 0.0, None)))


@dataclass(frozen=True)
class Transform:
    """Similarity transform ``x -> scale * rotation @ x + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        object.__setattr__(self, "scale", float(self.scale))

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return self.scale * (p @ self.rotation.T) + self.translation

    def inverse(self) -> Transform:
        rt = self.rotation.T
        return Transform(rt, -(rt @ self.translation) / self.scale, 1.0 / self.scale)

    def compose(self, other: Transform) -> Transform:
        """Transform equivalent to applying ``other`` first, then ``self``."""
        return Transform(
            self.rotation @ other.rotation,
            self.scale * (self.rotation @ other.translation) + self.translation,
            self.scale * other.scale,
        )

    def is_identity(self, tol: float = 1e-12) -> bool:
        return (
            np.allclose(self.rotation, np.eye(3), atol=tol, rtol=0)
            and np.allclose(self.translation, 0, atol=tol, rtol=0)
            and abs(self.scale - 1.0) <= tol
        )


def signed_volume(mesh: TriMesh) -> float:
    """Enclosed volume from the divergence theorem; positive for outward winding."""
    if not mesh.n_triangles:
        return 0.0
    c = mesh.corners()
    # center first: keeps the sum well conditioned for meshes far from origin
    c = c - mesh.vertices.mean(axis=0)
    return float(np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0)


def normalize(mesh: TriMesh) -> tuple[TriMesh, Transform]:
    """Center the bounding box at the origin and scale its longest side to 1.

    Returns the normalized mesh and the transform that maps normalized
    coordinates back to the original frame.
    """
    if not mesh.n_vertices:
        raise DegenerateInputError("cannot normalize an empty mesh")
    box = mesh.aabb()
    side = float(box.extent.max())
    if side <= 0 or not np.isfinite(side):
        raise DegenerateInputError("mesh has zero extent")
    back = Transform(np.eye(3), box.center, side)
    return mesh.transformed(back.inverse()), back


def _undirected_edges(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Directed half-edges ``(3m, 2)`` and their undirected edge id."""
    he = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    key = np.sort(he, axis=1)
    _, edge_id = np.unique(key, axis=0, return_inverse=True)
    return he, edge_id.ravel()


def triangle_components(mesh: TriMesh) -> np.ndarray:
    """Component label per triangle, connectivity through shared edges."""
    m = mesh.n_triangles
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    _, edge_id = _undirected_edges(mesh.triangles)
    tri = np.repeat(np.arange(m), 3)
    n_edges = int(edge_id.max()) + 1
    # bipartite triangle/edge incidence graph
    g = sparse.coo_matrix((np.ones(3 * m), (tri, m + edge_id)), shape=(m + n_edges, m + n_edges))
    _, labels = _graph_components(g, directed=False)
    labels = labels[:m]
    # relabel in order of first appearance so output order is stable
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(len(order), dtype=np.int64)
    relabel[order] = np.arange(len(order))
    return relabel[np.searchsorted(np.unique(labels), labels)]


def submesh(mesh: TriMesh, triangle_mask) -> TriMesh:
    return TriMesh(mesh.vertices, mesh.triangles[triangle_mask]).compact()


def connected_components(mesh: TriMesh) -> list[TriMesh]:
    labels = triangle_components(mesh)
    if len(labels) == 0:
        return []
    return [submesh(mesh, labels == k) for k in range(int(labels.max()) + 1)]


@dataclass(frozen=True)
class ValidationReport:
    watertight: bool
    orientable: bool
    boundary_edges: int
    degenerate_triangles: int

    @property
    def ok(self) -> bool:
        return self.watertight and self.orientable


def validate(mesh: TriMesh) -> ValidationReport:
    if not mesh.n_triangles:
        return ValidationReport(False, False, 0, 0)
    he, edge_id = _undirected_edges(mesh.triangles)
    counts = np.bincount(edge_id)
    boundary = int(np.count_nonzero(counts != 2))
    # consistent winding <=> no directed half-edge is used twice
    _, he_counts = np.unique(he, axis=0, return_counts=True)
    orientable = bool(np.all(he_counts == 1))
    degenerate = int(np.count_nonzero(mesh.triangle_areas() < DEGENERATE_AREA))
    return ValidationReport(boundary == 0, orientable, boundary, degenerate)


def orient_outward(mesh: TriMesh) -> TriMesh:
    """Flip all windings when the enclosed volume comes out negative."""
    return mesh.flipped() if signed_volume(mesh) < 0 else mesh


def weld(mesh: TriMesh, tol: float = 1e-7) -> TriMesh:
    """Merge vertices closer than ``tol`` and drop triangles that collapse.

    Clusters are transitive: chains of close points collapse to the lowest
    index in the chain.
    """
    v = mesh.vertices
    if not len(v):
        return mesh
    from scipy.spatial import cKDTree

    tree = cKDTree(v)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return _drop_collapsed(mesh.vertices, mesh.triangles)
    n = len(v)
    g = sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = _graph_components(g, directed=False)
    # representative = lowest original index in each cluster
    rep = np.full(labels.max() + 1, n, dtype=np.int64)
    np.minimum.at(rep, labels, np.arange(n))
    tris = rep[labels][mesh.triangles]
    return _drop_collapsed(v, tris)


def _drop_collapsed(vertices, triangles) -> TriMesh:
    t = np.asarray(triangles)
    keep = (t[:, 0] != t[:, 1]) & (t[:, 1] != t[:, 2]) & (t[:, 0] != t[:, 2])
    return TriMesh(vertices, t[keep]).compact()


def drop_degenerate(mesh: TriMesh, min_area: float = DEGENERATE_AREA) -> TriMesh:
    keep = mesh.triangle_areas() >= min_area
    if keep.all():
        return mesh
    return TriMesh(mesh.vertices, mesh.triangles[keep]).compact()


def concatenate(meshes) -> TriMesh:
    verts, tris, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += m.n_vertices
    if not verts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.vstack(verts), np.vstack(tris))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation matrix (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
