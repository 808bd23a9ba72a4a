"""Scikit-learn style wrapper around the decomposition."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .decomposer import DecompConfig, decompose
from .exceptions import ValidationError
from .mesh import TriMesh


def check_mesh(X) -> TriMesh:
    """Coerce ``X`` to a :class:`TriMesh`.

    Accepts a ``TriMesh``, a ``(vertices, triangles)`` pair, or a mapping
    with ``vertices`` and ``triangles`` keys.
    """
    if isinstance(X, TriMesh):
        mesh = X
    else:
        if isinstance(X, dict):
            X = (X.get("vertices"), X.get("triangles"))
        try:
            v, t = X
        except (TypeError, ValueError):
            raise ValidationError("expected a TriMesh or a (vertices, triangles) pair") from None
        v = np.asarray(v, dtype=np.float64)
        t = np.asarray(t)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError(f"vertices must have shape (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3 or not np.issubdtype(t.dtype, np.integer):
            raise ValidationError("triangles must be an (m, 3) integer array")
        mesh = TriMesh(v, t)
    if not mesh.n_triangles:
        raise ValidationError("mesh has no triangles")
    if not np.isfinite(mesh.vertices).all():
        raise ValidationError("mesh has non-finite vertices")
    return mesh


def check_points(P) -> np.ndarray:
    p = np.asarray(P, dtype=np.float64)
    if p.ndim == 1 and p.shape[0] == 3:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValidationError(f"points must have shape (n, 3), got {p.shape}")
    if not np.isfinite(p).all():
        raise ValidationError("points must be finite")
    return p


class ConvexDecomposition(BaseEstimator):
    """Decompose a closed mesh into approximately convex parts.

    ``fit`` takes a mesh and stores the hulls (in the input's coordinates) in
    ``hulls_``. ``predict`` labels query points with the index of the first
    hull containing them (-1 outside all hulls), ``transform`` gives each
    point's signed distance bound to every hull, and ``score`` returns the
    negated evaluation concavity, so larger is better.
    """

    def __init__(self, epsilon=0.03, k=1024, concavity_threshold=0.05, max_parts=128, seed=0,
                 remesh_resolution=100, remesh_enabled=True, samples=2048, part_pick_metric="collision",
                 max_flat_planes=8, use_flat_planes=True, concavity_combine="min", cage_resolution=100):
        self.epsilon = epsilon
        self.k = k
        self.concavity_threshold = concavity_threshold
        self.max_parts = max_parts
        self.seed = seed
        self.remesh_resolution = remesh_resolution
        self.remesh_enabled = remesh_enabled
        self.samples = samples
        self.part_pick_metric = part_pick_metric
        self.max_flat_planes = max_flat_planes
        self.use_flat_planes = use_flat_planes
        self.concavity_combine = concavity_combine
        self.cage_resolution = cage_resolution

    def _config(self) -> DecompConfig:
        return DecompConfig(**self.get_params())

    def fit(self, X, y=None):
        mesh = check_mesh(X)
        self.decomposition_ = decompose(mesh, self._config())
        self.hulls_ = self.decomposition_.world_hulls()
        self._planes = []
        for h in self.hulls_:
            c = h.vertices[h.triangles]
            n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
            norm = np.linalg.norm(n, axis=1)
            keep = norm > 0
            n = n[keep] / norm[keep, None]
            self._planes.append((n, np.einsum("ij,ij->i", n, c[keep, 0])))
        self.n_parts_ = len(self.hulls_)
        return self

    def transform(self, X) -> np.ndarray:
        """``(n, n_parts)`` max plane distance of each point to each hull (<= 0 inside)."""
        check_is_fitted(self, "hulls_")
        p = check_points(X)
        out = np.empty((len(p), len(self._planes)))
        for k, (n, d) in enumerate(self._planes):
            out[:, k] = (p @ n.T - d).max(axis=1)
        return out

    def predict(self, X, tol: float = 1e-9) -> np.ndarray:
        dist = self.transform(X)
        inside = dist <= tol
        return np.where(inside.any(axis=1), inside.argmax(axis=1), -1)

    def score(self, X=None, y=None) -> float:
        check_is_fitted(self, "hulls_")
        return -float(self.decomposition_.evaluation().combined)
