"""Approximate convex decomposition of closed triangle meshes.

The decomposition cuts a mesh with planes chosen to separate its visibility
edges (vertex pairs that see each other around the outside of the shape)
until every piece is nearly convex, then returns the convex hulls of the
pieces.
"""

import numba as _numba

# prefer OpenMP over an outdated system TBB, which numba would warn about
_numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .concavity import ConcavityScore, ConvexHull, collision_concavity, convex_hull, evaluate_decomposition  # noqa: E402
from .cutter import CutResult, cut_by_plane, split_and_separate  # noqa: E402
from .decomposer import DecompConfig, Decomposition, Part, decompose, rotation_test  # noqa: E402
from .estimator import ConvexDecomposition, check_mesh, check_points  # noqa: E402
from .exceptions import HullcutError, MeshFormatError, ValidationError  # noqa: E402
from .io import load_mesh, save_decomposition, save_mesh  # noqa: E402
from .mesh import Aabb, Transform, TriMesh, connected_components, normalize, signed_volume, validate  # noqa: E402
from .planes import CuttingPlane, plane_value, select_best_plane  # noqa: E402
from .sdf import build_sdf, extract_isosurface, remesh  # noqa: E402
from .visibility import VisibilitySet, build_cage, compute_visibility_edges, visibility_concavity  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "Aabb", "ConcavityScore", "ConvexDecomposition", "ConvexHull", "CutResult", "CuttingPlane",
    "DecompConfig", "Decomposition", "HullcutError", "MeshFormatError", "Part", "Transform", "TriMesh",
    "ValidationError", "VisibilitySet", "build_cage", "build_sdf", "check_mesh", "check_points",
    "collision_concavity", "compute_visibility_edges", "connected_components", "convex_hull",
    "cut_by_plane", "decompose", "evaluate_decomposition", "extract_isosurface", "load_mesh",
    "normalize", "plane_value", "remesh", "rotation_test", "save_decomposition", "save_mesh",
    "select_best_plane", "signed_volume", "split_and_separate", "validate", "visibility_concavity",
]
