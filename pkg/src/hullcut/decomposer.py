"""Greedy cutting-plane decomposition."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .concavity import (
    COMBINE_MODES,
    ConcavityScore,
    ConvexHull,
    collision_concavity,
    evaluate_decomposition,
    padded_convex_hull,
)
from .cutter import split_and_separate
from .exceptions import DegenerateCutError, DegenerateHullError, EmptySideError, NoUsefulPlaneError, ValidationError
from .mesh import Transform, TriMesh, normalize, random_rotation, signed_volume, validate
from .planes import CuttingPlane, select_best_plane
from .sdf import remesh
from .visibility import VisibilitySet, build_cage, compute_visibility_edges

log = logging.getLogger(__name__)

PICK_METRICS = ("collision", "visibility")
MAX_RETRIES = 8
# a cut that leaves a piece smaller than this share of the parent is a sliver
SLIVER_FRACTION = 1e-3

THRESHOLD = "threshold"
NO_EDGES = "no-edges"
NO_PLANE = "no-useful-plane"
RETRIES = "retries-exhausted"
PART_CAP = "part-cap"


@dataclass(frozen=True)
class DecompConfig:
    epsilon: float = 0.03
    k: int = 1024
    concavity_threshold: float = 0.05
    max_parts: int = 128
    seed: int = 0
    remesh_resolution: int = 100
    remesh_enabled: bool = True
    samples: int = 2048
    part_pick_metric: str = "collision"
    max_flat_planes: int = 8
    use_flat_planes: bool = True
    concavity_combine: str = "min"
    # grid resolution of the offset cage, in cells per unit of the normalized frame
    cage_resolution: int = 100

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be > 0")
        if int(self.k) < 1:
            raise ValidationError("k must be >= 1")
        if not self.concavity_threshold >= 0:
            raise ValidationError("concavity threshold must be >= 0")
        if int(self.max_parts) < 1:
            raise ValidationError("max_parts must be >= 1")
        if int(self.samples) < 0:
            raise ValidationError("samples must be >= 0")
        if int(self.max_flat_planes) < 0:
            raise ValidationError("max_flat_planes must be >= 0")
        if self.part_pick_metric not in PICK_METRICS:
            raise ValidationError(f"part_pick_metric must be one of {PICK_METRICS}")
        if self.concavity_combine not in COMBINE_MODES:
            raise ValidationError(f"concavity_combine must be one of {COMBINE_MODES}")
        for name in ("remesh_resolution", "cage_resolution"):
            if not 8 <= int(getattr(self, name)) <= 512:
                raise ValidationError(f"{name} must be in [8, 512]")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(eq=False)
class Part:
    """One piece of the decomposition, in the normalized frame.

    ``lineage`` lists ``(cut_index, side)`` for every cut this part descends
    from, side being -1 or +1.
    """

    id: int
    mesh: TriMesh
    concavity: ConcavityScore
    hull: ConvexHull
    lineage: tuple = ()
    edges: VisibilitySet | None = None
    terminal: bool = False
    reason: str | None = None

    @property
    def visibility_concavity(self) -> float | None:
        return None if self.edges is None else self.edges.total_length


@dataclass(frozen=True)
class CutRecord:
    step: int
    part: int
    plane: CuttingPlane
    value: float
    score: float
    candidates: int
    attempts: int
    parent_visibility: float
    children: tuple
    sides: tuple

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "part": self.part,
            "plane": self.plane.as_dict(),
            "value": self.value,
            "score": self.score,
            "candidates": self.candidates,
            "attempts": self.attempts,
            "parent_visibility_concavity": self.parent_visibility,
            "children": list(self.children),
            "sides": list(self.sides),
        }


@dataclass(eq=False)
class Decomposition:
    parts: list
    cuts: list
    config: DecompConfig
    mesh: TriMesh  # preprocessed input, normalized frame
    transform: Transform  # normalized -> original coordinates
    timings: dict = field(default_factory=dict)
    # every part ever created, by id, including parts that were cut again
    history: dict = field(default_factory=dict)
    _evaluation: ConcavityScore | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.parts)

    @property
    def hulls(self) -> list:
        return [p.hull for p in self.parts]

    def world_hulls(self) -> list:
        """Hull meshes mapped back to the input's coordinates."""
        return [p.hull.mesh.transformed(self.transform) for p in self.parts]

    def evaluation(self) -> ConcavityScore:
        if self._evaluation is None:
            t = time.perf_counter()
            self._evaluation = evaluate_decomposition(
                self.mesh, self.hulls, self.config.samples, self.config.seed, self.config.concavity_combine)
            self.timings["evaluate"] = time.perf_counter() - t
        return self._evaluation

    def descendants(self, cut_index: int, side: int) -> list:
        return [p for p in self.parts if (cut_index, side) in p.lineage]


class _Timer:
    def __init__(self, timings: dict, key: str):
        self.timings, self.key = timings, key

    def __enter__(self):
        self.t = time.perf_counter()

    def __exit__(self, *exc):
        self.timings[self.key] = self.timings.get(self.key, 0.0) + time.perf_counter() - self.t


def preprocess(mesh: TriMesh, config: DecompConfig) -> tuple:
    """Normalize, optionally remesh, and check the mesh is closed and oriented."""
    norm, back = normalize(mesh)
    if config.remesh_enabled:
        norm = remesh(norm, config.remesh_resolution)
    rep = validate(norm)
    if not (rep.watertight and rep.orientable):
        raise ValidationError(
            f"mesh is not closed and consistently oriented ({rep.boundary_edges} boundary edges); "
            "enable remeshing")
    return norm, back


def decompose(mesh: TriMesh, config: DecompConfig | None = None) -> Decomposition:
    config = config or DecompConfig()
    timings: dict = {}
    with _Timer(timings, "preprocess"):
        norm, back = preprocess(mesh, config)
    return decompose_normalized(norm, config, back, timings)


def _make_part(pid: int, mesh: TriMesh, lineage: tuple, config: DecompConfig) -> Part:
    hull = padded_convex_hull(mesh.vertices)
    score = collision_concavity(mesh, config.samples, config.seed, config.concavity_combine, hull=hull)
    return Part(pid, mesh, score, hull, lineage)


def _edges(part: Part, config: DecompConfig) -> VisibilitySet:
    if part.edges is None:
        cage = build_cage(part.mesh, config.epsilon, config.cage_resolution)
        part.edges = compute_visibility_edges(part.mesh, cage)
    return part.edges


def _pick_score(part: Part, config: DecompConfig) -> float:
    if config.part_pick_metric == "visibility":
        return _edges(part, config).total_length
    return part.concavity.combined


def _try_cuts(part: Part, ranked) -> tuple:
    """First usable split among the best candidate and up to 8 runners-up.

    A split is usable when every piece is closed and none is a sliver.
    """
    tried = 0
    floor = SLIVER_FRACTION * abs(signed_volume(part.mesh))
    for plane, score in zip(ranked.planes, ranked.scores):
        if score <= 0 or tried > MAX_RETRIES:
            break
        tried += 1
        try:
            pieces = split_and_separate(part.mesh, plane)
        except (DegenerateCutError, EmptySideError) as exc:
            log.debug("part %d: discarding plane (%s)", part.id, exc)
            continue
        if not all(validate(m).watertight for _, m in pieces):
            continue
        if min(abs(signed_volume(m)) for _, m in pieces) < floor:
            log.debug("part %d: discarding plane (sliver)", part.id)
            continue
        return plane, pieces, tried
    return None, None, tried


def decompose_normalized(mesh: TriMesh, config: DecompConfig, transform: Transform | None = None,
                         timings: dict | None = None) -> Decomposition:
    """Run the greedy loop on a mesh that is already normalized and closed."""
    timings = {} if timings is None else timings
    transform = transform or Transform()
    t0 = time.perf_counter()
    parts = [_make_part(0, mesh, (), config)]
    history = {0: parts[0]}
    next_id = 1
    cuts = []
    while True:
        open_parts = [p for p in parts if not p.terminal]
        if not open_parts:
            break
        # highest score first, earliest id on ties
        part = max(open_parts, key=lambda p: (_pick_score(p, config), -p.id))
        with _Timer(timings, "visibility"):
            edges = _edges(part, config)
        if not len(edges):
            part.terminal, part.reason = True, NO_EDGES
            continue
        if part.concavity.combined <= config.concavity_threshold:
            part.terminal, part.reason = True, THRESHOLD
            continue
        if len(parts) >= config.max_parts:
            _cap(parts)
            break
        with _Timer(timings, "plane_search"):
            try:
                _, ranked = select_best_plane(part.mesh, edges, config.k, config.seed,
                                              config.max_flat_planes, config.use_flat_planes)
            except NoUsefulPlaneError:
                part.terminal, part.reason = True, NO_PLANE
                continue
        with _Timer(timings, "cut"):
            plane, pieces, tried = _try_cuts(part, ranked)
        if plane is None:
            part.terminal, part.reason = True, RETRIES
            continue
        if len(parts) - 1 + len(pieces) > config.max_parts:
            _cap(parts)
            break
        cut_index = len(cuts)
        children, sides = [], []
        with _Timer(timings, "concavity"):
            for side, m in pieces:
                try:
                    child = _make_part(next_id, m, part.lineage + ((cut_index, side),), config)
                except DegenerateHullError:
                    continue
                children.append(child)
                sides.append(side)
                history[child.id] = child
                next_id += 1
        idx = parts.index(part)
        parts[idx:idx + 1] = children
        rank = int(np.flatnonzero([p is plane for p in ranked.planes])[0])
        cuts.append(CutRecord(
            step=len(cuts), part=part.id, plane=plane, value=float(ranked.values[rank]),
            score=float(ranked.scores[rank]), candidates=len(ranked), attempts=tried,
            parent_visibility=edges.total_length, children=tuple(c.id for c in children),
            sides=tuple(sides)))
        log.info("cut %d: part %d -> %s (Q=%.6g, %d candidates)", cut_index, part.id,
                 [c.id for c in children], cuts[-1].value, len(ranked))
    parts.sort(key=lambda p: p.id)
    timings["decompose"] = time.perf_counter() - t0
    return Decomposition(parts, cuts, config, mesh, transform, timings, history)


def _cap(parts: list) -> None:
    for p in parts:
        if not p.terminal:
            p.terminal, p.reason = True, PART_CAP


@dataclass(frozen=True)
class RotationRun:
    rotation: np.ndarray
    parts: int
    concavity: float
    decomposition: Decomposition | None = field(default=None, repr=False, compare=False)


def rotation_test(mesh: TriMesh, config: DecompConfig | None = None, n_rotations: int = 8,
                  rotation_seed=0, preprocessed: bool = False) -> list:
    """Decompose randomly rotated copies of a preprocessed mesh.

    The rotation is applied to the preprocessed vertices about the origin, so
    vertex and triangle order are the same in every run. The first entry is
    the unrotated reference run.
    """
    config = config or DecompConfig()
    if int(n_rotations) < 1:
        raise ValidationError("n_rotations must be >= 1")
    base = mesh if preprocessed else preprocess(mesh, config)[0]
    rng = np.random.default_rng(rotation_seed)
    rotations = [np.eye(3)] + [random_rotation(rng) for _ in range(int(n_rotations))]
    runs = []
    for R in rotations:
        rotated = base.with_vertices(base.vertices @ R.T)
        d = decompose_normalized(rotated, config)
        runs.append(RotationRun(R, len(d), d.evaluation().combined, d))
    return runs
