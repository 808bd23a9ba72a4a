"""Closed test shapes: boxes, Platonic solids, spheres, extruded polygons, tori."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh, concatenate, orient_outward
from .triangulate import signed_area, triangulate_loops

_BOX_TRIS = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # z = lo
        [4, 5, 6], [4, 6, 7],  # z = hi
        [0, 1, 5], [0, 5, 4],  # y = lo
        [2, 3, 7], [2, 7, 6],  # y = hi
        [1, 2, 6], [1, 6, 5],  # x = hi
        [0, 4, 7], [0, 7, 3],  # x = lo
    ]
)


def box(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriMesh:
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    v = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ],
        dtype=np.float64,
    )
    return TriMesh(v, _BOX_TRIS)


def cube(size: float = 1.0) -> TriMesh:
    """Axis-aligned cube ``[0, size]^3``."""
    return box((0, 0, 0), (size, size, size))


def tetrahedron() -> TriMesh:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64)
    t = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return orient_outward(TriMesh(v, t))


def icosahedron() -> TriMesh:
    p = (1 + 5 ** 0.5) / 2
    v = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=np.float64,
    )
    t = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return orient_outward(TriMesh(v / np.linalg.norm(v[0]), t))


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    mesh = icosahedron()
    v = list(mesh.vertices)
    tris = mesh.triangles
    for _ in range(subdivisions):
        cache: dict = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = v[a] + v[b]
                v.append(m / np.linalg.norm(m))
                cache[key] = len(v) - 1
            return cache[key]

        new = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        tris = np.array(new)
    return TriMesh(np.array(v) * radius, tris)


def extrude(polygon, depth: float = 1.0) -> TriMesh:
    """Prism from a simple 2D polygon extruded along +z from 0 to ``depth``."""
    poly = np.asarray(polygon, dtype=np.float64)
    if signed_area(poly) < 0:
        poly = poly[::-1]
    n = len(poly)
    cap = triangulate_loops([list(range(n))], poly)
    v = np.vstack([np.c_[poly, np.zeros(n)], np.c_[poly, np.full(n, depth)]])
    tris = [cap[:, ::-1], cap + n]
    for i in range(n):
        j = (i + 1) % n
        tris.append(np.array([[i, j, j + n], [i, j + n, i + n]]))
    return TriMesh(v, np.vstack(tris))


L_POLYGON = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
U_POLYGON = [(0, 0), (3, 0), (3, 2), (2, 2), (2, 1), (1, 1), (1, 2), (0, 2)]
T_POLYGON = [(1, 0), (2, 0), (2, 2), (3, 2), (3, 3), (0, 3), (0, 2), (1, 2)]


def l_prism(depth: float = 1.0) -> TriMesh:
    """L-shaped prism: area-3 L polygon extruded to ``depth`` (volume ``3 * depth``)."""
    return extrude(L_POLYGON, depth)


def u_prism(depth: float = 1.0) -> TriMesh:
    return extrude(U_POLYGON, depth)


def t_prism(depth: float = 1.0) -> TriMesh:
    return extrude(T_POLYGON, depth)


def tilted(mesh: TriMesh, seed: int = 7) -> TriMesh:
    """Copy of ``mesh`` under a fixed pseudo-random rotation, so no feature is axis aligned."""
    from .mesh import random_rotation

    R = random_rotation(np.random.default_rng(seed))
    return mesh.with_vertices(mesh.vertices @ R.T)


def torus(major: float = 1.0, minor: float = 0.35, n_major: int = 24, n_minor: int = 12) -> TriMesh:
    u = np.arange(n_major) * 2 * np.pi / n_major
    w = np.arange(n_minor) * 2 * np.pi / n_minor
    uu, ww = np.meshgrid(u, w, indexing="ij")
    r = major + minor * np.cos(ww)
    v = np.stack([r * np.cos(uu), r * np.sin(uu), minor * np.sin(ww)], axis=-1).reshape(-1, 3)
    idx = np.arange(n_major * n_minor).reshape(n_major, n_minor)
    a = idx
    b = np.roll(idx, -1, axis=0)
    c = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    t = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    return orient_outward(TriMesh(v, t))


def two_cubes(gap: float = 1.0) -> TriMesh:
    return concatenate([cube(), box((1 + gap, 0, 0), (2 + gap, 1, 1))])
