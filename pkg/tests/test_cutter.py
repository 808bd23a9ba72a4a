import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hullcut import shapes
from hullcut.cutter import SNAP_TOL, cut_by_plane, split_and_separate
from hullcut.exceptions import DegenerateCutError, EmptySideError
from hullcut.mesh import signed_volume, validate
from hullcut.planes import CuttingPlane
from hullcut.triangulate import plane_frame, signed_area, triangulate_loops


def _euler(mesh):
    e = {tuple(sorted(p)) for t in mesh.triangles.tolist() for p in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}
    return mesh.n_vertices - len(e) + mesh.n_triangles


def test_cube_halves(cube):
    res = cut_by_plane(cube, CuttingPlane([1, 0, 0], 0.5))
    assert signed_volume(res.negative) == pytest.approx(0.5, abs=1e-9)
    assert signed_volume(res.positive) == pytest.approx(0.5, abs=1e-9)
    assert validate(res.negative).ok and validate(res.positive).ok
    assert res.cap_area == pytest.approx(1.0)
    assert res.negative.vertices[:, 0].max() <= 0.5 + 1e-12
    assert len(split_and_separate(cube, CuttingPlane([1, 0, 0], 0.5))) == 2


def test_plane_missing_the_mesh(cube):
    with pytest.raises(EmptySideError):
        cut_by_plane(cube, CuttingPlane([1, 0, 0], 2.0))


def test_plane_within_snap_tolerance_of_a_face(cube):
    with pytest.raises(EmptySideError):
        cut_by_plane(cube, CuttingPlane([1, 0, 0], 0.5 * SNAP_TOL))


def test_l_prism_reflex_plane(l_prism):
    res = cut_by_plane(l_prism, CuttingPlane([1, 0, 0], 1.0))
    assert signed_volume(res.negative) == pytest.approx(2.0, abs=1e-9)
    assert signed_volume(res.positive) == pytest.approx(1.0, abs=1e-9)
    assert validate(res.negative).ok and validate(res.positive).ok


def test_sources_track_original_vertices(cube):
    res = cut_by_plane(cube, CuttingPlane([1, 0, 0], 0.25))
    src = res.negative_source
    assert np.count_nonzero(src >= 0) == 4
    # one new vertex per crossed edge: 4 box edges and 4 face diagonals
    assert np.count_nonzero(src < 0) == 8
    assert np.allclose(res.negative.vertices[src < 0, 0], 0.25)
    assert np.allclose(res.negative.vertices[src >= 0], cube.vertices[src[src >= 0]])


def test_u_prism_across_prongs():
    pieces = split_and_separate(shapes.u_prism(), CuttingPlane([0, 1, 0], 1.5))
    assert sorted(s for s, _ in pieces) == [-1, 1, 1]
    assert all(validate(m).ok for _, m in pieces)
    assert sum(signed_volume(m) for _, m in pieces) == pytest.approx(signed_volume(shapes.u_prism()))


def test_torus_through_hole_axis():
    t = shapes.torus(n_major=24, n_minor=12)
    pieces = split_and_separate(t, CuttingPlane([1, 0.013, 0], 0.0))
    assert len(pieces) == 2
    for _, m in pieces:
        assert validate(m).ok
        assert _euler(m) == 2  # each half is a topological ball


def test_torus_cut_along_equator_has_annular_caps():
    t = shapes.torus(n_major=24, n_minor=12)
    res = cut_by_plane(t, CuttingPlane([0, 0, 1], 0.01))
    assert len(res.negative_loops) == 2  # outer ring and hole
    assert validate(res.negative).ok and validate(res.positive).ok
    assert signed_volume(res.negative) + signed_volume(res.positive) == pytest.approx(signed_volume(t), rel=1e-9)


def _random_cut(mesh, seed):
    rng = np.random.default_rng(seed)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    d = mesh.vertices @ n
    return CuttingPlane(n, float(rng.uniform(d.min(), d.max())))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["l", "u", "t", "torus", "ico"]), st.integers(0, 2**31))
def test_random_cuts_conserve_volume(name, seed):
    mesh = {"l": shapes.l_prism(), "u": shapes.u_prism(), "t": shapes.t_prism(),
            "torus": shapes.torus(n_major=12, n_minor=8), "ico": shapes.icosphere(1)}[name]
    plane = _random_cut(mesh, seed)
    try:
        pieces = split_and_separate(mesh, plane)
    except (EmptySideError, DegenerateCutError):
        assume(False)
    vol = signed_volume(mesh)
    assert abs(sum(signed_volume(m) for _, m in pieces) - vol) <= 1e-9 * vol
    for side, m in pieces:
        assert validate(m).watertight
        assert np.all(side * plane.signed_distance(m.vertices) >= -SNAP_TOL)


def test_triangulate_square_with_hole():
    outer = [(0, 0), (4, 0), (4, 4), (0, 4)]
    hole = [(1, 1), (1, 3), (3, 3), (3, 1)]  # clockwise
    pos = np.array(outer + hole, dtype=float)
    tris = triangulate_loops([[0, 1, 2, 3], [4, 5, 6, 7]], pos)
    area = sum(signed_area(pos[t]) for t in tris)
    assert area == pytest.approx(12.0)
    assert all(signed_area(pos[t]) > 0 for t in tris)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(0, 2**31))
def test_triangulate_star_polygons(n, seed):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    gaps = np.append(np.diff(ang), 2 * np.pi - ang[-1] + ang[0])
    # gaps below pi keep the origin inside, so the angular order is counter-clockwise
    assume(gaps.min() > 1e-3 and gaps.max() < np.pi - 1e-3)
    r = rng.uniform(0.3, 1.0, n)
    pos = np.c_[r * np.cos(ang), r * np.sin(ang)]
    tris = triangulate_loops([list(range(n))], pos)
    assert len(tris) == n - 2
    assert sum(signed_area(pos[t]) for t in tris) == pytest.approx(signed_area(pos), rel=1e-9)


def test_hole_without_boundary_is_rejected():
    pos = np.array([(0, 0), (0, 1), (1, 1), (1, 0)], dtype=float)
    with pytest.raises(DegenerateCutError):
        triangulate_loops([[0, 1, 2, 3]], pos)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_plane_frame_is_right_handed(v):
    n = np.asarray(v)
    assume(np.linalg.norm(n) > 1e-3)
    n = n / np.linalg.norm(n)
    e1, e2 = plane_frame(n)
    assert np.allclose(np.cross(e1, e2), n, atol=1e-12)
    assert abs(e1 @ n) < 1e-12 and abs(e2 @ n) < 1e-12
