import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hullcut import shapes
from hullcut.bvh import (
    build_index,
    closest_distance,
    closest_distance_brute,
    points_inside,
    points_inside_vote,
    segment_intersects,
    segments_intersect,
    segments_intersect_brute,
)
from hullcut.exceptions import DegenerateInputError
from hullcut.mesh import TriMesh


def _moller_trumbore(mesh, a, b):
    """Independent oracle: parameters t in [0, 1] where the segment meets a triangle."""
    c = mesh.corners()
    d = b - a
    e1, e2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) > 1e-14
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = a - c[:, 0]
    u = np.einsum("ij,ij->i", s, p) * inv
    q = np.cross(s, e1)
    v = (q @ d) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)
    return t[hit]


def test_root_box_equals_mesh_box(cube):
    lo, hi = build_index(cube).root_box()
    assert np.allclose(lo, 0) and np.allclose(hi, 1)


def test_single_triangle_is_one_leaf():
    idx = build_index(TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]]))
    assert idx.n_nodes == 1 and idx.n_triangles == 1


def test_empty_mesh_rejected():
    with pytest.raises(DegenerateInputError):
        build_index(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)))


def test_segment_through_cube(cube):
    idx = build_index(cube)
    assert segment_intersects(idx, [-1, 0.5, 0.5], [2, 0.5, 0.5])
    assert not segment_intersects(idx, [3, 3, 3], [4, 4, 4])


def test_interior_chord_with_clipped_ends(cube):
    idx = build_index(cube)
    a, b = [0.5, 0.5, 0.0], [0.5, 0.5, 1.0]
    assert not segment_intersects(idx, a, b, 1e-4, 1 - 1e-4)
    assert not segments_intersect_brute(cube, [a], [b], 1e-4, 1 - 1e-4)[0]
    assert segment_intersects(idx, a, b, 0.0, 1.0)


def test_bad_range(cube):
    with pytest.raises(ValueError):
        segment_intersects(build_index(cube), [0, 0, 0], [1, 1, 1], 0.6, 0.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_segments_match_independent_oracle(seed):
    rng = np.random.default_rng(seed)
    mesh = shapes.torus(n_major=10, n_minor=6)
    A = rng.uniform(-1.6, 1.6, size=(200, 3))
    B = rng.uniform(-1.6, 1.6, size=(200, 3))
    got = segments_intersect(build_index(mesh), A, B)
    expected = np.array([len(_moller_trumbore(mesh, a, b)) > 0 for a, b in zip(A, B)])
    assert np.array_equal(got, expected)
    assert np.array_equal(got, segments_intersect_brute(mesh, A, B))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000), st.floats(0.0, 0.4), st.floats(0.6, 1.0))
def test_tree_matches_brute_with_clipping(seed, t0, t1):
    rng = np.random.default_rng(seed)
    mesh = shapes.icosphere(2)
    v = mesh.vertices
    i, j = rng.integers(0, len(v), size=(2, 300))
    keep = i != j
    A, B = v[i[keep]], v[j[keep]]
    assert np.array_equal(segments_intersect(build_index(mesh), A, B, t0, t1),
                          segments_intersect_brute(mesh, A, B, t0, t1))


def test_closest_distance_to_box_is_analytic(cube):
    rng = np.random.default_rng(3)
    p = rng.uniform(-1, 2, size=(500, 3))
    outside = np.linalg.norm(np.maximum(0, np.maximum(-p, p - 1)), axis=1)
    inside = np.minimum(p, 1 - p).min(axis=1)
    is_in = np.all((p > 0) & (p < 1), axis=1)
    expected = np.where(is_in, inside, outside)
    assert np.allclose(closest_distance(build_index(cube), p), expected, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_closest_distance_tree_equals_brute(seed):
    mesh = shapes.torus(n_major=12, n_minor=8)
    p = np.random.default_rng(seed).uniform(-2, 2, size=(200, 3))
    assert np.allclose(closest_distance(build_index(mesh), p), closest_distance_brute(mesh, p), atol=1e-12)


def test_closest_distance_band_clamps(cube):
    d, tri = closest_distance(build_index(cube), [[5, 5, 5], [0.5, 0.5, -0.1]], max_distance=0.5,
                              return_triangle=True)
    assert d[0] == 0.5 and tri[0] == -1
    assert d[1] == pytest.approx(0.1) and tri[1] in (0, 1)


def test_inside_parity_through_vertices_and_edges(cube):
    # rays through shared edges and vertices must still count one crossing
    p = np.array([[0.5, 0.5, 0.5], [0.25, 0.25, 0.25], [0.5, 0.0, 0.0], [1.5, 0.5, 0.5], [-0.5, 1.0, 1.0]])
    for axis in range(3):
        got = points_inside(cube, p[:2], axis)
        assert got.all()
    assert not points_inside_vote(cube, p[3:]).any()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_inside_matches_sphere(seed):
    mesh = shapes.icosphere(3)
    p = np.random.default_rng(seed).uniform(-1.2, 1.2, size=(300, 3))
    r = np.linalg.norm(p, axis=1)
    clear = (r < 0.95) | (r > 1.01)
    assert np.array_equal(points_inside_vote(mesh, p[clear]), r[clear] < 0.95)
