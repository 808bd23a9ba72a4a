import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hullcut import shapes
from hullcut.mesh import normalize, random_rotation, signed_volume, validate
from hullcut.sdf import remesh
from hullcut.visibility import (
    VisibilitySet,
    build_cage,
    cage_clears_hull,
    cage_contains_vertices,
    compute_visibility_edges,
    compute_visibility_edges_brute,
    decomposition_visibility_concavity,
    principal_frame,
    visibility_concavity,
)


def _offset_box_volume(eps):
    # unit cube grown by eps: slabs, quarter cylinders on the edges, sphere octants at corners
    return 1 + 6 * eps + 3 * math.pi * eps ** 2 + 4 / 3 * math.pi * eps ** 3


def test_cube_cage_volume(cube):
    cage = build_cage(cube, 0.03)
    assert validate(cage.mesh).watertight
    assert signed_volume(cage.mesh) == pytest.approx(_offset_box_volume(0.03), rel=0.05)


def test_small_epsilon_cage_hugs_mesh(cube):
    cage = build_cage(cube, 0.004, resolution=200)
    assert signed_volume(cage.mesh) == pytest.approx(1.0, rel=0.03)


def test_cage_contains_all_vertices(l_norm):
    assert cage_contains_vertices(l_norm, build_cage(l_norm))


def test_epsilon_must_be_positive(cube):
    with pytest.raises(ValueError):
        build_cage(cube, 0.0)


@pytest.mark.parametrize("mesh", [shapes.cube(), shapes.tetrahedron(), shapes.icosahedron()])
def test_convex_meshes_have_no_edges(mesh):
    m = normalize(mesh)[0]
    assert len(compute_visibility_edges(m, build_cage(m))) == 0


def test_remeshed_sphere_has_no_edges():
    m = remesh(normalize(shapes.icosphere(3))[0], 24)
    cage = build_cage(m, 0.03, 60)
    assert cage_clears_hull(m, cage)
    assert len(compute_visibility_edges(m, cage)) == 0


def test_l_prism_edges_cross_the_notch(l_norm):
    cage = build_cage(l_norm)
    edges = compute_visibility_edges(l_norm, cage)
    # frozen from the brute-force oracle: both notch diagonals and the two skew chords
    assert edges.pairs.tolist() == [[2, 4], [2, 10], [4, 8], [8, 10]]
    assert np.allclose(edges.lengths, [math.sqrt(0.5), math.sqrt(0.75), math.sqrt(0.75), math.sqrt(0.5)])
    v = l_norm.vertices
    mid = 0.5 * (v[edges.pairs[:, 0]] + v[edges.pairs[:, 1]])
    assert np.all((mid[:, 0] > 0) & (mid[:, 1] > 0))


def test_l_prism_matches_brute_force(l_norm):
    cage = build_cage(l_norm)
    fast = compute_visibility_edges(l_norm, cage)
    slow = compute_visibility_edges_brute(l_norm, cage)
    assert np.array_equal(fast.pairs, slow.pairs)
    assert visibility_concavity(fast) == pytest.approx(slow.total_length, abs=1e-12)


def test_wider_cage_filters_edges(l_norm):
    few = compute_visibility_edges_brute(l_norm, build_cage(l_norm, 0.3))
    many = compute_visibility_edges_brute(l_norm, build_cage(l_norm, 0.03))
    assert len(few) < len(many)


def test_visibility_set_sums_and_sorts():
    s = VisibilitySet(np.array([[3, 4], [0, 1]]), np.array([0.5, 0.3]))
    assert s.pairs.tolist() == [[0, 1], [3, 4]]
    assert visibility_concavity(s) == pytest.approx(0.8)
    assert visibility_concavity(VisibilitySet.empty()) == 0.0
    assert decomposition_visibility_concavity([s, VisibilitySet.empty()]) == pytest.approx(0.8)


def test_visibility_set_rejects_bad_pairs():
    with pytest.raises(ValueError):
        VisibilitySet(np.array([[1, 0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        VisibilitySet(np.array([[0, 1], [0, 1]]), np.array([1.0, 1.0]))


def test_principal_frame_is_a_rotation():
    c, axes = principal_frame(shapes.tilted(shapes.u_prism()).vertices)
    assert np.allclose(axes @ axes.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(axes) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def small_l():
    return remesh(normalize(shapes.l_prism())[0], 14)


@settings(max_examples=4, deadline=None)
@given(st.integers(0, 10_000))
def test_edges_rotate_with_the_mesh(small_l, seed):
    R = random_rotation(np.random.default_rng(seed))
    rot = small_l.with_vertices(small_l.vertices @ R.T)
    a = compute_visibility_edges(small_l, build_cage(small_l, 0.03, 40))
    b = compute_visibility_edges(rot, build_cage(rot, 0.03, 40))
    assert np.array_equal(a.pairs, b.pairs)
    assert np.allclose(a.lengths, b.lengths, atol=1e-12)
