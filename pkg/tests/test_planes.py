import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hullcut import shapes
from hullcut.exceptions import NoUsefulPlaneError
from hullcut.mesh import normalize
from hullcut.planes import (
    EDGE,
    FLAT,
    CuttingPlane,
    extract_flat_planes,
    plane_value,
    plane_value_reference,
    plane_values,
    sample_edge_planes,
    score_candidates,
    select_best_plane,
)
from hullcut.sdf import remesh
from hullcut.visibility import VisibilitySet, build_cage, compute_visibility_edges


@pytest.fixture(scope="module")
def l_setup():
    m = normalize(shapes.l_prism())[0]
    return m, compute_visibility_edges(m, build_cage(m))


def test_bisector_plane():
    v = np.array([[0.0, 0, 0], [2.0, 0, 0]])
    (p,) = sample_edge_planes(VisibilitySet.from_pairs([[0, 1]], v), v, 5, 0)
    assert np.allclose(p.normal, [1, 0, 0]) and p.offset == pytest.approx(1.0)
    assert p.kind == EDGE and p.source == (0, 1)


def test_all_edges_used_when_k_is_large(l_setup):
    m, edges = l_setup
    planes = sample_edge_planes(edges, m.vertices, 100, 0)
    assert len(planes) == len(edges)
    assert len({p.source for p in planes}) == len(edges)


def test_sampling_is_deterministic(l_setup):
    m, edges = l_setup
    a = sample_edge_planes(edges, m.vertices, 2, 11)
    b = sample_edge_planes(edges, m.vertices, 2, 11)
    assert [p.source for p in a] == [p.source for p in b]
    assert all(np.array_equal(x.normal, y.normal) and x.offset == y.offset for x, y in zip(a, b))


def test_sampling_empty_and_bad_k(l_setup):
    m, _ = l_setup
    assert sample_edge_planes(VisibilitySet.empty(), m.vertices, 4, 0) == []
    with pytest.raises(ValueError):
        sample_edge_planes(l_setup[1], m.vertices, 0, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 40))
def test_sample_survives_unrelated_edges(seed, k):
    # edges that appear or vanish only displace themselves from the sample
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(60, 3))
    ii, jj = np.triu_indices(60, 1)
    pairs = np.stack([ii, jj], 1)
    keep = rng.random(len(pairs)) < 0.5
    full = VisibilitySet.from_pairs(pairs[keep], v)
    picked = {p.source for p in sample_edge_planes(full, v, k, seed)}
    extra = VisibilitySet.from_pairs(pairs[keep | (rng.random(len(pairs)) < 0.05)], v)
    picked_extra = {p.source for p in sample_edge_planes(extra, v, k, seed)}
    added = {tuple(p) for p in extra.pairs.tolist()} - {tuple(p) for p in full.pairs.tolist()}
    assert picked_extra - picked <= added
    assert len(picked - picked_extra) == len(picked_extra - picked)


def test_flat_planes_of_cube(cube):
    planes = extract_flat_planes(cube)
    assert len(planes) == 6
    assert all(p.kind == FLAT and p.value_multiplier == 2.0 for p in planes)
    normals = np.array(sorted(map(tuple, np.round([p.normal for p in planes], 12))))
    assert np.array_equal(np.abs(normals).sum(axis=1), np.ones(6))


def test_flat_planes_of_l_prism_largest_first(l_norm):
    planes = extract_flat_planes(l_norm)
    assert len(planes) == 8
    # the two L-shaped caps (area 0.75) lead, then the two long walls (0.5)
    assert all(abs(abs(p.normal[2]) - 1) < 1e-12 for p in planes[:2])
    assert {tuple(np.round(p.normal, 12)) for p in planes[2:4]} == {(-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)}


def test_flat_planes_respect_limit(l_norm):
    assert len(extract_flat_planes(l_norm, 3)) == 3
    assert extract_flat_planes(l_norm, 0) == []


def test_no_flat_planes_on_remeshed_sphere():
    assert extract_flat_planes(remesh(normalize(shapes.icosphere(3))[0], 32)) == []


def test_plane_value_hand_example():
    v = np.array([[0.0, 0, 0], [2.0, 0, 0], [0, 1, 0], [0.5, 1, 0]])
    edges = VisibilitySet.from_pairs([[0, 1], [2, 3]], v)
    assert plane_value(CuttingPlane([1, 0, 0], 1.0), edges, v) == pytest.approx(2.0)
    assert plane_value(CuttingPlane([0, 0, 1], 5.0), edges, v) == 0.0


def test_plane_value_on_reflex_face(l_setup):
    m, edges = l_setup
    p = CuttingPlane([1, 0, 0], 0.0)
    assert plane_value(p, edges, m.vertices) == plane_value_reference(p, edges, m.vertices)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_parallel_values_equal_reference(seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1, 1, size=(40, 3))
    ii, jj = np.triu_indices(40, 1)
    edges = VisibilitySet.from_pairs(np.stack([ii, jj], 1)[rng.random(len(ii)) < 0.3], v)
    planes = [CuttingPlane(rng.normal(size=3), rng.uniform(-0.5, 0.5)) for _ in range(20)]
    got = plane_values(planes, edges, v)
    assert got.tolist() == [plane_value_reference(p, edges, v) for p in planes]


def test_best_plane_is_exhaustive_maximum(l_setup):
    m, edges = l_setup
    best, ranked = select_best_plane(m, edges, k=1024, seed=42)
    ref = [plane_value_reference(p, edges, m.vertices) * p.value_multiplier for p in ranked.planes]
    assert ranked.scores[0] == pytest.approx(max(ref), abs=1e-12)
    assert np.all(np.diff(ranked.scores) <= 0)
    # on the exact L-prism the diagonal bisector separates all four edges
    assert best.kind == EDGE
    assert abs(abs(best.normal @ np.array([1, -1, 0]) / np.sqrt(2)) - 1) < 1e-12
    assert ranked.scores[0] == pytest.approx(edges.total_length)


def test_k_one_uses_the_sampled_edge():
    v = np.array([[0.0, 0, 0], [2.0, 0, 0], [0, 3, 0], [0, 3, 1]])
    edges = VisibilitySet.from_pairs([[0, 1], [2, 3]], v)
    mesh = shapes.tetrahedron()
    best, ranked = select_best_plane(mesh.with_vertices(v), edges, k=1, seed=3, use_flat_planes=False)
    (sampled,) = sample_edge_planes(edges, v, 1, 3)
    assert best.source == sampled.source and len(ranked) == 1


def test_no_useful_plane():
    v = np.array([[0.0, 0, 0], [1.0, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(NoUsefulPlaneError):
        select_best_plane(shapes.tetrahedron(), VisibilitySet.empty())
    # a zero-length edge gives no bisector and nothing else cuts
    edges = VisibilitySet(np.array([[0, 1]]), np.array([0.0]))
    with pytest.raises(NoUsefulPlaneError):
        select_best_plane(shapes.tetrahedron().with_vertices(np.vstack([v[:1], v[:1], v[2:]])), edges,
                          use_flat_planes=False)


def test_ranking_breaks_ties_by_kind_then_source():
    v = np.array([[0.0, 0, 0], [2.0, 0, 0]])
    edges = VisibilitySet.from_pairs([[0, 1]], v)
    planes = [CuttingPlane([1, 0, 0], 1.0, FLAT, (0,), 1.0), CuttingPlane([1, 0, 0], 1.0, EDGE, (0, 1))]
    ranked = score_candidates(planes, edges, v)
    assert ranked.planes[0].kind == EDGE


def test_cutting_plane_validation():
    with pytest.raises(ValueError):
        CuttingPlane([0, 0, 0], 1.0)
    with pytest.raises(ValueError):
        CuttingPlane([1, 0, 0], 0.0, "diagonal")
    with pytest.raises(ValueError):
        CuttingPlane([1, 0, 0], 0.0, value_multiplier=3.0)
    p = CuttingPlane([3, 0, 4], 1.0)
    assert np.allclose(p.normal, [0.6, 0, 0.8])
    assert p.signed_distance([[0, 0, 0]])[0] == -1.0
