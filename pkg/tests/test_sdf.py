import numpy as np
import pytest

from hullcut import shapes
from hullcut.bvh import closest_distance_brute
from hullcut.exceptions import EmptySurfaceError, GridSizeError
from hullcut.mesh import TriMesh, connected_components, signed_volume, validate
from hullcut.sdf import build_sdf, extract_isosurface, remesh


@pytest.fixture(scope="module")
def cube_grid():
    return build_sdf(shapes.cube(), 32)


def test_center_node_is_half_inside(cube_grid):
    p = cube_grid.node_positions()
    k = int(np.argmin(np.linalg.norm(p - 0.5, axis=1)))
    assert cube_grid.values.ravel()[k] == pytest.approx(-0.5, abs=cube_grid.cell_size)


def test_padding_corner_is_outside(cube_grid):
    assert cube_grid.values[0, 0, 0] > 0
    assert cube_grid.values[-1, -1, -1] > 0


def test_values_match_brute_force_distance(cube_grid):
    p = cube_grid.node_positions()
    rng = np.random.default_rng(0)
    pick = rng.choice(len(p), 300, replace=False)
    brute = closest_distance_brute(shapes.cube(), p[pick])
    assert np.allclose(np.abs(cube_grid.values.ravel()[pick]), brute, atol=1e-12)


def test_surface_nodes_are_small(cube_grid):
    p = cube_grid.node_positions()
    on = np.isclose(p, 0.0, atol=1e-12).any(axis=1) & np.all((p > -1e-12) & (p < 1 + 1e-12), axis=1)
    assert on.any()
    assert np.abs(cube_grid.values.ravel()[on]).max() <= cube_grid.cell_size


def test_resolution_bounds():
    with pytest.raises(GridSizeError):
        build_sdf(shapes.cube(), 4)
    with pytest.raises(GridSizeError):
        build_sdf(shapes.cube(), 1000)


def test_isosurface_of_cube():
    grid = build_sdf(shapes.cube(), 64)
    m = extract_isosurface(grid, 0.0)
    assert validate(m).ok
    assert 0.97 <= signed_volume(m) <= 1.03


def test_offset_surface_grows():
    grid = build_sdf(shapes.cube(), 64, padding=5)
    v0 = signed_volume(extract_isosurface(grid, 0.0))
    off = extract_isosurface(grid, 0.03)
    assert validate(off).watertight
    assert signed_volume(off) > v0


def test_empty_level_set(cube_grid):
    with pytest.raises(EmptySurfaceError):
        extract_isosurface(cube_grid, float(cube_grid.values.min()) - 1.0)


def test_remesh_cube():
    m = remesh(shapes.cube(), 80)
    assert validate(m).ok
    assert signed_volume(m) == pytest.approx(1.0, rel=0.05)


def test_remesh_closes_a_hole(cube):
    holed = TriMesh(cube.vertices, cube.triangles[1:])
    assert not validate(holed).watertight
    assert validate(remesh(holed, 80)).watertight


def test_remesh_keeps_components():
    assert len(connected_components(remesh(shapes.two_cubes(), 60))) == 2


def test_remesh_is_deterministic():
    a = remesh(shapes.l_prism(), 40)
    b = remesh(shapes.l_prism(), 40)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)
