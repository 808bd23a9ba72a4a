import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hullcut import ConvexDecomposition, check_mesh, check_points, shapes
from hullcut.exceptions import ValidationError


@pytest.fixture(scope="module")
def fitted():
    return ConvexDecomposition(remesh_enabled=False, seed=42).fit(shapes.l_prism())


def test_get_params_and_clone():
    est = ConvexDecomposition(k=64, seed=9)
    params = est.get_params()
    assert params["k"] == 64 and params["seed"] == 9
    assert clone(est).get_params() == params
    est.set_params(epsilon=0.05)
    assert est.epsilon == 0.05


def test_fit_l_prism(fitted):
    assert fitted.n_parts_ == 2
    assert len(fitted.hulls_) == 2
    assert fitted.score() >= -0.01


def test_predict_labels(fitted):
    labels = fitted.predict([[0.5, 0.5, 0.5], [0.5, 1.5, 0.5], [1.5, 1.5, 0.5], [1.5, 0.5, 0.5]])
    assert labels[2] == -1  # inside the notch
    assert labels[0] >= 0 and labels[1] >= 0 and labels[3] >= 0
    assert labels[1] != labels[3]


def test_transform_shape_and_sign(fitted):
    out = fitted.transform(np.array([[0.3, 0.8, 0.5], [5, 5, 5]]))
    assert out.shape == (2, 2)
    assert out[0].min() < 0 and out[1].min() > 0


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        ConvexDecomposition().predict([[0, 0, 0]])


def test_check_mesh_inputs(cube):
    assert check_mesh(cube) is cube
    assert check_mesh((cube.vertices, cube.triangles)).n_triangles == 12
    assert check_mesh({"vertices": cube.vertices, "triangles": cube.triangles}).n_vertices == 8
    with pytest.raises(ValidationError):
        check_mesh(np.zeros((4, 3)))
    with pytest.raises(ValidationError):
        check_mesh((np.zeros((3, 2)), [[0, 1, 2]]))
    with pytest.raises(ValidationError):
        check_mesh((np.zeros((3, 3)), np.zeros((1, 3))))
    with pytest.raises(ValidationError):
        check_mesh((np.full((3, 3), np.nan), [[0, 1, 2]]))


def test_check_points():
    assert check_points([1, 2, 3]).shape == (1, 3)
    with pytest.raises(ValidationError):
        check_points([[1, 2]])
    with pytest.raises(ValidationError):
        check_points([[np.inf, 0, 0]])


def test_bad_params_fail_at_fit(cube):
    with pytest.raises(ValidationError):
        ConvexDecomposition(epsilon=-1).fit(cube)
