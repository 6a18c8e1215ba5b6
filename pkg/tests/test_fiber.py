import numpy as np
import pytest

from ymh.fiber import PLANE, SPHERE, DegeneratePoint, FiberModel


@pytest.mark.parametrize("kind", [SPHERE, PLANE])
def test_rotation_preserves_moment_and_length(kind, rng):
    fib = FiberModel(kind)
    p = fib.random_points((10,), rng)
    q = fib.rotate(p, rng.uniform(-5, 5, 10))
    np.testing.assert_allclose(fib.moment(q), fib.moment(p), atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(q, axis=-1), np.linalg.norm(p, axis=-1), atol=1e-14)


@pytest.mark.parametrize("kind", [SPHERE, PLANE])
def test_action_field_is_derivative_of_rotation(kind, rng):
    fib = FiberModel(kind)
    p = fib.random_points((6,), rng)
    eps = 1e-6
    fd = (fib.rotate(p, eps) - fib.rotate(p, -eps)) / (2 * eps)
    np.testing.assert_allclose(fd, fib.action_field(p), atol=1e-9)


def test_sphere_projection_and_tangent(rng):
    fib = FiberModel(SPHERE)
    p = fib.project(rng.standard_normal((20, 3)))
    np.testing.assert_allclose(np.linalg.norm(p, axis=-1), 1.0, atol=1e-15)
    v = fib.tangent_project(p, rng.standard_normal((20, 3)))
    np.testing.assert_allclose(np.sum(v * p, axis=-1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.sum(fib.action_field(p) * p, axis=-1), 0.0, atol=1e-15)


def test_sphere_projection_rejects_origin():
    with pytest.raises(DegeneratePoint):
        FiberModel(SPHERE).project(np.zeros((2, 3)))


def test_exp_map_stays_on_sphere(rng):
    fib = FiberModel(SPHERE)
    p = fib.random_points((50,), rng)
    v = fib.tangent_project(p, 3 * rng.standard_normal((50, 3)))
    np.testing.assert_allclose(np.linalg.norm(fib.exp_map(p, v), axis=-1), 1.0, atol=1e-14)


@pytest.mark.parametrize("kind", [SPHERE, PLANE])
def test_moment_gradient_matches_finite_differences(kind, rng):
    fib = FiberModel(kind)
    p = fib.random_points((5,), rng)
    v = fib.tangent_project(p, rng.standard_normal(p.shape))
    eps = 1e-6
    fd = (fib.moment(fib.exp_map(p, eps * v)) - fib.moment(fib.exp_map(p, -eps * v))) / (2 * eps)
    np.testing.assert_allclose(fd, np.sum(fib.moment_gradient(p) * v, axis=-1), atol=1e-8)


def test_defaults_and_bad_kind():
    assert FiberModel(SPHERE).c == 1.0 and FiberModel(PLANE).c == 0.5
    assert FiberModel(SPHERE).ambient_dim == 3 and FiberModel(PLANE).ambient_dim == 2
    with pytest.raises(ValueError):
        FiberModel("torus")
