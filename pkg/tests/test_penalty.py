import numpy as np
import pytest

from config.schemas import SolverConfig
from geometry.energy import EuclideanEnergy
from manifolds.implicit import AnalyticRep
from solvers.auglag import geodesic_auglag
from solvers.path import linear_path
from solvers.penalty import ManifoldDistance, geodesic_penalty, penalty_objective
from utils.errors import NotConverged

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])


class TestManifoldDistance:
    def test_values_and_gradients(self, sphere):
        d, grad = ManifoldDistance(sphere)(np.array([[2.0, 0.0, 0.0], [0.0, 0.5, 0.0]]))
        np.testing.assert_allclose(d, [1.0, 0.5])
        np.testing.assert_allclose(grad, [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])

    def test_gradient_vanishes_on_zero_set(self, sphere):
        d, grad = ManifoldDistance(sphere)(E1[None])
        assert d[0] == 0.0
        np.testing.assert_array_equal(grad, np.zeros((1, 3)))

    def test_objective_gradient_matches_finite_differences(self, sphere, rng, fd):
        path = linear_path(E1, E2, 4).with_interior(0.8 * rng.standard_normal(9))
        fun = penalty_objective(EuclideanEnergy(), ManifoldDistance(sphere), path, mu=50.0)
        x = path.interior.ravel()
        np.testing.assert_allclose(fun(x)[1], fd(lambda q: fun(q)[0], x), rtol=1e-5, atol=1e-6)


class TestGeodesicPenalty:
    def test_plane_gives_straight_line(self, plane):
        cfg = SolverConfig(omega_star=1e-9)
        z0, zK = np.array([0.0, 0.0, 0.0]), np.array([1.0, 2.0, 0.0])
        path, report = geodesic_penalty(EuclideanEnergy(), ManifoldDistance(plane), z0, zK, 4, cfg)
        assert report.converged
        np.testing.assert_allclose(path.points, linear_path(z0, zK, 4).points, atol=1e-8)

    def test_sphere_agrees_with_augmented_lagrangian(self, sphere):
        pen, report = geodesic_penalty(EuclideanEnergy(), ManifoldDistance(sphere), E1, E2, 8)
        ref, _ = geodesic_auglag(EuclideanEnergy(), AnalyticRep(sphere), E1, E2, 8, SolverConfig(omega_star=1e-9))
        assert report.converged
        assert report.constraint_norm <= 1e-6
        assert np.max(np.linalg.norm(pen.points - ref.points, axis=1)) <= 1e-4

    def test_single_segment_returns_endpoints(self, sphere):
        path, report = geodesic_penalty(EuclideanEnergy(), ManifoldDistance(sphere), E1, E2, 1)
        np.testing.assert_array_equal(path.points, np.stack([E1, E2]))
        assert report.converged and report.outer_iterations == 0
        assert report.energy == pytest.approx(2.0)

    def test_penalty_cap(self, sphere):
        cfg = SolverConfig(mu_max=15.0)
        with pytest.raises(NotConverged) as info:
            geodesic_penalty(EuclideanEnergy(), ManifoldDistance(sphere), E1, E2, 8, cfg)
        assert info.value.report.stop_reason == "max_penalty"

    def test_invalid_k(self, sphere):
        with pytest.raises(ValueError):
            geodesic_penalty(EuclideanEnergy(), ManifoldDistance(sphere), E1, E2, 0)
