import numpy as np
import pytest

from config.schemas import ExpConfig, SolverConfig
from geometry.energy import EuclideanEnergy
from manifolds.implicit import AnalyticRep
from solvers.auglag import geodesic_auglag
from solvers.exponential import discrete_exp, exp_functional, exp_step, gauss_newton_correction
from utils.errors import DegenerateStep, DimensionMismatch


def on_circle(angle):
    return np.array([np.cos(angle), np.sin(angle), 0.0])


class TestExpStep:
    def test_plane_continues_straight(self, plane):
        z_prev, z_cur = np.array([0.0, 0.0, 0.0]), np.array([0.3, -0.1, 0.0])
        z_next, _, report = exp_step(EuclideanEnergy(), AnalyticRep(plane), z_prev, z_cur)
        assert report.converged
        np.testing.assert_allclose(z_next, [0.6, -0.2, 0.0], atol=1e-12)

    def test_sphere_small_step_follows_great_circle(self, sphere):
        h = 0.1
        z_next, _, report = exp_step(EuclideanEnergy(), AnalyticRep(sphere), on_circle(0.0), on_circle(h), K=4)
        assert report.converged
        assert report.constraint_norm <= 1e-6
        np.testing.assert_allclose(z_next, on_circle(2.0 * h), atol=1e-6)
        step_in = np.linalg.norm(on_circle(h) - on_circle(0.0))
        assert np.linalg.norm(z_next - on_circle(h)) == pytest.approx(step_in, abs=1e-4)

    def test_coincident_points(self, sphere):
        with pytest.raises(DegenerateStep):
            exp_step(EuclideanEnergy(), AnalyticRep(sphere), on_circle(0.2), on_circle(0.2))

    def test_dimension_mismatch(self, sphere):
        with pytest.raises(DimensionMismatch):
            exp_step(EuclideanEnergy(), AnalyticRep(sphere), [1.0, 0.0], [0.0, 1.0])

    def test_functional_gradient_matches_finite_differences(self, torus, rng, fd):
        z_prev, z_cur = torus.point(0.0, 0.3), torus.point(0.15, 0.4)
        fun = exp_functional(EuclideanEnergy(), AnalyticRep(torus), z_prev, z_cur, K=8, penalty=10.0)
        x = np.concatenate([2.0 * z_cur - z_prev + 0.01 * rng.standard_normal(3), rng.standard_normal(3)])
        np.testing.assert_allclose(fun(x)[1], fd(lambda q: fun(q)[0], x), rtol=1e-5, atol=1e-6)


class TestDiscreteExp:
    def test_plane_translation(self, plane):
        z0, v0 = np.array([0.5, 0.5, 0.0]), np.array([1.0, -2.0, 0.0])
        path = discrete_exp(EuclideanEnergy(), AnalyticRep(plane), z0, v0, 5)
        np.testing.assert_allclose(path.points[-1], z0 + v0, atol=1e-12)

    def test_sphere_quarter_turn(self, sphere):
        v0 = np.array([0.0, 0.5 * np.pi, 0.0])
        path = discrete_exp(EuclideanEnergy(), AnalyticRep(sphere), on_circle(0.0), v0, 32)
        assert path.K == 32
        np.testing.assert_allclose(path.points[-1], on_circle(0.5 * np.pi), atol=1e-2)
        lengths = path.segment_lengths()
        assert np.max(lengths) / np.min(lengths) - 1.0 < 0.01

    def test_gauss_newton_lands_on_sphere(self, sphere):
        z = gauss_newton_correction(AnalyticRep(sphere), np.array([1.0, 0.05, 0.0]), rcond=1e-2)
        assert np.linalg.norm(z) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.slow
    def test_reproduces_torus_geodesic(self, torus):
        rep = AnalyticRep(torus)
        K = 8
        path, _ = geodesic_auglag(
            EuclideanEnergy(), rep, torus.point(0.0, 0.3), torus.point(1.2, 1.0), K, SolverConfig(omega_star=1e-9)
        )
        v0 = K * (path.points[1] - path.points[0])
        shot = discrete_exp(EuclideanEnergy(), rep, path.points[0], v0, K, ExpConfig())
        gaps = np.linalg.norm(shot.points - path.points, axis=1)
        for k in range(1, K + 1):
            assert gaps[k] <= 1e-4 * k

    def test_invalid_arguments(self, sphere):
        with pytest.raises(ValueError):
            discrete_exp(EuclideanEnergy(), AnalyticRep(sphere), on_circle(0.0), [0.0, 1.0, 0.0], 0)
        with pytest.raises(DimensionMismatch):
            discrete_exp(EuclideanEnergy(), AnalyticRep(sphere), on_circle(0.0), [0.0, 1.0], 4)
