import numpy as np
import pytest

from config.schemas import SolverConfig
from geometry.energy import EuclideanEnergy
from manifolds.analytic import sample_cloud
from manifolds.implicit import AnalyticRep, eta_star_rule
from solvers.auglag import (
    geodesic_auglag,
    geodesic_cascadic,
    refine_path,
    resolve_eta_star,
    tangent_gradient_norms,
)
from solvers.path import arclength_resample, linear_path
from utils.errors import DimensionMismatch, NotConverged

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
MIDPOINT = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)


def great_circle_error(path, samples=2001):
    """Max gap between the polyline and the quarter great circle E1 -> E2 at equal arclength."""
    s = np.linspace(0.0, 1.0, samples)
    angle = 0.5 * np.pi * s
    exact = np.column_stack([np.cos(angle), np.sin(angle), np.zeros_like(s)])
    return float(np.max(np.linalg.norm(arclength_resample(path.points, s) - exact, axis=1)))


class TestFlat:
    def test_plane_gives_straight_equispaced_line(self, plane):
        cfg = SolverConfig(omega_star=1e-9)
        z0, zK = np.array([0.0, 0.0, 0.0]), np.array([1.0, 2.0, 0.0])
        path, report = geodesic_auglag(EuclideanEnergy(), AnalyticRep(plane), z0, zK, 4, cfg)
        assert report.converged and report.stop_reason == "accuracy"
        np.testing.assert_allclose(path.points, linear_path(z0, zK, 4).points, atol=1e-8)
        assert report.energy == pytest.approx(5.0, rel=1e-10)


class TestSphere:
    def test_midpoint_by_symmetry(self, sphere):
        cfg = SolverConfig(omega_star=1e-9)
        path, report = geodesic_auglag(EuclideanEnergy(), AnalyticRep(sphere), E1, E2, 8, cfg)
        assert report.converged
        np.testing.assert_allclose(path.points[4], MIDPOINT, atol=1e-6)

    def test_converged_path_properties(self, sphere):
        cfg = SolverConfig()
        rep = AnalyticRep(sphere)
        path, report = geodesic_auglag(EuclideanEnergy(), rep, E1, E2, 8, cfg)
        assert report.constraint_norm <= report.eta_star
        assert np.all(np.linalg.norm(rep.residual_batch(path.interior), axis=1) <= report.eta_star)
        lengths = path.segment_lengths()
        assert np.max(lengths) / np.min(lengths) - 1.0 < 0.01
        assert np.max(tangent_gradient_norms(EuclideanEnergy(), rep, path)) <= 10.0 * cfg.omega_star

    def test_error_decreases_with_resolution(self, sphere):
        rep = AnalyticRep(sphere)
        errors = {}
        for K in (4, 8, 16, 32):
            path, _ = geodesic_auglag(EuclideanEnergy(), rep, E1, E2, K)
            errors[K] = great_circle_error(path)
            if K == 16:
                np.testing.assert_allclose(path.points[8], MIDPOINT, atol=1e-3)
        assert errors[4] > errors[8] > errors[16] > errors[32]

    def test_cascadic_matches_direct_solve(self, sphere):
        rep = AnalyticRep(sphere)
        cfg = SolverConfig(omega_star=1e-9)
        direct, _ = geodesic_auglag(EuclideanEnergy(), rep, E1, E2, 16, cfg)
        cascade, report = geodesic_cascadic(EuclideanEnergy(), rep, E1, E2, 16, cfg, coarse_k=4)
        assert report.converged
        np.testing.assert_allclose(cascade.points, direct.points, atol=1e-6)

    def test_refine_path_doubles_resolution(self, sphere):
        rep = AnalyticRep(sphere)
        path, _ = geodesic_auglag(EuclideanEnergy(), rep, E1, E2, 4)
        fine = refine_path(path, rep)
        assert fine.K == 8
        np.testing.assert_array_equal(fine.points[::2], path.points)
        np.testing.assert_allclose(np.linalg.norm(fine.points[1::2], axis=1), 1.0, atol=1e-12)


class TestFailures:
    def test_not_converged_raises_with_report(self, sphere):
        cfg = SolverConfig(max_outer=1)
        with pytest.raises(NotConverged) as info:
            geodesic_auglag(EuclideanEnergy(), AnalyticRep(sphere), E1, E2, 8, cfg)
        assert info.value.report.stop_reason == "max_iter"
        assert info.value.path.K == 8

    def test_lenient_config_returns_report(self, sphere):
        cfg = SolverConfig(max_outer=1, raise_on_failure=False)
        path, report = geodesic_auglag(EuclideanEnergy(), AnalyticRep(sphere), E1, E2, 8, cfg)
        assert not report.converged
        assert report.to_dict()["stop_reason"] == "max_iter"

    def test_needs_interior_points(self, sphere):
        with pytest.raises(ValueError):
            geodesic_auglag(EuclideanEnergy(), AnalyticRep(sphere), E1, E2, 1)

    def test_endpoint_dimension(self, sphere):
        with pytest.raises(DimensionMismatch):
            geodesic_auglag(EuclideanEnergy(), AnalyticRep(sphere), [1.0, 0.0], [0.0, 1.0], 4)


class TestEtaStar:
    def test_explicit_value(self, sphere):
        assert resolve_eta_star(SolverConfig(eta_star=1e-5), AnalyticRep(sphere), 8) == 1e-5

    def test_auto_without_cloud(self, sphere):
        assert resolve_eta_star(SolverConfig(), AnalyticRep(sphere), 8) == 1e-8

    def test_auto_with_cloud_uses_rule_of_thumb(self, sphere):
        rep = AnalyticRep(sphere)
        cloud = sample_cloud(sphere, 200, 0.01, seed=0)
        assert resolve_eta_star(SolverConfig(), rep, 8, cloud) == pytest.approx(eta_star_rule(rep, cloud.points, 8))

    def test_parsed_from_string(self):
        assert SolverConfig(eta_star="AUTO").eta_star == "auto"
        assert SolverConfig(eta_star="1e-4").eta_star == 1e-4
