import numpy as np
import pytest

from config.schemas import AdamConfig, TrainConfig
from denoise.evaluation import kernel_agreement, normal_offsets, projection_errors
from denoise.learned import LearnedRep, denoise_cloud, learned_zeta
from denoise.loss import denoising_loss_batch
from denoise.trainer import ProjectionTrainer, train_projection, training_report
from manifolds.analytic import AffineSubspace, Circle2D, sample_cloud
from manifolds.point_cloud import PointCloud
from nn.mlp import MlpModel, mlp_init
from utils.errors import DimensionMismatch


def identity_model(dim=3):
    return MlpModel([dim, dim], [np.eye(dim)], [np.zeros(dim)])


class TestDenoisingLoss:
    def test_identity_network_loss_is_noise_energy(self, rng):
        batch = rng.standard_normal((50, 3))
        loss, _ = denoising_loss_batch(identity_model(), batch, 0.1, np.random.default_rng(5))
        noise = 0.1 * np.random.default_rng(5).standard_normal(batch.shape)
        assert loss == pytest.approx(np.sum(noise ** 2) / 50, rel=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        model = mlp_init([2, 4, 2], seed=1)
        batch = rng.standard_normal((6, 2))
        _, grads = denoising_loss_batch(model, batch, 0.2, np.random.default_rng(3))

        def loss_of(m):
            return denoising_loss_batch(m, batch, 0.2, np.random.default_rng(3))[0]

        h = 1e-6
        for layer, analytic in enumerate(grads.weights):
            numeric = np.zeros_like(analytic)
            for idx in np.ndindex(analytic.shape):
                plus, minus = model.copy(), model.copy()
                plus.weights[layer][idx] += h
                minus.weights[layer][idx] -= h
                numeric[idx] = (loss_of(plus) - loss_of(minus)) / (2.0 * h)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)

    def test_rejects_bad_arguments(self, rng):
        with pytest.raises(ValueError):
            denoising_loss_batch(identity_model(), np.zeros((0, 3)), 0.1, rng)
        with pytest.raises(ValueError):
            denoising_loss_batch(identity_model(), np.zeros((2, 3)), 0.0, rng)


class TestLearnedZeta:
    def test_identity_network_gives_zero(self, rng):
        rep = LearnedRep(identity_model(), sigma=0.1)
        residual, jac = learned_zeta(rep, rng.standard_normal(3))
        np.testing.assert_array_equal(residual, np.zeros(3))
        np.testing.assert_array_equal(jac, np.zeros((3, 3)))

    def test_constant_network(self):
        c = np.array([1.0, -2.0, 0.5])
        rep = LearnedRep(MlpModel([3, 3], [np.zeros((3, 3))], [c]), sigma=0.1)
        z = np.array([4.0, 4.0, 4.0])
        residual, jac = learned_zeta(rep, z)
        np.testing.assert_allclose(residual, z - c)
        np.testing.assert_allclose(jac, np.eye(3))

    def test_batch_shapes(self, rng):
        rep = LearnedRep(mlp_init([3, 8, 3], seed=0), sigma=0.1)
        residual, jac = rep.zeta_batch(rng.standard_normal((4, 3)))
        assert residual.shape == (4, 3) and jac.shape == (4, 3, 3)

    def test_network_must_be_square(self):
        with pytest.raises(DimensionMismatch):
            LearnedRep(mlp_init([3, 4, 2], seed=0), sigma=0.1)

    def test_wrong_dimension(self):
        rep = LearnedRep(identity_model(), sigma=0.1)
        with pytest.raises(DimensionMismatch):
            learned_zeta(rep, np.zeros(2))


class TestTrainer:
    def test_deterministic(self):
        cloud = sample_cloud(Circle2D(), 200, 0.0, seed=0)
        cfg = TrainConfig(layer_dims=[2, 8, 2], steps=20, batch_size=16, seed=3, show_progress=False)
        a = train_projection(cloud, cfg)
        b = train_projection(cloud, cfg)
        for wa, wb in zip(a.model.weights, b.model.weights):
            np.testing.assert_array_equal(wa, wb)
        assert a.loss_trace == b.loss_trace

    def test_layer_dims_must_match_cloud(self):
        cloud = sample_cloud(Circle2D(), 10, 0.0, seed=0)
        with pytest.raises(DimensionMismatch):
            ProjectionTrainer(cloud, TrainConfig(layer_dims=[3, 8, 3], show_progress=False))

    def test_loss_trace_records_final_step(self):
        cloud = sample_cloud(Circle2D(), 100, 0.0, seed=0)
        cfg = TrainConfig(layer_dims="2,8,2", steps=25, trace_every=10, batch_size=8, show_progress=False)
        rep = train_projection(cloud, cfg)
        assert [s for s, _ in rep.loss_trace] == [10, 20, 25]

    @pytest.mark.slow
    def test_learns_circle_projection(self):
        circle = Circle2D()
        cloud = sample_cloud(circle, 2000, 0.0, seed=1)
        cfg = TrainConfig(
            layer_dims=[2, 32, 32, 2], sigma=0.1, steps=3000, batch_size=64,
            seed=0, trace_every=100, show_progress=False,
        )
        rep = train_projection(cloud, cfg)
        assert rep.loss_trace[-1][1] < 0.5 * rep.loss_trace[0][1]
        report = training_report(rep, circle, eval_points=500, seed=2)
        near = report["eval_table"][0]
        assert near["distance_bucket"] == 0.0
        assert near["median_error"] < 0.2

    @pytest.mark.slow
    def test_repeated_point_cloud_collapses_to_that_point(self):
        z = np.array([0.5, -0.3, 0.2])
        cloud = PointCloud(np.tile(z, (500, 1)))
        cfg = TrainConfig(
            layer_dims=[3, 3], sigma=0.1, steps=8000, batch_size=64,
            optimizer=AdamConfig(learning_rate=5e-4, weight_decay=0.0),
            seed=0, trace_every=500, show_progress=False,
        )
        rep = train_projection(cloud, cfg)
        offsets = 0.05 * np.random.default_rng(8).standard_normal((20, 3))
        errors = np.linalg.norm(rep.project_batch(z + offsets) - z, axis=1)
        assert errors.max() < 1e-2

    @pytest.mark.slow
    def test_plane_loss_floor_is_tangent_noise(self):
        # the normal noise component is removable, the tangent one is not
        plane = AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], extent=2.0)
        cloud = sample_cloud(plane, 4000, 0.0, seed=2)
        sigma = 0.05
        cfg = TrainConfig(
            layer_dims=[3, 3], sigma=sigma, steps=6000, batch_size=128, seed=1,
            optimizer=AdamConfig(learning_rate=1e-3, weight_decay=0.0),
            trace_every=1000, show_progress=False,
        )
        rep = train_projection(cloud, cfg)
        loss, _ = denoising_loss_batch(rep.model, cloud.points, sigma, np.random.default_rng(9))
        assert loss == pytest.approx(plane.intrinsic_dim * sigma ** 2, rel=0.1)

        noised = cloud.points[:500] + sigma * np.random.default_rng(10).standard_normal((500, 3))
        assert np.median(np.abs(rep.project_batch(noised)[:, 2])) < 5e-3

    @pytest.mark.slow
    def test_plane_network_recovers_orthogonal_projection(self):
        sigma = 0.05
        plane = AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], extent=2.0)
        cloud = sample_cloud(plane, 20000, 0.0, seed=3)
        cfg = TrainConfig(
            layer_dims=[3, 64, 64, 64, 3], sigma=sigma, steps=20000,
            seed=2, trace_every=1000, show_progress=False,
        )
        rep = train_projection(cloud, cfg)

        # held out, away from the patch boundary
        inner = AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], extent=1.5)
        noised = sample_cloud(inner, 2000, sigma, seed=11).points
        errors = np.linalg.norm(rep.project_batch(noised) - plane.project(noised), axis=1)
        assert np.median(errors) < 5e-3

    @pytest.mark.slow
    def test_smaller_sigma_is_more_accurate_near_torus(self, torus, trained_torus):
        sharp, smooth = trained_torus(0.05), trained_torus(0.2)
        assert sharp.loss_trace[-1][1] < smooth.loss_trace[-1][1]
        sharp_rows = projection_errors(sharp.project_batch, torus, [0.0, 0.025], 2000, seed=4)
        smooth_rows = projection_errors(smooth.project_batch, torus, [0.0, 0.025], 2000, seed=4)
        for a, b in zip(sharp_rows, smooth_rows):
            assert a["median_error"] < b["median_error"]

    def test_denoise_cloud_chunks_match_single_pass(self, rng):
        rep = LearnedRep(mlp_init([3, 5, 3], seed=2), sigma=0.1)
        points = rng.standard_normal((11, 3))
        np.testing.assert_allclose(denoise_cloud(rep, points, chunk=4), rep.project_batch(points), atol=1e-14)


class TestEvaluation:
    def test_normal_offsets_sit_at_requested_distance(self, torus, rng):
        y = normal_offsets(torus, 0.05, 100, rng)
        np.testing.assert_allclose(torus.distance(y), 0.05, atol=1e-12)

    def test_exact_projector_has_zero_error(self, sphere):
        rows = projection_errors(sphere.project, sphere, [0.0, 0.1], 50, seed=0)
        assert [r["distance_bucket"] for r in rows] == [0.0, 0.1]
        assert all(r["median_error"] < 1e-12 and r["p90_error"] < 1e-12 for r in rows)

    def test_kernel_agreement_keys(self, sphere):
        cloud = sample_cloud(sphere, 300, 0.0, seed=0)
        out = kernel_agreement(sphere.project, cloud, 0.1, sphere, 20, seed=1)
        assert set(out) == {"median_gap", "p90_gap", "bound_5_sigma_sq"}
        assert out["bound_5_sigma_sq"] == pytest.approx(0.05)

    def test_report_without_manifold(self):
        rep = LearnedRep(identity_model(2), sigma=0.1, loss_trace=[(1, 0.5), (2, 0.25)])
        report = training_report(rep)
        assert report["final_loss"] == 0.25
        assert report["eval_table"] == []
