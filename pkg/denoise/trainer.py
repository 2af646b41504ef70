"""Training loop turning a point cloud into a learned projection Π_σ."""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config.schemas import TrainConfig
from denoise.evaluation import default_buckets, projection_errors
from denoise.learned import LearnedRep
from denoise.loss import denoising_loss_batch
from manifolds.analytic import AnalyticManifold
from manifolds.point_cloud import PointCloud
from nn.adam import adam_init, adam_step
from nn.mlp import mlp_init
from utils.errors import DimensionMismatch, NonFiniteLoss

logger = logging.getLogger(__name__)


class ProjectionTrainer:
    """Sequential Adam training of the denoising objective.

    Batches are drawn with replacement from the cloud, one noise draw per
    sample per step. Everything is seeded from cfg.seed, so runs are exactly
    reproducible.
    """

    def __init__(self, cloud: PointCloud, cfg: TrainConfig):
        """Initialize the trainer.

        Args:
            cloud: Clean or noisy samples of the latent manifold
            cfg: Training configuration
        """
        dims = cfg.layer_dims
        if dims[0] != cloud.ambient_dim or dims[-1] != cloud.ambient_dim:
            raise DimensionMismatch(
                f"layer dims {dims} do not map R^{cloud.ambient_dim} to itself"
            )
        self.cloud = cloud
        self.cfg = cfg
        self.model = mlp_init(dims, cfg.seed)
        self.state = adam_init(self.model, cfg.optimizer)
        self.rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
        self.loss_trace: List[Tuple[int, float]] = []

    def train_step(self, step: int) -> float:
        """Sample a batch, evaluate the loss and take one Adam step."""
        idx = self.rng.integers(0, len(self.cloud), self.cfg.batch_size)
        loss, grads = denoising_loss_batch(self.model, self.cloud.points[idx], self.cfg.sigma, self.rng)
        if not np.isfinite(loss):
            raise NonFiniteLoss(step, loss)
        adam_step(self.model, self.state, grads)
        return loss

    def run(self) -> LearnedRep:
        """Run cfg.steps iterations and return the learned representation."""
        logger.info(
            "training projection: %d points, sigma=%.3g, dims=%s, steps=%d",
            len(self.cloud), self.cfg.sigma, self.cfg.layer_dims, self.cfg.steps,
        )
        loss = float("nan")
        progress = tqdm(
            range(1, self.cfg.steps + 1),
            desc="train",
            disable=not self.cfg.show_progress,
            leave=False,
        )
        for step in progress:
            loss = self.train_step(step)
            if step % self.cfg.trace_every == 0 or step == self.cfg.steps:
                self.loss_trace.append((step, loss))
                progress.set_postfix(loss=f"{loss:.3e}")
                logger.debug("step %d loss %.6e", step, loss)
        logger.info("training finished, final loss %.6e", loss)
        return LearnedRep(self.model, self.cfg.sigma, list(self.loss_trace))


def train_projection(cloud: PointCloud, cfg: TrainConfig) -> LearnedRep:
    """Train Π_σ on the cloud with the given configuration."""
    return ProjectionTrainer(cloud, cfg).run()


def training_report(
    rep: LearnedRep,
    manifold: Optional[AnalyticManifold] = None,
    eval_points: int = 1000,
    seed: int = 0,
) -> Dict:
    """Training summary: final loss, loss trace and per-distance error table.

    The evaluation table needs a ground-truth manifold and is empty otherwise.
    """
    eval_table = []
    if manifold is not None:
        eval_table = projection_errors(
            rep.project_batch, manifold, default_buckets(rep.sigma), eval_points, seed
        )
    return {
        "final_loss": rep.loss_trace[-1][1] if rep.loss_trace else None,
        "loss_trace": [{"step": s, "loss": l} for s, l in rep.loss_trace],
        "eval_table": eval_table,
    }
