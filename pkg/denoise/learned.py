"""Learned implicit representation ζ_σ = id − Π_σ backed by an MLP."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from nn.mlp import MlpModel, mlp_forward, mlp_input_jacobian
from utils.errors import DimensionMismatch


@dataclass
class LearnedRep:
    """Trained projection network plus the noise scale it was trained with."""

    model: MlpModel
    sigma: float
    loss_trace: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.model.input_dim != self.model.output_dim:
            raise DimensionMismatch("projection network must map R^l to R^l")

    @property
    def ambient_dim(self) -> int:
        return self.model.input_dim

    def zeta(self, z):
        return learned_zeta(self, z)

    def zeta_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return learned_zeta(self, Z)

    def residual_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return Z - mlp_forward(self.model, Z)

    def project_batch(self, Z):
        return mlp_forward(self.model, np.atleast_2d(np.asarray(Z, dtype=float)))


def learned_zeta(rep: LearnedRep, z) -> Tuple[np.ndarray, np.ndarray]:
    """Residual z − Π_σ(z) and Jacobian I − DΠ_σ(z) (single point or batch)."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != rep.ambient_dim:
        raise DimensionMismatch(f"z has dim {z.shape[-1]}, representation expects {rep.ambient_dim}")
    residual = z - mlp_forward(rep.model, z)
    jac = np.eye(rep.ambient_dim) - mlp_input_jacobian(rep.model, z)
    return residual, jac


def denoise_cloud(rep, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Image Π_σ(Z) of a (possibly noisy) cloud, for smoothing inspection.

    Works for any representation exposing ``project_batch``; the cloud is
    pushed through in chunks so kernel oracles stay within memory.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    parts = [rep.project_batch(points[i:i + chunk]) for i in range(0, len(points), chunk)]
    return np.concatenate(parts, axis=0) if parts else points.copy()
