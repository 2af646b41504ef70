"""Implicit representations ζ: R^l → R^l vanishing on the latent manifold.

Solvers only talk to the `ImplicitRep` protocol; analytic manifolds, the kernel
oracle and learned projections all plug in through it.
"""

from typing import Protocol, Tuple, runtime_checkable

import numpy as np

from manifolds.analytic import AnalyticManifold, as_batch
from manifolds.kernel import kernel_projection, kernel_projection_jacobian
from manifolds.point_cloud import PointCloud


@runtime_checkable
class ImplicitRep(Protocol):
    """ζ = id − Π with Jacobian, for single points and batches."""

    ambient_dim: int

    def zeta(self, z) -> Tuple[np.ndarray, np.ndarray]:
        ...

    def zeta_batch(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ...

    def residual_batch(self, Z: np.ndarray) -> np.ndarray:
        ...

    def project_batch(self, Z: np.ndarray) -> np.ndarray:
        ...


class AnalyticRep:
    """Exact ζ of an analytic manifold."""

    def __init__(self, manifold: AnalyticManifold):
        self.manifold = manifold
        self.ambient_dim = manifold.ambient_dim

    def zeta(self, z):
        return self.manifold.zeta(z)

    def zeta_batch(self, Z):
        Z, _ = as_batch(Z, self.ambient_dim, "Z")
        return self.manifold.zeta(Z)

    def residual_batch(self, Z):
        Z, _ = as_batch(Z, self.ambient_dim, "Z")
        return Z - self.manifold.project(Z)

    def project_batch(self, Z):
        Z, _ = as_batch(Z, self.ambient_dim, "Z")
        return self.manifold.project(Z)


class KernelRep:
    """ζ_σ built from the closed-form kernel barycenter of a point cloud."""

    def __init__(self, cloud: PointCloud, sigma: float):
        self.cloud = cloud
        self.sigma = float(sigma)
        self.ambient_dim = cloud.ambient_dim

    def zeta(self, z):
        proj, jac = kernel_projection_jacobian(z, self.cloud, self.sigma)
        z = np.asarray(z, dtype=float)
        return z - proj, np.eye(self.ambient_dim) - jac

    def zeta_batch(self, Z):
        Z, _ = as_batch(Z, self.ambient_dim, "Z")
        proj, jac = kernel_projection_jacobian(Z, self.cloud, self.sigma)
        return Z - proj, np.eye(self.ambient_dim)[None] - jac

    def residual_batch(self, Z):
        Z, _ = as_batch(Z, self.ambient_dim, "Z")
        return Z - kernel_projection(Z, self.cloud, self.sigma)

    def project_batch(self, Z):
        Z, _ = as_batch(Z, self.ambient_dim, "Z")
        return kernel_projection(Z, self.cloud, self.sigma)


def eta_star_rule(rep: ImplicitRep, samples: np.ndarray, K: int, floor: float = 1e-8) -> float:
    """Constraint tolerance from the mean residual on encoded samples.

    η* = K / |X| · Σ |ζ(x_i)|, floored so exact representations still get a
    reachable target.
    """
    residual = rep.residual_batch(np.asarray(samples, dtype=float))
    mean = float(np.mean(np.linalg.norm(residual, axis=1)))
    return max(K * mean, floor)
