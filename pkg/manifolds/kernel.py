"""Closed-form Gaussian kernel barycenter projection.

Evaluates Π_σ(y) = Σ z_i w_i / Σ w_i with w_i = exp(−|y − z_i|² / (2σ²)) on the
empirical measure of a point cloud. Used as a training-free oracle for the
learned projection.
"""

from typing import Tuple

import numpy as np

from manifolds.analytic import as_batch
from manifolds.point_cloud import PointCloud
from utils.errors import DegenerateWeights

# bytes allowed for one (rows, n_cloud) float64 weight block
_BLOCK_BYTES = 64 * 2 ** 20


def _chunk_rows(n_cloud: int) -> int:
    """Rows of y evaluated together so one weight block stays within _BLOCK_BYTES."""
    return max(1, _BLOCK_BYTES // (8 * max(n_cloud, 1)))


def _shifted_weights(Y: np.ndarray, Z: np.ndarray, sigma: float) -> np.ndarray:
    sq = (
        np.sum(Y * Y, axis=1)[:, None]
        - 2.0 * Y @ Z.T
        + np.sum(Z * Z, axis=1)[None, :]
    )
    sq = np.maximum(sq, 0.0)
    logw = -sq / (2.0 * sigma * sigma)
    # max-shift keeps the largest weight at exactly 1
    w = np.exp(logw - logw.max(axis=1, keepdims=True))
    total = w.sum(axis=1)
    if not np.all(np.isfinite(total)) or np.any(total <= 0.0):
        raise DegenerateWeights("kernel weights underflowed or became NaN")
    return w / total[:, None]


def _check(cloud: PointCloud, sigma: float):
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if len(cloud) == 0:
        raise ValueError("cloud must be nonempty")


def kernel_projection(y, cloud: PointCloud, sigma: float) -> np.ndarray:
    """Gaussian-weighted barycenter of the cloud around y (single point or batch)."""
    _check(cloud, sigma)
    Y, single = as_batch(y, cloud.ambient_dim, "y")
    out = np.empty_like(Y)
    chunk = _chunk_rows(len(cloud))
    for start in range(0, Y.shape[0], chunk):
        w = _shifted_weights(Y[start:start + chunk], cloud.points, sigma)
        out[start:start + chunk] = w @ cloud.points
    return out[0] if single else out


def kernel_projection_jacobian(y, cloud: PointCloud, sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Projection and its Jacobian DΠ_σ(y) = Cov_w(z) / σ².

    Returns:
        Tuple of (projection, jacobian) for a single y or (batch) arrays
    """
    _check(cloud, sigma)
    Y, single = as_batch(y, cloud.ambient_dim, "y")
    Z = cloud.points
    proj = np.empty_like(Y)
    jac = np.empty((Y.shape[0], Z.shape[1], Z.shape[1]))
    chunk = _chunk_rows(Z.shape[0])
    for start in range(0, Y.shape[0], chunk):
        w = _shifted_weights(Y[start:start + chunk], Z, sigma)
        mean = w @ Z
        second = np.einsum("bn,ni,nj->bij", w, Z, Z)
        proj[start:start + chunk] = mean
        jac[start:start + chunk] = (second - mean[:, :, None] * mean[:, None, :]) / (sigma * sigma)
    if single:
        return proj[0], jac[0]
    return proj, jac
