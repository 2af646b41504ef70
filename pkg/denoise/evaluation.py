"""Accuracy of approximate projections against the analytic ground truth.

Evaluation points are placed at controlled distances along true normals of
an analytic manifold; errors are |Π_approx(y) − Π(y)|.
"""

from typing import Callable, Dict, List, Sequence

import numpy as np

from manifolds.analytic import AnalyticManifold
from manifolds.kernel import kernel_projection
from manifolds.point_cloud import PointCloud

Projector = Callable[[np.ndarray], np.ndarray]


def normal_offsets(
    manifold: AnalyticManifold,
    distance: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n points at the given distance from the manifold along random unit normals."""
    base = manifold.sample(n, 0.0, rng)
    return base + distance * _unit_normals(manifold, base, rng)


def _unit_normals(manifold: AnalyticManifold, base: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    _, jac = manifold.zeta(base)
    # on the manifold Dζ is the orthogonal projector onto the normal space
    direction = np.einsum("nij,nj->ni", jac, rng.standard_normal(base.shape))
    return direction / np.linalg.norm(direction, axis=1, keepdims=True)


def projection_errors(
    project: Projector,
    manifold: AnalyticManifold,
    distances: Sequence[float],
    n: int,
    seed: int,
) -> List[Dict]:
    """Median and 90th-percentile projection error per distance bucket.

    Args:
        project: Batched approximate projection (n, l) -> (n, l)
        manifold: Ground-truth manifold
        distances: Offsets from the surface, one bucket each
        n: Evaluation points per bucket
        seed: Seed for the evaluation points

    Returns:
        Rows {distance_bucket, median_error, p90_error}
    """
    rng = np.random.default_rng(seed)
    rows = []
    for distance in distances:
        y = normal_offsets(manifold, float(distance), n, rng)
        err = np.linalg.norm(project(y) - manifold.project(y), axis=1)
        rows.append({
            "distance_bucket": float(distance),
            "median_error": float(np.median(err)),
            "p90_error": float(np.percentile(err, 90)),
        })
    return rows


def default_buckets(sigma: float) -> List[float]:
    return [0.0, sigma / 2.0, sigma, 2.0 * sigma]


def kernel_agreement(
    project: Projector,
    cloud: PointCloud,
    sigma: float,
    manifold: AnalyticManifold,
    n: int,
    seed: int,
) -> Dict:
    """Discrepancy between a learned projection and the kernel oracle within σ of the manifold."""
    rng = np.random.default_rng(seed)
    distances = rng.uniform(0.0, sigma, n)
    base = manifold.sample(n, 0.0, rng)
    y = base + distances[:, None] * _unit_normals(manifold, base, rng)
    gap = np.linalg.norm(project(y) - kernel_projection(y, cloud, sigma), axis=1)
    return {
        "median_gap": float(np.median(gap)),
        "p90_gap": float(np.percentile(gap, 90)),
        "bound_5_sigma_sq": 5.0 * sigma * sigma,
    }
