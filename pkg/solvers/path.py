"""Discrete paths, the discrete path energy and path comparison helpers."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from geometry.energy import LocalEnergy
from utils.errors import DimensionMismatch


@dataclass
class DiscretePath:
    """Points z_0..z_K stacked as a (K+1, l) array."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.array(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 2:
            raise DimensionMismatch("a discrete path needs at least two points of equal dimension")

    @property
    def K(self) -> int:
        return self.points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def interior(self) -> np.ndarray:
        return self.points[1:-1]

    def with_interior(self, interior: np.ndarray) -> "DiscretePath":
        pts = self.points.copy()
        pts[1:-1] = np.reshape(interior, (self.K - 1, self.dim))
        return DiscretePath(pts)

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)


def path_energy(W: LocalEnergy, path: DiscretePath) -> Tuple[float, np.ndarray]:
    """E^K = K Σ_k W(z_{k−1}, z_k) and its gradient w.r.t. the interior points.

    Returns:
        Tuple of (energy, gradient of shape (K−1, l))
    """
    pts = path.points
    K = path.K
    vals, g0, g1 = W.evaluate(pts[:-1], pts[1:])
    energy = K * float(np.sum(vals))
    # z_k is the second argument of segment k-1 and the first of segment k
    grad = K * (g1[:-1] + g0[1:])
    return energy, grad


def constant_jump_path(z0, zK, K: int) -> DiscretePath:
    """Initial path resting at z0 up to ⌊K/2⌋ and jumping to zK afterwards."""
    z0 = np.asarray(z0, dtype=float)
    zK = np.asarray(zK, dtype=float)
    pts = np.empty((K + 1, z0.shape[0]))
    half = K // 2
    pts[: half + 1] = z0
    pts[half + 1:] = zK
    return DiscretePath(pts)


def linear_path(z0, zK, K: int) -> DiscretePath:
    z0 = np.asarray(z0, dtype=float)
    zK = np.asarray(zK, dtype=float)
    s = np.linspace(0.0, 1.0, K + 1)[:, None]
    return DiscretePath((1.0 - s) * z0 + s * zK)


def arclength_parameters(points: np.ndarray) -> np.ndarray:
    """Normalised cumulative arclength of each vertex, from 0 to 1."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0.0:
        return np.linspace(0.0, 1.0, points.shape[0])
    return cum / total


def arclength_resample(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Points on the polyline at normalised arclength positions s."""
    t = arclength_parameters(points)
    return np.stack([np.interp(s, t, points[:, j]) for j in range(points.shape[1])], axis=1)


def reparametrized_distances(path: DiscretePath, reference: DiscretePath) -> np.ndarray:
    """Distance of each vertex to the reference point at the same normalised arclength."""
    s = arclength_parameters(path.points)
    matched = arclength_resample(reference.points, s)
    return np.linalg.norm(path.points - matched, axis=1)
