"""Analytic ground-truth manifolds with exact nearest-point projections.

Every manifold evaluates the projection Π, the implicit residual ζ = id − Π and
its Jacobian in closed form, vectorised over a leading batch axis.
"""

import logging
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import null_space, orth

from config import config
from config.schemas import ManifoldConfig
from manifolds.point_cloud import PointCloud
from utils.errors import DimensionMismatch, SingularPoint

logger = logging.getLogger(__name__)


def as_batch(p, dim: int, name: str = "p") -> Tuple[np.ndarray, bool]:
    """Return p as an (n, dim) float array plus whether a single vector was given."""
    arr = np.asarray(p, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatch(f"{name} must have trailing dimension {dim}, got shape {np.shape(p)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr, single


class AnalyticManifold(ABC):
    """Smooth closed (or flat) submanifold of R^l with an exact projection."""

    kind: str = "abstract"

    def __init__(self, ambient_dim: int, intrinsic_dim: int, guard: float = config.SINGULAR_GUARD):
        self.ambient_dim = ambient_dim
        self.intrinsic_dim = intrinsic_dim
        self.guard = guard

    # -- subclass hooks ---------------------------------------------------
    @abstractmethod
    def _singular_distance(self, P: np.ndarray) -> np.ndarray:
        """Distance of each row to the set where the nearest point is not unique."""

    @abstractmethod
    def _project(self, P: np.ndarray) -> np.ndarray:
        """Nearest points for non-singular rows."""

    @abstractmethod
    def _projection_jacobian(self, P: np.ndarray) -> np.ndarray:
        """DΠ for each row, shape (n, l, l)."""

    @abstractmethod
    def _sample_clean(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points distributed uniformly with respect to surface measure."""

    # -- public API --------------------------------------------------------
    def _checked(self, p) -> Tuple[np.ndarray, bool]:
        P, single = as_batch(p, self.ambient_dim)
        dist = self._singular_distance(P)
        bad = dist < self.guard
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise SingularPoint(
                f"{self.kind}: nearest point of {P[idx].tolist()} is not unique "
                f"(distance {dist[idx]:.3e} to singular set)"
            )
        return P, single

    def project(self, p) -> np.ndarray:
        P, single = self._checked(p)
        out = self._project(P)
        return out[0] if single else out

    def zeta(self, p) -> Tuple[np.ndarray, np.ndarray]:
        """Residual p − Π(p) and its Jacobian I − DΠ(p)."""
        P, single = self._checked(p)
        residual = P - self._project(P)
        jac = np.eye(self.ambient_dim)[None, :, :] - self._projection_jacobian(P)
        if single:
            return residual[0], jac[0]
        return residual, jac

    def _distance(self, P: np.ndarray) -> np.ndarray:
        P, _ = self._checked(P)
        return np.linalg.norm(P - self._project(P), axis=1)

    def distance(self, p):
        """Unsigned distance to the manifold; defined on the singular set as well."""
        P, single = as_batch(p, self.ambient_dim)
        d = self._distance(P)
        return float(d[0]) if single else d

    def sample(self, n: int, noise_sd: float, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        if noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        points = self._sample_clean(n, rng)
        if noise_sd > 0:
            points = points + rng.normal(scale=noise_sd, size=points.shape)
        return points

    def tangent_basis(self, x) -> np.ndarray:
        """Orthonormal basis (columns) of ker Dζ at the projection of x."""
        _, jac = self.zeta(self.project(x))
        return null_space(jac, rcond=1e-8)

    def normal_basis(self, x) -> np.ndarray:
        """Orthonormal basis (columns) of the normal space at the projection of x."""
        _, jac = self.zeta(self.project(x))
        return orth(jac, rcond=1e-8)

    def describe(self) -> dict:
        return {"kind": self.kind, "ambient_dim": self.ambient_dim}


class Sphere(AnalyticManifold):
    """Round sphere of given radius and centre in R^dim."""

    kind = "sphere"

    def __init__(self, radius: float = 1.0, center: Optional[np.ndarray] = None, dim: int = 3):
        super().__init__(dim, dim - 1)
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def _singular_distance(self, P):
        return np.linalg.norm(P - self.center, axis=1)

    def _distance(self, P):
        """Closed form, finite at the centre too, so no singular-set check."""
        return np.abs(np.linalg.norm(P - self.center, axis=1) - self.radius)

    def _project(self, P):
        d = P - self.center
        s = np.linalg.norm(d, axis=1, keepdims=True)
        return self.center + self.radius * d / s

    def _projection_jacobian(self, P):
        d = P - self.center
        s = np.linalg.norm(d, axis=1)
        n = d / s[:, None]
        eye = np.eye(self.ambient_dim)[None]
        return (self.radius / s)[:, None, None] * (eye - n[:, :, None] * n[:, None, :])

    def _sample_clean(self, n, rng):
        g = rng.standard_normal((n, self.ambient_dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return self.center + self.radius * g

    def describe(self):
        return {"kind": self.kind, "radius": self.radius, "center": self.center.tolist()}


class Circle2D(Sphere):
    """Circle in the plane."""

    kind = "circle"

    def __init__(self, radius: float = 1.0, center: Optional[np.ndarray] = None):
        super().__init__(radius=radius, center=center, dim=2)


class Torus(AnalyticManifold):
    """Torus of revolution around the z-axis in R^3.

    Projection is two-stage: first onto the core circle of radius R in the
    xy-plane, then radially onto the tube of radius r around it.
    """

    kind = "torus"

    def __init__(self, major_radius: float = config.TORUS_MAJOR_RADIUS,
                 minor_radius: float = config.TORUS_MINOR_RADIUS):
        super().__init__(3, 2)
        if not 0 < minor_radius < major_radius:
            raise ValueError("torus needs 0 < r < R")
        self.R = float(major_radius)
        self.r = float(minor_radius)

    def point(self, theta, phi) -> np.ndarray:
        """Surface point for revolution angle theta and tube angle phi."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        ring = self.R + self.r * np.cos(phi)
        return np.stack([ring * np.cos(theta), ring * np.sin(theta), self.r * np.sin(phi)], axis=-1)

    def _core(self, P):
        rho = np.hypot(P[:, 0], P[:, 1])
        u = np.zeros_like(P)
        u[:, 0] = P[:, 0] / rho
        u[:, 1] = P[:, 1] / rho
        return rho, u

    def _singular_distance(self, P):
        rho = np.hypot(P[:, 0], P[:, 1])
        to_core = np.hypot(rho - self.R, P[:, 2])
        return np.minimum(rho, to_core)

    def _distance(self, P):
        """Closed form, finite on the axis and core circle too, so no singular-set check."""
        rho = np.hypot(P[:, 0], P[:, 1])
        return np.abs(np.hypot(rho - self.R, P[:, 2]) - self.r)

    def _project(self, P):
        _, u = self._core(P)
        c = self.R * u
        d = P - c
        s = np.linalg.norm(d, axis=1, keepdims=True)
        return c + self.r * d / s

    def _projection_jacobian(self, P):
        rho, u = self._core(P)
        c = self.R * u
        d = P - c
        s = np.linalg.norm(d, axis=1)
        n = d / s[:, None]
        eye = np.eye(3)[None]
        horizontal = np.diag([1.0, 1.0, 0.0])[None]
        dc = (self.R / rho)[:, None, None] * (horizontal - u[:, :, None] * u[:, None, :])
        tube = eye - n[:, :, None] * n[:, None, :]
        return dc + (self.r / s)[:, None, None] * np.einsum("nij,njk->nik", tube, eye - dc)

    def _sample_clean(self, n, rng):
        # area element is proportional to R + r cos(phi): rejection in phi
        thetas, phis = [], []
        accepted = 0
        while accepted < n:
            batch = max(2 * (n - accepted), 64)
            theta = rng.uniform(0.0, 2.0 * np.pi, batch)
            phi = rng.uniform(0.0, 2.0 * np.pi, batch)
            keep = rng.uniform(0.0, 1.0, batch) < (self.R + self.r * np.cos(phi)) / (self.R + self.r)
            thetas.append(theta[keep])
            phis.append(phi[keep])
            accepted += int(keep.sum())
        theta = np.concatenate(thetas)[:n]
        phi = np.concatenate(phis)[:n]
        return self.point(theta, phi)

    def describe(self):
        return {"kind": self.kind, "major_radius": self.R, "minor_radius": self.r}


class AffineSubspace(AnalyticManifold):
    """Affine subspace basepoint + span(basis rows)."""

    kind = "plane"

    def __init__(self, basepoint, basis, extent: float = 1.0):
        basepoint = np.asarray(basepoint, dtype=float)
        basis = np.atleast_2d(np.asarray(basis, dtype=float))
        if basis.shape[1] != basepoint.shape[0]:
            raise DimensionMismatch("basis rows must live in the ambient space of the basepoint")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=1e-12, rtol=0.0):
            raise ValueError("affine subspace basis must be orthonormal to 1e-12")
        super().__init__(basepoint.shape[0], basis.shape[0])
        self.basepoint = basepoint
        self.basis = basis
        self.extent = float(extent)
        self._proj = basis.T @ basis

    def _singular_distance(self, P):
        return np.full(P.shape[0], np.inf)

    def _project(self, P):
        return self.basepoint + (P - self.basepoint) @ self._proj

    def _projection_jacobian(self, P):
        return np.broadcast_to(self._proj, (P.shape[0],) + self._proj.shape).copy()

    def _sample_clean(self, n, rng):
        coeffs = rng.uniform(-self.extent, self.extent, (n, self.intrinsic_dim))
        return self.basepoint + coeffs @ self.basis

    def describe(self):
        return {"kind": self.kind, "basepoint": self.basepoint.tolist(), "basis": self.basis.tolist()}


def make_manifold(cfg: ManifoldConfig) -> AnalyticManifold:
    """Build an analytic manifold from its config."""
    if cfg.kind == "torus":
        return Torus(cfg.major_radius, cfg.minor_radius)
    if cfg.kind == "sphere":
        return Sphere(cfg.radius, dim=cfg.dim)
    if cfg.kind == "circle":
        return Circle2D(cfg.radius)
    basis = cfg.basis if cfg.basis is not None else np.eye(cfg.dim)[:2]
    basepoint = cfg.basepoint if cfg.basepoint is not None else np.zeros(cfg.dim)
    return AffineSubspace(basepoint, basis)


def analytic_project(manifold: AnalyticManifold, p) -> np.ndarray:
    """Unique nearest point on the manifold."""
    return manifold.project(p)


def analytic_zeta(manifold: AnalyticManifold, p) -> Tuple[np.ndarray, np.ndarray]:
    """Residual p − Π(p) with its exact Jacobian."""
    return manifold.zeta(p)


def ambient_distance(manifold: AnalyticManifold, p):
    """Unsigned Euclidean distance to the manifold."""
    return manifold.distance(p)


def sample_cloud(manifold: AnalyticManifold, n: int, noise_sd: float, seed: int) -> PointCloud:
    """Draw an area-uniform noisy point cloud, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    points = manifold.sample(n, noise_sd, rng)
    logger.debug("sampled %d points on %s (noise %.3g, seed %d)", n, manifold.kind, noise_sd, seed)
    return PointCloud(points=points, seed=seed, noise_sd=noise_sd)
