"""Geodesic interpolation by the augmented Lagrangian method.

The interior points of a discrete path minimise

    L_A(path, Λ, μ) = E^K(path) − Λ:ζ(path) + μ/2 |ζ(path)|²

with BFGS for a fixed (Λ, μ); after each inner solve either the multiplier
is updated (constraint small enough) or the penalty grows.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from config import config
from config.schemas import SolverConfig
from geometry.energy import LocalEnergy
from manifolds.implicit import ImplicitRep, eta_star_rule
from manifolds.point_cloud import PointCloud
from solvers.bfgs import bfgs_minimize
from solvers.path import DiscretePath, constant_jump_path, path_energy
from utils.errors import DimensionMismatch, NotConverged

logger = logging.getLogger(__name__)

STOP_REASONS = ("accuracy", "max_penalty", "max_iter")


@dataclass
class SolverReport:
    """Outcome of a constrained geodesic solve."""

    converged: bool
    outer_iterations: int
    constraint_norm: float
    grad_norm: float
    energy: float
    stop_reason: str
    eta_star: float
    mu: float
    inner_iterations: int = 0
    line_search_failures: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_eta_star(cfg: SolverConfig, rep: ImplicitRep, K: int, cloud: Optional[PointCloud] = None) -> float:
    """Final constraint tolerance: explicit value, rule of thumb on the cloud, or the fixed default."""
    if cfg.eta_star != "auto":
        return float(cfg.eta_star)
    if cloud is None:
        return config.ETA_STAR
    return eta_star_rule(rep, cloud.points, K, floor=config.ETA_STAR_FLOOR)


def _check_endpoints(rep: ImplicitRep, z0, zK) -> Tuple[np.ndarray, np.ndarray]:
    z0 = np.asarray(z0, dtype=float).ravel()
    zK = np.asarray(zK, dtype=float).ravel()
    if z0.shape != zK.shape or z0.shape[0] != rep.ambient_dim:
        raise DimensionMismatch(
            f"endpoints must both have dimension {rep.ambient_dim}, got {z0.shape[0]} and {zK.shape[0]}"
        )
    return z0, zK


def augmented_lagrangian(W: LocalEnergy, rep: ImplicitRep, path: DiscretePath, multiplier: np.ndarray, mu: float):
    """Objective x -> (L_A, ∇L_A) over the flattened interior points of `path`."""

    def fun(x):
        trial = path.with_interior(x)
        energy, grad = path_energy(W, trial)
        zeta, jac = rep.zeta_batch(trial.interior)
        value = energy - float(np.sum(multiplier * zeta)) + 0.5 * mu * float(np.sum(zeta * zeta))
        grad = grad + np.einsum("nij,ni->nj", jac, mu * zeta - multiplier)
        return value, grad.ravel()

    return fun


def geodesic_auglag(
    W: LocalEnergy,
    zeta: ImplicitRep,
    z0,
    zK,
    K: int,
    cfg: Optional[SolverConfig] = None,
    cloud: Optional[PointCloud] = None,
    initial_path: Optional[DiscretePath] = None,
) -> Tuple[DiscretePath, SolverReport]:
    """Discrete geodesic between z0 and zK with K segments.

    Args:
        W: Local energy
        zeta: Implicit representation of the manifold
        z0: Start point (kept fixed)
        zK: End point (kept fixed)
        K: Number of segments, at least 2
        cfg: Solver settings; defaults from config
        cloud: Encoded samples used by the η* rule of thumb when eta_star is 'auto'
        initial_path: Starting path; the constant-jump path if omitted

    Returns:
        Tuple of (path, report)

    Raises:
        NotConverged: On max_penalty / max_iter stops when cfg.raise_on_failure is set
    """
    cfg = cfg or SolverConfig(K=K)
    if K < 2:
        raise ValueError(f"geodesic interpolation needs K >= 2, got {K}")
    z0, zK = _check_endpoints(zeta, z0, zK)
    if initial_path is None:
        path = constant_jump_path(z0, zK, K)
    else:
        if initial_path.K != K or initial_path.dim != z0.shape[0]:
            raise DimensionMismatch(f"initial path has K={initial_path.K}, dim={initial_path.dim}; expected K={K}")
        path = DiscretePath(initial_path.points)
        path.points[0] = z0
        path.points[-1] = zK

    eta_star = resolve_eta_star(cfg, zeta, K, cloud)
    mu = cfg.mu0
    eta = mu ** -0.1
    omega = 1.0 / mu
    multiplier = np.zeros((K - 1, z0.shape[0]))

    stop_reason = "max_iter"
    constraint_norm = np.inf
    grad_norm = np.inf
    inner_iterations = 0
    ls_failures = 0
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        objective = augmented_lagrangian(W, zeta, path, multiplier, mu)
        x, inner = bfgs_minimize(
            objective,
            path.interior.ravel(),
            grad_tol=max(omega, cfg.inner_tol_floor),
            max_iter=cfg.bfgs_max_iter,
            restarts=cfg.bfgs_restarts,
        )
        inner_iterations += inner.iterations
        ls_failures += int(inner.line_search_failed)
        path = path.with_interior(x)
        residual = zeta.residual_batch(path.interior)
        constraint_norm = float(np.linalg.norm(residual))
        grad_norm = inner.grad_norm
        logger.debug(
            "outer %d: mu=%.3e |zeta|=%.3e |grad|=%.3e eta=%.3e omega=%.3e",
            outer, mu, constraint_norm, grad_norm, eta, omega,
        )

        if constraint_norm <= eta_star and grad_norm <= cfg.omega_star:
            stop_reason = "accuracy"
            break
        if constraint_norm <= eta:
            multiplier = multiplier - mu * residual
            eta = eta / mu ** 0.9
            omega = omega / mu
        else:
            mu = cfg.alpha * mu
            eta = mu ** -0.1
            omega = 1.0 / mu
            if mu > cfg.mu_max:
                stop_reason = "max_penalty"
                break

    energy, _ = path_energy(W, path)
    report = SolverReport(
        converged=stop_reason == "accuracy",
        outer_iterations=outer,
        constraint_norm=constraint_norm,
        grad_norm=grad_norm,
        energy=energy,
        stop_reason=stop_reason,
        eta_star=eta_star,
        mu=mu,
        inner_iterations=inner_iterations,
        line_search_failures=ls_failures,
    )
    if report.converged:
        logger.info("geodesic K=%d converged after %d outer iterations (E=%.6e)", K, outer, energy)
    else:
        logger.warning("geodesic K=%d stopped on %s (|zeta|=%.3e, |grad|=%.3e)", K, stop_reason, constraint_norm, grad_norm)
        if cfg.raise_on_failure:
            raise NotConverged(report, path)
    return path, report


def refine_path(path: DiscretePath, rep: ImplicitRep) -> DiscretePath:
    """Insert projected midpoints, doubling K."""
    pts = path.points
    mids = rep.project_batch(0.5 * (pts[:-1] + pts[1:]))
    out = np.empty((2 * path.K + 1, path.dim))
    out[0::2] = pts
    out[1::2] = mids
    return DiscretePath(out)


def geodesic_cascadic(
    W: LocalEnergy,
    zeta: ImplicitRep,
    z0,
    zK,
    K: int,
    cfg: Optional[SolverConfig] = None,
    coarse_k: int = 8,
    cloud: Optional[PointCloud] = None,
) -> Tuple[DiscretePath, SolverReport]:
    """High-resolution geodesic solved coarse to fine.

    K is halved while it stays even and above coarse_k; the coarsest level
    starts from the constant-jump path and every finer level from the
    refined previous solution.
    """
    cfg = cfg or SolverConfig(K=K)
    levels = [K]
    while levels[-1] % 2 == 0 and levels[-1] // 2 >= max(coarse_k, 2):
        levels.append(levels[-1] // 2)
    levels.reverse()

    coarse_cfg = cfg.model_copy(update={"raise_on_failure": False})
    path, report = None, None
    for level in levels:
        initial = refine_path(path, zeta) if path is not None else None
        level_cfg = cfg if level == K else coarse_cfg
        path, report = geodesic_auglag(W, zeta, z0, zK, level, level_cfg, cloud=cloud, initial_path=initial)
        logger.debug("cascade level K=%d: %s", level, report.stop_reason)
    return path, report


def tangent_gradient_norms(W: LocalEnergy, rep: ImplicitRep, path: DiscretePath, threshold: float = 0.5) -> np.ndarray:
    """Norm of ∇E^K(z_k) projected onto the numeric kernel of Dζ(z_k), per interior point.

    The kernel is spanned by right singular vectors of Dζ whose singular value
    is below `threshold`.
    """
    _, grad = path_energy(W, path)
    _, jac = rep.zeta_batch(path.interior)
    norms = np.empty(path.K - 1)
    for k in range(path.K - 1):
        _, s, vt = np.linalg.svd(jac[k])
        basis = vt[s < threshold]
        norms[k] = np.linalg.norm(basis @ grad[k])
    return norms
