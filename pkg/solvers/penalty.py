"""Geodesic interpolation with a quadratic penalty on a distance field.

Used when the manifold is only known through a distance function d >= 0 with
zero level set 𝒵 (e.g. a neural distance field); no normal information is
needed.
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np

from config import config
from config.schemas import SolverConfig
from geometry.energy import LocalEnergy
from manifolds.analytic import AnalyticManifold
from solvers.auglag import SolverReport
from solvers.bfgs import bfgs_minimize
from solvers.path import DiscretePath, constant_jump_path, path_energy
from utils.errors import DimensionMismatch, NotConverged

logger = logging.getLogger(__name__)

# below this distance the gradient of d is replaced by zero
ZERO_SET_TOL = 1e-12

DistanceField = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


class ManifoldDistance:
    """Unsigned distance to an analytic manifold, d = |ζ| with ∇d = ζ/|ζ|."""

    def __init__(self, manifold: AnalyticManifold):
        self.manifold = manifold

    def __call__(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        zeta, _ = self.manifold.zeta(np.atleast_2d(Z))
        d = np.linalg.norm(zeta, axis=1)
        safe = np.where(d < ZERO_SET_TOL, 1.0, d)
        grad = np.where((d < ZERO_SET_TOL)[:, None], 0.0, zeta / safe[:, None])
        return d, grad


def penalty_objective(W: LocalEnergy, dist_fn: DistanceField, path: DiscretePath, mu: float):
    """x -> (E^K + μ/2 Σ d(z_k)², gradient) over the flattened interior points."""

    def fun(x):
        trial = path.with_interior(x)
        energy, grad = path_energy(W, trial)
        d, dgrad = dist_fn(trial.interior)
        d = np.asarray(d, dtype=float)
        weight = np.where(d < ZERO_SET_TOL, 0.0, mu * d)
        grad = grad + weight[:, None] * np.asarray(dgrad, dtype=float)
        return energy + 0.5 * mu * float(np.sum(d * d)), grad.ravel()

    return fun


def geodesic_penalty(
    W: LocalEnergy,
    dist_fn: DistanceField,
    z0,
    zK,
    K: int,
    cfg: Optional[SolverConfig] = None,
    eta_star: float = config.PENALTY_ETA_STAR,
) -> Tuple[DiscretePath, SolverReport]:
    """Discrete geodesic under a distance-field constraint.

    The penalty weight μ grows by cfg.alpha until Σ d(z_k)² <= eta_star² or μ
    exceeds cfg.mu_max. Each inner solve runs to max(1/μ, ω*); once the
    constraint holds, a last solve at ω* polishes the path.

    Args:
        W: Local energy
        dist_fn: Batched distance field Z -> (d, ∇d)
        z0: Start point
        zK: End point
        K: Number of segments
        cfg: Solver settings (mu0, alpha, mu_max, omega_star, max_outer)
        eta_star: Target for the root of the summed squared distances

    Returns:
        Tuple of (path, report)

    Raises:
        NotConverged: When μ exceeds mu_max or max_outer is reached and
            cfg.raise_on_failure is set
    """
    cfg = cfg or SolverConfig(K=K)
    z0 = np.asarray(z0, dtype=float).ravel()
    zK = np.asarray(zK, dtype=float).ravel()
    if z0.shape != zK.shape:
        raise DimensionMismatch(f"endpoint dimensions differ: {z0.shape[0]} vs {zK.shape[0]}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")

    if K == 1:
        path = DiscretePath(np.stack([z0, zK]))
        energy, _ = path_energy(W, path)
        return path, SolverReport(True, 0, 0.0, 0.0, energy, "accuracy", eta_star, cfg.mu0)

    path = constant_jump_path(z0, zK, K)
    mu = cfg.mu0
    stop_reason = "max_iter"
    sq = np.inf
    grad_norm = np.inf
    inner_iterations = 0
    ls_failures = 0
    outer = 0

    def solve(tol):
        nonlocal path, sq, grad_norm, inner_iterations, ls_failures
        x, inner = bfgs_minimize(
            penalty_objective(W, dist_fn, path, mu),
            path.interior.ravel(),
            grad_tol=tol,
            max_iter=cfg.bfgs_max_iter,
            restarts=cfg.bfgs_restarts,
        )
        path = path.with_interior(x)
        d, _ = dist_fn(path.interior)
        sq = float(np.sum(np.asarray(d) ** 2))
        grad_norm = inner.grad_norm
        inner_iterations += inner.iterations
        ls_failures += int(inner.line_search_failed)

    for outer in range(1, cfg.max_outer + 1):
        solve(max(1.0 / mu, cfg.omega_star))
        logger.debug("penalty outer %d: mu=%.3e sum d^2=%.3e |grad|=%.3e", outer, mu, sq, grad_norm)
        if sq <= eta_star ** 2:
            if grad_norm > cfg.omega_star:
                solve(cfg.omega_star)
            if sq <= eta_star ** 2:
                stop_reason = "accuracy"
                break
        mu = cfg.alpha * mu
        if mu > cfg.mu_max:
            stop_reason = "max_penalty"
            break

    energy, _ = path_energy(W, path)
    report = SolverReport(
        converged=stop_reason == "accuracy",
        outer_iterations=outer,
        constraint_norm=float(np.sqrt(sq)),
        grad_norm=grad_norm,
        energy=energy,
        stop_reason=stop_reason,
        eta_star=eta_star,
        mu=mu,
        inner_iterations=inner_iterations,
        line_search_failures=ls_failures,
    )
    if not report.converged:
        logger.warning("penalty geodesic K=%d stopped on %s (sum d^2=%.3e)", K, stop_reason, sq)
        if cfg.raise_on_failure:
            raise NotConverged(report, path)
    return path, report
