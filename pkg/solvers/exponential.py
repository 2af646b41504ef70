"""Discrete exponential map by forward geodesic extrapolation.

Given z_{k-1}, z_k the next point z_{k+1} and a multiplier λ_k minimise

    F(z, λ) = |K(∂_2 W(z_{k-1}, z_k) + ∂_1 W(z_k, z)) − Dζ(z_k)ᵀλ|² + μ/2 |ζ(z)|²

i.e. the interior stationarity condition of the discrete path energy at z_k
plus a penalty keeping z_{k+1} on the manifold.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from config.schemas import ExpConfig
from geometry.energy import LocalEnergy
from manifolds.implicit import ImplicitRep
from solvers.bfgs import bfgs_minimize
from solvers.path import DiscretePath
from utils.errors import DegenerateStep, DimensionMismatch, NotConverged

logger = logging.getLogger(__name__)

# consecutive points closer than this give no direction to extrapolate
MIN_STEP = 1e-12


@dataclass
class ExpReport:
    converged: bool
    iterations: int
    residual: float
    constraint_norm: float
    stop_reason: str

    def to_dict(self) -> dict:
        return asdict(self)


def exp_functional(W: LocalEnergy, rep: ImplicitRep, z_prev: np.ndarray, z_cur: np.ndarray, K: int, penalty: float):
    """x = (z_next, λ) -> (F, ∇F) for one extrapolation step."""
    l = z_cur.shape[0]
    _, _, g_prev = W(z_prev, z_cur)
    _, jac_cur = rep.zeta(z_cur)

    def fun(x):
        z, lam = x[:l], x[l:]
        _, g_next, _ = W(z_cur, z)
        r = K * (g_prev + g_next) - jac_cur.T @ lam
        zeta, jac = rep.zeta(z)
        mixed = W.mixed_hessian(z_cur[None], z[None])[0]
        value = float(r @ r) + 0.5 * penalty * float(zeta @ zeta)
        grad_z = 2.0 * K * (mixed.T @ r) + penalty * (jac.T @ zeta)
        grad_lam = -2.0 * (jac_cur @ r)
        return value, np.concatenate([grad_z, grad_lam])

    return fun


def exp_step(
    W: LocalEnergy,
    zeta: ImplicitRep,
    z_prev,
    z_cur,
    cfg: Optional[ExpConfig] = None,
    K: int = 1,
) -> Tuple[np.ndarray, np.ndarray, ExpReport]:
    """One step of the discrete exponential map.

    Args:
        W: Local energy
        zeta: Implicit representation
        z_prev: Point z_{k-1}
        z_cur: Point z_k
        cfg: Exponential map settings (penalty weight, tolerance, BFGS budget)
        K: Path resolution scaling the energy gradient

    Returns:
        Tuple of (z_next, lambda, report)

    Raises:
        DegenerateStep: If z_prev and z_cur coincide
        NotConverged: If the joint minimisation fails and cfg.raise_on_failure is set
    """
    cfg = cfg or ExpConfig()
    z_prev = np.asarray(z_prev, dtype=float).ravel()
    z_cur = np.asarray(z_cur, dtype=float).ravel()
    if z_prev.shape != z_cur.shape or z_cur.shape[0] != zeta.ambient_dim:
        raise DimensionMismatch(f"exp_step points must have dimension {zeta.ambient_dim}")
    if np.linalg.norm(z_cur - z_prev) < MIN_STEP:
        raise DegenerateStep("z_prev and z_cur coincide; no direction to extrapolate")

    l = z_cur.shape[0]
    x0 = np.concatenate([2.0 * z_cur - z_prev, np.zeros(l)])
    fun = exp_functional(W, zeta, z_prev, z_cur, K, cfg.penalty)
    x, inner = bfgs_minimize(fun, x0, grad_tol=cfg.grad_tol, max_iter=cfg.max_iter, restarts=cfg.bfgs_restarts)

    z_next, lam = x[:l], x[l:]
    zeta_next, _ = zeta.zeta(z_next)
    # F vanishes at an exact solution, so a residual at round-off level also counts
    converged = inner.converged or inner.fun <= cfg.grad_tol ** 2
    if converged:
        stop_reason = "accuracy"
    elif inner.line_search_failed:
        stop_reason = "line_search"
    else:
        stop_reason = "max_iter"
    report = ExpReport(
        converged=converged,
        iterations=inner.iterations,
        residual=inner.fun,
        constraint_norm=float(np.linalg.norm(zeta_next)),
        stop_reason=stop_reason,
    )
    if not converged:
        logger.warning("exp step stopped on %s (F=%.3e)", stop_reason, inner.fun)
        if cfg.raise_on_failure:
            raise NotConverged(report, z_next)
    return z_next, lam, report


def gauss_newton_correction(rep: ImplicitRep, z: np.ndarray, rcond: float) -> np.ndarray:
    """One Gauss-Newton step towards ζ(z) = 0 (least-squares solve of Dζ δ = −ζ)."""
    zeta, jac = rep.zeta(z)
    delta, *_ = np.linalg.lstsq(jac, -zeta, rcond=rcond)
    return z + delta


def discrete_exp(
    W: LocalEnergy,
    zeta: ImplicitRep,
    z0,
    v0,
    K: int,
    cfg: Optional[ExpConfig] = None,
) -> DiscretePath:
    """Discrete geodesic shot from z0 with initial velocity v0 = K(z_1 − z_0).

    The first point z_1 = z0 + v0/K is pulled onto the manifold by one
    Gauss-Newton step, then K−1 exponential steps follow.

    Returns:
        Path z_0..z_K; its last point is Exp^K_{z0}(v0)
    """
    cfg = cfg or ExpConfig()
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    z0 = np.asarray(z0, dtype=float).ravel()
    v0 = np.asarray(v0, dtype=float).ravel()
    if z0.shape != v0.shape:
        raise DimensionMismatch(f"z0 has dimension {z0.shape[0]} but v0 has {v0.shape[0]}")

    pts = np.empty((K + 1, z0.shape[0]))
    pts[0] = z0
    pts[1] = gauss_newton_correction(zeta, z0 + v0 / K, cfg.gauss_newton_rcond)
    for k in range(1, K):
        pts[k + 1], _, report = exp_step(W, zeta, pts[k - 1], pts[k], cfg, K=K)
        logger.debug("exp step %d: F=%.3e |zeta|=%.3e", k, report.residual, report.constraint_norm)
    return DiscretePath(pts)
