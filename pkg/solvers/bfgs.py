"""Dense inverse-Hessian BFGS with a strong-Wolfe line search.

Line-search failures trigger a restart from the best iterate with the
identity as inverse Hessian (tenacity retry policy); if all restarts fail the
best iterate is returned with the failure flagged in the report.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from config import config
from utils.errors import LineSearchFailure

logger = logging.getLogger(__name__)

FunGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]

# curvature pairs with s·y below this fraction of |s||y| are skipped
CURVATURE_SKIP = 1e-10


@dataclass
class BfgsReport:
    converged: bool
    iterations: int
    fun: float
    grad_norm: float
    evaluations: int
    line_search_failed: bool = False
    restarts: int = 0


class _Counted:
    """Objective wrapper counting evaluations."""

    def __init__(self, fun: FunGrad):
        self.fun = fun
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        f, g = self.fun(x)
        return float(f), np.asarray(g, dtype=float)


def _cubic_min(a, fa, da, b, fb, db):
    """Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db), or None."""
    if a == b:
        return None
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0.0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = db - da + 2.0 * d2
    if denom == 0.0:
        return None
    return b - (b - a) * (db + d2 - d1) / denom


def strong_wolfe_line_search(
    fun: FunGrad,
    x: np.ndarray,
    f0: float,
    g0: np.ndarray,
    p: np.ndarray,
    alpha0: float = 1.0,
    c1: float = config.WOLFE_C1,
    c2: float = config.WOLFE_C2,
    max_iter: int = 30,
    max_zoom: int = 40,
) -> Tuple[float, float, np.ndarray]:
    """Step length satisfying the strong Wolfe conditions along p.

    Returns:
        Tuple of (alpha, f(x + alpha p), grad(x + alpha p))

    Raises:
        LineSearchFailure: When no step with sufficient decrease is found
    """
    dphi0 = float(g0 @ p)
    if not dphi0 < 0.0:
        raise LineSearchFailure(x, f0, g0)

    def phi(alpha):
        f, g = fun(x + alpha * p)
        return f, g, float(g @ p)

    def zoom(lo, hi):
        a_lo, f_lo, d_lo, g_lo = lo
        a_hi, f_hi, d_hi, _ = hi
        for _ in range(max_zoom):
            span = a_hi - a_lo
            a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            lo_edge, hi_edge = min(a_lo, a_hi), max(a_lo, a_hi)
            margin = 0.1 * abs(span)
            if a is None or not (lo_edge + margin <= a <= hi_edge - margin):
                a = a_lo + 0.5 * span
            f_a, g_a, d_a = phi(a)
            if not np.isfinite(f_a) or f_a > f0 + c1 * a * dphi0 or f_a >= f_lo:
                a_hi, f_hi, d_hi = a, f_a, d_a
            else:
                if abs(d_a) <= -c2 * dphi0:
                    return a, f_a, g_a
                if d_a * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo, g_lo = a, f_a, d_a, g_a
            if abs(a_hi - a_lo) <= 1e-16 * max(1.0, abs(a_lo)):
                break
        if a_lo > 0.0:
            # sufficient decrease holds at a_lo even though curvature does not
            return a_lo, f_lo, g_lo
        raise LineSearchFailure(x, f0, g0)

    prev = (0.0, f0, dphi0, g0)
    alpha = alpha0
    for i in range(max_iter):
        f_a, g_a, d_a = phi(alpha)
        if not np.isfinite(f_a):
            alpha = prev[0] + 0.5 * (alpha - prev[0])
            continue
        if f_a > f0 + c1 * alpha * dphi0 or (i > 0 and f_a >= prev[1]):
            return zoom(prev, (alpha, f_a, d_a, g_a))
        if abs(d_a) <= -c2 * dphi0:
            return alpha, f_a, g_a
        if d_a >= 0.0:
            return zoom((alpha, f_a, d_a, g_a), prev)
        prev = (alpha, f_a, d_a, g_a)
        alpha = 2.0 * alpha
    raise LineSearchFailure(x, f0, g0)


def _bfgs_run(fun: _Counted, x0: np.ndarray, grad_tol: float, max_iter: int) -> Tuple[np.ndarray, BfgsReport]:
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    n = x.size
    H = np.eye(n)
    scaled = False
    k = 0
    for k in range(max_iter):
        gnorm = float(np.max(np.abs(g))) if n else 0.0
        if gnorm <= grad_tol:
            return x, BfgsReport(True, k, f, gnorm, fun.calls)
        p = -H @ g
        if not float(g @ p) < 0.0:
            H = np.eye(n)
            p = -g
        alpha0 = 1.0 if scaled else min(1.0, 1.0 / max(float(np.linalg.norm(p)), 1e-300))
        try:
            alpha, f_new, g_new = strong_wolfe_line_search(fun, x, f, g, p, alpha0)
        except LineSearchFailure as e:
            raise LineSearchFailure(x, f, g, iterations=k) from e
        s = alpha * p
        y = g_new - g
        x = x + s
        f, g = f_new, g_new
        sy = float(s @ y)
        if sy > CURVATURE_SKIP * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                H = (sy / float(y @ y)) * np.eye(n)
                scaled = True
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
    gnorm = float(np.max(np.abs(g))) if n else 0.0
    return x, BfgsReport(gnorm <= grad_tol, max_iter, f, gnorm, fun.calls)


def bfgs_minimize(
    fun: FunGrad,
    x0,
    grad_tol: float,
    max_iter: int = config.BFGS_MAX_ITER,
    restarts: int = config.BFGS_RESTARTS,
) -> Tuple[np.ndarray, BfgsReport]:
    """Minimise a smooth objective given as x -> (f, grad).

    Stops when the gradient ∞-norm is at most grad_tol or the iteration budget
    (shared across restarts) is used up.

    Args:
        fun: Objective returning value and gradient
        x0: Starting point
        grad_tol: Gradient ∞-norm tolerance
        max_iter: Iteration budget
        restarts: Restarts allowed after line-search failures

    Returns:
        Tuple of (best iterate, report)
    """
    counted = _Counted(fun)
    state = {"x": np.array(x0, dtype=float).ravel(), "iterations": 0, "restarts": 0}

    try:
        for attempt in Retrying(
            stop=stop_after_attempt(restarts + 1),
            retry=retry_if_exception_type(LineSearchFailure),
            reraise=True,
        ):
            with attempt:
                if attempt.retry_state.attempt_number > 1:
                    state["restarts"] += 1
                    logger.debug("BFGS restart %d from best iterate", state["restarts"])
                budget = max(max_iter - state["iterations"], 0)
                try:
                    x, report = _bfgs_run(counted, state["x"], grad_tol, budget)
                except LineSearchFailure as e:
                    state["x"] = np.array(e.x, dtype=float)
                    state["iterations"] += e.iterations
                    raise
                report.iterations += state["iterations"]
                report.restarts = state["restarts"]
                report.evaluations = counted.calls
                return x, report
    except LineSearchFailure as e:
        gnorm = float(np.max(np.abs(e.grad))) if np.size(e.grad) else 0.0
        logger.debug("BFGS line search failed after %d restarts (|g|=%.3e)", state["restarts"], gnorm)
        return np.array(e.x, dtype=float), BfgsReport(
            converged=gnorm <= grad_tol,
            iterations=state["iterations"],
            fun=float(e.fun),
            grad_norm=gnorm,
            evaluations=counted.calls,
            line_search_failed=True,
            restarts=state["restarts"],
        )
