"""Constrained minimization kernels over the probability simplex."""
import logging
import math
from typing import Tuple, Union

import numpy as np
from scipy.optimize import brentq

from app.core.config import tolerances
from app.core.exceptions import NumericError

logger = logging.getLogger(__name__)


def check_simplex(p: np.ndarray, what: str = "distribution") -> np.ndarray:
    """Raise NumericError unless p is a non-negative vector summing to one"""
    if not np.all(np.isfinite(p)) or p.min() < 0.0:
        raise NumericError(f"{what} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tolerances.simplex_sum:
        raise NumericError(f"{what} sums to {p.sum():.17g}")
    return p


def _as_estimate(losses) -> np.ndarray:
    values = np.asarray(losses, dtype=float)
    if values.ndim != 1 or values.size == 0 or not np.all(np.isfinite(values)):
        raise NumericError("loss estimate must be a finite non-empty vector")
    return values


def _normalize(p: np.ndarray, residual_limit: float, what: str) -> np.ndarray:
    total = p.sum()
    if not math.isfinite(total) or abs(total - 1.0) > residual_limit:
        raise NumericError(f"{what} solve left simplex residual {total - 1.0:.3g}")
    return check_simplex(p / total, what)


def tsallis_ftrl_solve(
    estimate, eta: float, return_multiplier: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, float]]:
    """FTRL with the 1/2-Tsallis regularizer: p_i = 1 / (eta L_i + lambda)^2, sum p = 1.

    The multiplier is searched as lambda = mu - eta min(L); the map
    mu -> sum_i 1/(eta (L_i - min L) + mu)^2 is strictly decreasing and
    crosses one inside [1, sqrt(K)].
    """
    if eta <= 0:
        raise NumericError("learning rate must be positive")
    losses = _as_estimate(estimate)
    k = losses.size
    shifted = eta * (losses - losses.min())

    if k == 1:
        p, mu = np.ones(1), 1.0
    else:
        def excess(mu: float) -> float:
            return float(np.sum(1.0 / (shifted + mu) ** 2)) - 1.0

        hi = math.sqrt(k)
        if excess(hi) >= 0.0:
            mu = hi
        else:
            try:
                mu = brentq(
                    excess, 1.0, hi, xtol=tolerances.tsallis_bracket_offset,
                    rtol=4 * np.finfo(float).eps, maxiter=tolerances.bisection_steps,
                )
            except (RuntimeError, ValueError) as e:
                raise NumericError(f"Tsallis multiplier search failed: {e}") from e
        p = 1.0 / (shifted + mu) ** 2
    p = _normalize(p, 1e-9, "Tsallis")
    if return_multiplier:
        return p, float(mu - eta * losses.min())
    return p


def _entropy_tsallis_log_probs(c: np.ndarray, eta: float, zeta: float) -> np.ndarray:
    """Solve -exp(-s/2)/eta + (s + 1)/zeta + c = 0 per coordinate for s = log p.

    The left side is increasing and concave in s; safeguarded Newton inside
    [lo, 0] falls back to the midpoint when a step leaves the bracket.
    """
    hi = np.zeros_like(c)
    lo = np.minimum(-2.0 * np.log(eta * (np.maximum(c, 0.0) + 1.0)), -1.0)
    s = hi.copy()
    for _ in range(tolerances.newton_steps):
        decay = np.exp(-s / 2.0)
        g = -decay / eta + (s + 1.0) / zeta + c
        positive = g > 0
        hi = np.where(positive, s, hi)
        lo = np.where(positive, lo, s)
        step = s - g / (decay / (2.0 * eta) + 1.0 / zeta)
        inside = (step > lo) & (step < hi)
        s_next = np.where(inside, step, 0.5 * (lo + hi))
        scale = decay / eta + np.abs(s + 1.0) / zeta + np.abs(c) + 1.0
        if np.all(np.abs(g) <= 1e-14 * scale) or np.all(np.abs(s_next - s) <= 1e-15 * (1.0 + np.abs(s))):
            return s_next
        s = s_next
    raise NumericError("hybrid FTRL coordinate solve did not converge")


def hybrid_ftrl_solve(estimate, eta: float, zeta: float) -> np.ndarray:
    """argmin_p <p, L> - (2/eta) sum sqrt(p_i) + (1/zeta) sum p_i log p_i over the simplex"""
    if eta <= 0 or zeta <= 0:
        raise NumericError("learning rates must be positive")
    losses = _as_estimate(estimate)
    k = losses.size
    if k == 1:
        return np.ones(1)
    shifted = losses - losses.min()
    if not np.any(shifted):
        return np.full(k, 1.0 / k)

    def mass(lam: float) -> float:
        return float(np.sum(np.exp(_entropy_tsallis_log_probs(shifted + lam, eta, zeta)))) - 1.0

    # p_min = 1 at lam_lo; every p_i <= 1/K at lam_hi, with equality only for a uniform estimate
    lam_lo = 1.0 / eta - 1.0 / zeta
    lam_hi = math.sqrt(k) / eta - (1.0 - math.log(k)) / zeta
    # endpoint signs are exact in real arithmetic; a wrong sign is rounding and the endpoint is the root
    if mass(lam_hi) >= 0.0:
        lam = lam_hi
    elif mass(lam_lo) <= 0.0:
        lam = lam_lo
    else:
        try:
            lam = brentq(
                mass, lam_lo, lam_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=tolerances.bisection_steps
            )
        except (RuntimeError, ValueError) as e:
            raise NumericError(f"hybrid FTRL multiplier search failed: {e}") from e
    p = np.exp(_entropy_tsallis_log_probs(shifted + lam, eta, zeta))
    return _normalize(p, 1e-9, "hybrid FTRL")


def hybrid_objective(p: np.ndarray, estimate, eta: float, zeta: float) -> float:
    losses = np.asarray(estimate, dtype=float)
    safe = np.where(p > 0, p, 1.0)
    return float(p @ losses - (2.0 / eta) * np.sum(np.sqrt(p)) + np.sum(p * np.log(safe)) / zeta)


def entropic_argmin(z, eta: float) -> np.ndarray:
    """softmax(-eta z) with max-subtraction"""
    if eta <= 0:
        raise NumericError("learning rate must be positive")
    scores = -eta * np.asarray(z, dtype=float)
    scores -= scores.max()
    weights = np.exp(scores)
    return weights / weights.sum()


def importance_weighted_estimate(arm: int, loss: float, prob: float, n_arms: int) -> np.ndarray:
    """loss / prob on the observed arm, zero elsewhere"""
    if prob <= 0:
        raise ValueError("sampling probability must be positive")
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss {loss} outside [0, 1]")
    estimate = np.zeros(n_arms)
    estimate[arm] = loss / prob
    return estimate
