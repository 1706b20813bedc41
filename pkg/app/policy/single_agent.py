import math
from typing import List, Optional

import numpy as np

from app.env.losses import LossTensor
from app.policy.solvers import check_simplex, importance_weighted_estimate, tsallis_ftrl_solve


def exp3_gamma(n_arms: int, horizon: int) -> float:
    """gamma = min{1, sqrt(K ln K / ((e - 1) T))}"""
    return min(1.0, math.sqrt(n_arms * math.log(n_arms) / ((math.e - 1.0) * horizon)))


def tsallis_inf_rate(t: int) -> float:
    """eta_t = 2 sqrt(1/t)"""
    return 2.0 * math.sqrt(1.0 / t)


def sample_arm(rng: np.random.Generator, p: np.ndarray) -> int:
    return int(rng.choice(len(p), p=p))


class Exp3Policy:
    """Exponential weights with uniform exploration mixed in"""

    def __init__(self, n_arms: int, horizon: int, gamma: Optional[float] = None):
        if n_arms < 2:
            raise ValueError("Exp3 needs at least two arms")
        if horizon < 1:
            raise ValueError("horizon must be positive")
        self.n_arms = n_arms
        self.gamma = exp3_gamma(n_arms, horizon) if gamma is None else gamma
        self.log_weights = np.zeros(n_arms)
        self._last: Optional[np.ndarray] = None

    def distribution(self) -> np.ndarray:
        scores = self.log_weights - self.log_weights.max()
        weights = np.exp(scores)
        p = (1.0 - self.gamma) * weights / weights.sum() + self.gamma / self.n_arms
        self._last = p
        return p

    def apply_estimate(self, estimate: np.ndarray) -> None:
        """w <- w * exp(-gamma * estimate / K)"""
        self.log_weights -= self.gamma * estimate / self.n_arms

    def update(self, arm: int, loss: float) -> None:
        p = self._last if self._last is not None else self.distribution()
        self.apply_estimate(importance_weighted_estimate(arm, loss, p[arm], self.n_arms))
        self._last = None


class TsallisInfPolicy:
    """Pure FTRL with the Tsallis regularizer and eta_t = 2 / sqrt(t)"""

    def __init__(self, n_arms: int):
        if n_arms < 2:
            raise ValueError("Tsallis-INF needs at least two arms")
        self.n_arms = n_arms
        self.round = 1
        self.cumulative = np.zeros(n_arms)
        self.multipliers: List[float] = []
        self._last: Optional[np.ndarray] = None

    def distribution(self) -> np.ndarray:
        p, multiplier = tsallis_ftrl_solve(self.cumulative, tsallis_inf_rate(self.round), return_multiplier=True)
        self._last = p
        self.multipliers.append(multiplier)
        return p

    def update(self, arm: int, loss: float) -> None:
        p = self._last if self._last is not None else self.distribution()
        self.cumulative += importance_weighted_estimate(arm, loss, p[arm], self.n_arms)
        self.round += 1
        self._last = None


def play(policy, tensor: LossTensor, rng: np.random.Generator, agent: int = 0) -> np.ndarray:
    """Run a single-agent policy over a loss tensor; returns the cumulative regret after each round"""
    realized = 0.0
    per_arm = np.zeros(tensor.n_arms)
    regret = np.empty(tensor.horizon)
    for t in range(tensor.horizon):
        p = check_simplex(policy.distribution())
        arm = sample_arm(rng, p)
        losses = tensor.round_losses(t)[agent]
        policy.update(arm, float(losses[arm]))
        realized += losses[arm]
        per_arm += losses
        regret[t] = realized - per_arm.min()
    return regret
