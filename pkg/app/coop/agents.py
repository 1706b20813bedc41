"""Per-agent state for cooperative bandits over a delayed message bus."""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import tolerances
from app.policy.single_agent import Exp3Policy
from app.policy.solvers import hybrid_ftrl_solve, tsallis_ftrl_solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AgentMessage:
    """S_t(v): what agent v tells its neighbors about round t"""

    sender: int
    round: int
    arm: int
    loss: float
    distribution: np.ndarray


def neighborhood_weight(distributions: Sequence[np.ndarray], arm: int) -> float:
    """q = 1 - prod_u (1 - p^u(arm))"""
    if not distributions:
        raise ValueError("at least one distribution is required")
    if len(distributions) == 1:
        return float(distributions[0][arm])
    miss = 1.0
    for p in distributions:
        miss *= 1.0 - float(p[arm])
    return 1.0 - miss


def cooperative_estimate(messages: Sequence[AgentMessage], n_arms: int) -> Tuple[np.ndarray, int]:
    """Delayed neighborhood estimator: loss / q on every arm some neighbor played.

    Returns the estimate and how many denominators hit the probability floor.
    """
    estimate = np.zeros(n_arms)
    if not messages:
        return estimate, 0
    distributions = [m.distribution for m in messages]
    floors = 0
    seen = set()
    for message in messages:
        if message.arm in seen:
            continue
        seen.add(message.arm)
        q = neighborhood_weight(distributions, message.arm)
        if q < tolerances.probability_floor:
            q = tolerances.probability_floor
            floors += 1
        estimate[message.arm] = message.loss / q
    return estimate, floors


def cftrl_learning_rate(mass: float, horizon: int) -> float:
    """eta(c) = sqrt(M(c) / (3T))"""
    return math.sqrt(mass / (3.0 * horizon))


def dftrl_learning_rates(
    n_arms: int, n_agents: int, independence: int, delay: int, horizon: int, t: int
) -> Tuple[float, float]:
    """(eta_t, zeta_t) for the hybrid regularizer; a zero delay is treated as one round"""
    eta = (1.0 / (1.0 - 1.0 / math.e)) * (independence / n_agents + 1.0 / n_arms) ** -0.25 * math.sqrt(2.0 / horizon)
    zeta = math.sqrt(math.log(n_arms) / (max(delay, 1) * t))
    return eta, zeta


class TsallisLearner:
    """Center agent running FTRL with the Tsallis regularizer at a fixed rate"""

    def __init__(self, n_arms: int, eta: float):
        self.cumulative = np.zeros(n_arms)
        self.eta = eta
        self.multipliers: List[float] = []

    def distribution(self, t: int) -> np.ndarray:
        p, multiplier = tsallis_ftrl_solve(self.cumulative, self.eta, return_multiplier=True)
        self.multipliers.append(multiplier)
        return p

    def absorb(self, estimate: np.ndarray) -> None:
        self.cumulative += estimate


class HybridLearner:
    """Agent running FTRL with the Tsallis-plus-entropy regularizer"""

    def __init__(self, n_arms: int, n_agents: int, independence: int, delay: int, horizon: int):
        self.cumulative = np.zeros(n_arms)
        self._schedule = (n_arms, n_agents, independence, delay, horizon)

    def rates(self, t: int) -> Tuple[float, float]:
        return dftrl_learning_rates(*self._schedule, t)

    def distribution(self, t: int) -> np.ndarray:
        eta, zeta = self.rates(t)
        return hybrid_ftrl_solve(self.cumulative, eta, zeta)

    def absorb(self, estimate: np.ndarray) -> None:
        self.cumulative += estimate


class ExponentialLearner:
    """Exp3-style exponential weights fed by the neighborhood estimator"""

    def __init__(self, n_arms: int, horizon: int):
        self.policy = Exp3Policy(n_arms, horizon)

    def distribution(self, t: int) -> np.ndarray:
        return self.policy.distribution()

    def absorb(self, estimate: np.ndarray) -> None:
        self.policy.apply_estimate(estimate)


class CenterCopier:
    """Non-center agent replaying its center's distribution with lag d(v) * d"""

    def __init__(self, center: int, lag: int, n_arms: int):
        self.center = center
        self.lag = lag
        self.uniform = np.full(n_arms, 1.0 / n_arms)

    def distribution(self, t: int, center_log: Dict[int, List[np.ndarray]]) -> np.ndarray:
        if t > self.lag:
            return center_log[self.center][t - self.lag - 1]
        return self.uniform


def learner_for(
    algorithm: str,
    n_arms: int,
    horizon: int,
    *,
    mass: Optional[float] = None,
    learning_rate: Optional[float] = None,
    n_agents: int = 1,
    independence: int = 1,
    delay: int = 1,
):
    if algorithm == "cftrl":
        eta = learning_rate if learning_rate is not None else cftrl_learning_rate(mass or 1.0, horizon)
        return TsallisLearner(n_arms, eta)
    if algorithm == "dftrl":
        return HybridLearner(n_arms, n_agents, independence, delay, horizon)
    if algorithm in ("exp3_coop", "center_exp3"):
        return ExponentialLearner(n_arms, horizon)
    raise ValueError(f"unknown cooperative algorithm '{algorithm}'")
