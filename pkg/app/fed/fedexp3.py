"""Federated Exp3 over a gossip matrix."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from app.core.exceptions import NumericError
from app.env.losses import LossTensor
from app.net.graph import GossipMatrix
from app.policy.single_agent import Exp3Policy, sample_arm
from app.policy.solvers import check_simplex, entropic_argmin, importance_weighted_estimate
from app.utils.traces import checkpoint_rounds

logger = logging.getLogger(__name__)

FED_ALGORITHMS = ("fedexp3", "exp3")


def consensus_constant(horizon: int, n_agents: int, sigma2: float) -> float:
    """C_W = min{2 log T + log N, sqrt(N)} / (1 - sigma2) + 3"""
    if not 0.0 <= sigma2 < 1.0:
        raise NumericError("sigma2 must lie in [0, 1); the gossip matrix does not mix")
    return min(2.0 * math.log(horizon) + math.log(n_agents), math.sqrt(n_agents)) / (1.0 - sigma2) + 3.0


@dataclass(frozen=True)
class FedSchedules:
    n_arms: int
    horizon: int
    c_w: float

    def raw_gamma(self, t: int) -> float:
        return ((self.c_w + 0.5) * self.n_arms**2 * math.log(self.n_arms) / t) ** (1.0 / 3.0)

    def gamma(self, t: int) -> float:
        return min(1.0, self.raw_gamma(t))

    def eta(self, t: int) -> float:
        """Constant log K / (T gamma_T)"""
        return math.log(self.n_arms) / (self.horizon * self.gamma(self.horizon))

    def as_dict(self) -> Dict[str, float]:
        return {
            "C_W": self.c_w,
            "gamma_1": self.gamma(1),
            "gamma_T": self.gamma(self.horizon),
            "eta": self.eta(1),
        }


def fedexp3_schedules(n_arms: int, horizon: int, n_agents: int, sigma2: float) -> FedSchedules:
    if n_arms < 2 or horizon < 1:
        raise ValueError("FedExp3 needs K >= 2 and T >= 1")
    return FedSchedules(n_arms, horizon, consensus_constant(horizon, n_agents, sigma2))


@dataclass
class GossipRecord:
    """Per-round snapshots for checking consensus properties"""

    mean_before: List[np.ndarray] = field(default_factory=list)
    mean_after: List[np.ndarray] = field(default_factory=list)
    mean_estimate: List[np.ndarray] = field(default_factory=list)
    max_estimate: List[float] = field(default_factory=list)
    disagreement: List[float] = field(default_factory=list)
    lipschitz_gap: List[float] = field(default_factory=list)


class FedExp3Network:
    """Agent states z (gossip loss estimates) and x (exploitation distributions)"""

    def __init__(
        self,
        gossip: GossipMatrix,
        schedules: FedSchedules,
        rng: np.random.Generator,
        record: bool = False,
    ):
        self.w = gossip.entries
        self.n_agents = gossip.size
        self.schedules = schedules
        self.n_arms = schedules.n_arms
        self.rng = rng
        self.z = np.zeros((self.n_agents, self.n_arms))
        self.x = np.full((self.n_agents, self.n_arms), 1.0 / self.n_arms)
        self.record = GossipRecord() if record else None

    def play_round(self, t: int, losses: np.ndarray) -> np.ndarray:
        """Mix, sample, estimate, gossip; losses is the (N, K) loss matrix of round t"""
        gamma = self.schedules.gamma(t)
        eta = self.schedules.eta(t)
        probs = (1.0 - gamma) * self.x + gamma / self.n_arms
        arms = np.empty(self.n_agents, dtype=int)
        estimates = np.zeros_like(self.z)
        for v in range(self.n_agents):
            p = check_simplex(probs[v])
            arms[v] = sample_arm(self.rng, p)
            estimates[v] = importance_weighted_estimate(arms[v], float(losses[v, arms[v]]), p[arms[v]], self.n_arms)
        z_next = self.w.T @ self.z + estimates
        if self.record is not None:
            mean_next = z_next.mean(axis=0)
            self.record.mean_before.append(self.z.mean(axis=0))
            self.record.mean_after.append(mean_next)
            self.record.mean_estimate.append(estimates.mean(axis=0))
            self.record.max_estimate.append(float(np.abs(estimates).max()))
            gap = np.abs(z_next - mean_next).max(axis=1)
            self.record.disagreement.append(float(gap.max()))
            consensus = entropic_argmin(mean_next, eta)
            self.record.lipschitz_gap.append(
                float(max(np.abs(entropic_argmin(z_next[v], eta) - consensus).sum() - eta * gap[v] * self.n_arms
                          for v in range(self.n_agents)))
            )
        self.z = z_next
        self.x = np.vstack([entropic_argmin(self.z[v], eta) for v in range(self.n_agents)])
        return arms


def fedexp3_round(network: FedExp3Network, tensor: LossTensor, t: int) -> np.ndarray:
    return network.play_round(t, tensor.round_losses(t - 1))


@dataclass
class FederatedResult:
    algorithm: str
    rows: List[Dict[str, float]]
    final_regret: np.ndarray
    metadata: Dict[str, object]
    record: Optional[GossipRecord] = None


def run_fedexp3(
    tensor: LossTensor,
    seed: int,
    gossip: Optional[GossipMatrix] = None,
    sigma2_value: Optional[float] = None,
    stride: int = 1,
    algorithm: str = "fedexp3",
    record: bool = False,
) -> FederatedResult:
    """Per-agent regret against the arm minimizing the across-agent average loss"""
    if algorithm not in FED_ALGORITHMS:
        raise ValueError(f"unknown federated algorithm '{algorithm}'")
    rng = np.random.default_rng(seed)
    n_agents, n_arms = tensor.n_agents, tensor.n_arms
    metadata: Dict[str, object] = {"algorithm": algorithm}
    network: Optional[FedExp3Network] = None
    independent: List[Exp3Policy] = []
    if algorithm == "fedexp3":
        if gossip is None or sigma2_value is None:
            raise ValueError("FedExp3 needs a gossip matrix and its sigma2")
        schedules = fedexp3_schedules(n_arms, tensor.horizon, n_agents, sigma2_value)
        network = FedExp3Network(gossip, schedules, rng, record)
        metadata.update({"sigma2": sigma2_value, **schedules.as_dict()})
    else:
        independent = [Exp3Policy(n_arms, tensor.horizon) for _ in range(n_agents)]

    realized = np.zeros(n_agents)
    per_arm = np.zeros(n_arms)
    checkpoints = set(checkpoint_rounds(tensor.horizon, stride))
    rows: List[Dict[str, float]] = []
    for t in range(1, tensor.horizon + 1):
        losses = tensor.round_losses(t - 1)
        if network is not None:
            arms = network.play_round(t, losses)
        else:
            arms = np.empty(n_agents, dtype=int)
            for v, policy in enumerate(independent):
                arms[v] = sample_arm(rng, check_simplex(policy.distribution()))
                policy.update(int(arms[v]), float(losses[v, arms[v]]))
        average = losses.mean(axis=0)
        realized += average[arms]
        per_arm += average
        if t in checkpoints:
            regret = realized - per_arm.min()
            mean = float(regret.mean())
            rows.extend({"t": t, "agent": v, "regret": float(regret[v]), "avg_regret": mean} for v in range(n_agents))
    return FederatedResult(
        algorithm=algorithm,
        rows=rows,
        final_regret=realized - per_arm.min(),
        metadata=metadata,
        record=network.record if network is not None else None,
    )
