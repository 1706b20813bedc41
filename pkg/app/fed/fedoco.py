"""Federated online convex optimization with randomly skipped single-edge gossip."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from app.core.exceptions import NumericError
from app.env.oco import ComparatorTracker, OcoProblem
from app.net.graph import CommGraph, expected_pairwise_gossip, second_eigenvalue
from app.policy.solvers import entropic_argmin
from app.utils.traces import checkpoint_rounds

logger = logging.getLogger(__name__)


def oco_projection(z: np.ndarray, eta: float, decision_set: str, radius: float = 1.0) -> np.ndarray:
    """argmin_x <z, x> + psi(x) / eta over the decision set"""
    if eta <= 0:
        raise NumericError("learning rate must be positive")
    if decision_set == "simplex":
        return entropic_argmin(z, eta)
    if decision_set == "l2_ball":
        x = -eta * np.asarray(z, dtype=float)
        norm = np.linalg.norm(x)
        if norm > radius:
            x *= radius / norm
        return x
    raise ValueError(f"unknown decision set '{decision_set}'")


@dataclass
class CommMeter:
    total: int = 0
    per_round: List[int] = field(default_factory=list)

    def record(self, messages: int) -> None:
        if messages not in (0, 2):
            raise ValueError("a round transmits either zero or two messages")
        self.per_round.append(messages)
        self.total += messages

    @property
    def communicating_rounds(self) -> int:
        return sum(1 for m in self.per_round if m)


@dataclass(frozen=True)
class FedOcoSchedule:
    radius: float
    lipschitz: float
    spectral_gap: float
    lambda2: float
    degenerate: bool

    def eta(self, t: int) -> float:
        """R sqrt(1 - lambda_2(W)) / (L sqrt(t)), or R / (L sqrt(t)) when the gap is degenerate"""
        gap = 1.0 if self.degenerate else self.spectral_gap
        return self.radius * math.sqrt(gap) / (self.lipschitz * math.sqrt(t))


def fedoco_schedule(problem: OcoProblem, graph: CommGraph, skip_alpha: float) -> FedOcoSchedule:
    lambda2 = second_eigenvalue(expected_pairwise_gossip(graph, skip_alpha, problem.horizon))
    gap = 1.0 - lambda2
    degenerate = not graph.edges or gap <= 0.0
    if degenerate:
        logger.warning("expected gossip matrix has no spectral gap; using eta_t = R / (L sqrt t)")
    return FedOcoSchedule(problem.regularizer_radius, problem.lipschitz, gap, lambda2, degenerate)


class FedOcoNetwork:
    def __init__(
        self,
        problem: OcoProblem,
        graph: CommGraph,
        skip_alpha: float,
        rng: np.random.Generator,
    ):
        if not 0.0 <= skip_alpha < 1.0:
            raise ValueError("skipping parameter must lie in [0, 1)")
        if graph.n_agents != problem.n_agents:
            raise ValueError("graph and problem disagree on the number of agents")
        self.problem = problem
        self.graph = graph
        self.skip_alpha = skip_alpha
        self.rng = rng
        self.edges = graph.edge_list
        self.fire_probability = problem.horizon ** (-skip_alpha)
        self.schedule = fedoco_schedule(problem, graph, skip_alpha)
        self.meter = CommMeter()
        self.z = np.zeros((graph.n_agents, problem.dimension))
        start = oco_projection(np.zeros(problem.dimension), 1.0, problem.decision_set, problem.set_radius)
        self.x = np.tile(start, (graph.n_agents, 1))
        self.last_gradients = np.zeros_like(self.z)
        self.last_edge: Optional[tuple] = None

    def play_round(self, t: int) -> np.ndarray:
        """One round at 1-based t; returns the decisions played"""
        played = self.x.copy()
        gradients = np.vstack([self.problem.subgradient(t - 1, v, played[v]) for v in range(self.graph.n_agents)])
        fires = self.rng.random() < self.fire_probability
        z_next = self.z.copy()
        self.last_edge = None
        if fires and self.edges:
            u, w = self.edges[int(self.rng.integers(len(self.edges)))]
            average = 0.5 * (self.z[u] + self.z[w])
            z_next[u] = average
            z_next[w] = average
            self.last_edge = (u, w)
        self.meter.record(2 if self.last_edge else 0)
        self.z = z_next + gradients
        self.last_gradients = gradients
        eta = self.schedule.eta(t)
        self.x = np.vstack(
            [oco_projection(self.z[v], eta, self.problem.decision_set, self.problem.set_radius)
             for v in range(self.graph.n_agents)]
        )
        return played


def fedoco_round(network: FedOcoNetwork, t: int) -> np.ndarray:
    return network.play_round(t)


@dataclass
class FedOcoResult:
    rows: List[Dict[str, float]]
    final_regret: np.ndarray
    communication: int
    metadata: Dict[str, object]
    max_subgradient_norm: float = 0.0
    infeasible_iterates: int = 0


def run_fedoco(
    problem: OcoProblem,
    graph: CommGraph,
    skip_alpha: float,
    seed: int,
    stride: int = 1,
) -> FedOcoResult:
    """Regret against the best fixed point of the network loss, plus the message count Q_T"""
    network = FedOcoNetwork(problem, graph, skip_alpha, np.random.default_rng(seed))
    n_agents = graph.n_agents
    realized = np.zeros(n_agents)
    comparator = ComparatorTracker(problem)
    checkpoints = set(checkpoint_rounds(problem.horizon, stride))
    rows: List[Dict[str, float]] = []
    max_norm = 0.0
    infeasible = 0
    for t in range(1, problem.horizon + 1):
        played = network.play_round(t)
        comparator.update(problem.params(t - 1))
        for v in range(n_agents):
            realized[v] += problem.network_loss(t - 1, played[v])
            if not problem.contains(played[v]):
                infeasible += 1
        max_norm = max(max_norm, max(problem.dual_norm(g) for g in network.last_gradients))
        if t in checkpoints:
            regret = realized - comparator.value()
            rows.extend(
                {"t": t, "agent": v, "regret": float(regret[v]), "Q_running": network.meter.total}
                for v in range(n_agents)
            )
    schedule = network.schedule
    metadata: Dict[str, object] = {
        "skip_alpha": skip_alpha,
        "lambda2": schedule.lambda2,
        "spectral_gap": schedule.spectral_gap,
        "degenerate_schedule": schedule.degenerate,
        "R": schedule.radius,
        "L": schedule.lipschitz,
        "eta_1": schedule.eta(1),
        "eta_T": schedule.eta(problem.horizon),
        "Q_T": network.meter.total,
    }
    return FedOcoResult(
        rows=rows,
        final_regret=realized - comparator.value(),
        communication=network.meter.total,
        metadata=metadata,
        max_subgradient_norm=max_norm,
        infeasible_iterates=infeasible,
    )
