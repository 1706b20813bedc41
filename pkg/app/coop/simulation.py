"""Cooperative delayed-feedback bandits: CFTRL, DFTRL and the exponential-weights baselines."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from app.core.exceptions import ProtocolError
from app.coop.agents import AgentMessage, CenterCopier, cooperative_estimate, learner_for
from app.env.losses import LossTensor
from app.net.graph import CenterAssignment, CommGraph, independence_number, select_centers
from app.net.inbox import DelayedInbox
from app.policy.single_agent import sample_arm
from app.policy.solvers import check_simplex
from app.utils.traces import checkpoint_rounds

logger = logging.getLogger(__name__)

COOP_ALGORITHMS = ("cftrl", "dftrl", "exp3_coop", "center_exp3")
CENTER_BASED = ("cftrl", "center_exp3")


@dataclass
class CooperativeResult:
    algorithm: str
    rows: List[Dict[str, float]]
    final_regret: np.ndarray
    metadata: Dict[str, object]
    center_log: Dict[int, List[np.ndarray]] = field(default_factory=dict)
    estimate_log: Dict[int, List[np.ndarray]] = field(default_factory=dict)

    @property
    def average_regret(self) -> float:
        return float(self.final_regret.mean())


class CooperativeNetwork:
    """All agents of one cooperative run, stepped round by round in agent-id order"""

    def __init__(
        self,
        algorithm: str,
        graph: CommGraph,
        tensor: LossTensor,
        rng: np.random.Generator,
        learning_rate: Optional[float] = None,
        record: bool = False,
    ):
        if algorithm not in COOP_ALGORITHMS:
            raise ValueError(f"unknown cooperative algorithm '{algorithm}'")
        if tensor.n_agents not in (1, graph.n_agents):
            raise ValueError("loss tensor agent count does not match the graph")
        self.algorithm = algorithm
        self.graph = graph
        self.tensor = tensor
        self.rng = rng
        self.record = record
        self.n_arms = tensor.n_arms
        self.delay = graph.edge_delay
        self.inbox = DelayedInbox(graph)
        self.floors_applied = 0
        self.center_log: Dict[int, List[np.ndarray]] = {}
        self.estimate_log: Dict[int, List[np.ndarray]] = {}
        self._own: Dict[int, Dict[int, AgentMessage]] = {v: {} for v in range(graph.n_agents)}
        self.metadata: Dict[str, object] = {"algorithm": algorithm, "delay": self.delay}

        horizon = tensor.horizon
        self.assignment: Optional[CenterAssignment] = None
        self.learners: Dict[int, object] = {}
        self.copiers: Dict[int, CenterCopier] = {}
        if algorithm in CENTER_BASED:
            self.assignment = select_centers(graph, self.n_arms)
            for v in range(graph.n_agents):
                c = self.assignment.center_of[v]
                if c == v:
                    mass = self.assignment.center_mass[c]
                    self.learners[v] = learner_for(algorithm, self.n_arms, horizon, mass=mass, learning_rate=learning_rate)
                    self.center_log[v] = []
                else:
                    lag = self.assignment.hop_distance[v] * self.delay
                    self.copiers[v] = CenterCopier(c, lag, self.n_arms)
            self.metadata["centers"] = list(self.assignment.centers)
            if algorithm == "cftrl":
                self.metadata["learning_rates"] = {str(c): self.learners[c].eta for c in self.assignment.centers}
        else:
            alpha, exact = independence_number(graph)
            self.metadata["independence_number"] = alpha
            self.metadata["independence_exact"] = exact
            for v in range(graph.n_agents):
                self.learners[v] = learner_for(
                    algorithm, self.n_arms, horizon,
                    n_agents=graph.n_agents, independence=alpha, delay=self.delay,
                )
                if record:
                    self.center_log[v] = []
        for v in self.learners:
            self.estimate_log[v] = []

    def distributions(self, t: int) -> List[np.ndarray]:
        probs: List[Optional[np.ndarray]] = [None] * self.graph.n_agents
        for v, learner in self.learners.items():
            p = check_simplex(learner.distribution(t))
            probs[v] = p
            if v in self.center_log:
                self.center_log[v].append(p)
        for v, copier in self.copiers.items():
            probs[v] = copier.distribution(t, self.center_log)
        return probs  # type: ignore[return-value]

    def play_round(self, t: int) -> np.ndarray:
        """One synchronous round at 1-based t; returns the arm each agent played"""
        probs = self.distributions(t)
        arms = np.array([sample_arm(self.rng, p) for p in probs])
        losses = self.tensor.round_losses(t - 1)
        for v in range(self.graph.n_agents):
            row = losses[v] if losses.shape[0] > 1 else losses[0]
            message = AgentMessage(v, t, int(arms[v]), float(row[arms[v]]), probs[v])
            self._own[v][t] = message
            self.inbox.broadcast(v, t, message)
        for v in range(self.graph.n_agents):
            received = self.inbox.receive(v, t)
            if v in self.learners:
                self._absorb(v, t, received)
            self._own[v].pop(t - self.delay, None)
        return arms

    def _absorb(self, v: int, t: int, received: List[AgentMessage]) -> None:
        source_round = t - self.delay
        if source_round < 1:
            if received:
                raise ProtocolError(f"agent {v} received messages before round {self.delay + 1}")
            estimate = np.zeros(self.n_arms)
        else:
            senders = sorted(m.sender for m in received if m.round == source_round)
            if senders != list(self.graph.neighbors(v)) or len(received) != len(senders):
                raise ProtocolError(f"agent {v} at round {t} expected messages from round {source_round} only")
            own = self._own[v].get(source_round)
            if own is None:
                raise ProtocolError(f"agent {v} lost its own message for round {source_round}")
            estimate, floors = cooperative_estimate([own] + received, self.n_arms)
            if floors:
                self.floors_applied += floors
                logger.warning("agent %d round %d: %d estimator denominators floored", v, t, floors)
        self.learners[v].absorb(estimate)
        if self.record:
            self.estimate_log[v].append(estimate)


def run_cooperative(
    algorithm: str,
    graph: CommGraph,
    tensor: LossTensor,
    seed: int,
    stride: int = 1,
    learning_rate: Optional[float] = None,
    record: bool = False,
) -> CooperativeResult:
    """Play T rounds and report individual and average regret against the best fixed arm"""
    network = CooperativeNetwork(algorithm, graph, tensor, np.random.default_rng(seed), learning_rate, record)
    n_agents = graph.n_agents
    realized = np.zeros(n_agents)
    per_arm = np.zeros((n_agents, tensor.n_arms))
    checkpoints = set(checkpoint_rounds(tensor.horizon, stride))
    rows: List[Dict[str, float]] = []
    logger.debug("cooperative run %s: %d agents, T=%d", algorithm, n_agents, tensor.horizon)
    for t in range(1, tensor.horizon + 1):
        arms = network.play_round(t)
        losses = np.broadcast_to(tensor.round_losses(t - 1), (n_agents, tensor.n_arms))
        realized += losses[np.arange(n_agents), arms]
        per_arm += losses
        if t in checkpoints:
            regret = realized - per_arm.min(axis=1)
            average = float(regret.mean())
            rows.extend(
                {"t": t, "agent": v, "regret": float(regret[v]), "avg_regret": average} for v in range(n_agents)
            )
    metadata = dict(network.metadata)
    metadata["floors_applied"] = network.floors_applied
    metadata["messages_in_flight"] = network.inbox.in_flight
    return CooperativeResult(
        algorithm=algorithm,
        rows=rows,
        final_regret=realized - per_arm.min(axis=1),
        metadata=metadata,
        center_log=network.center_log,
        estimate_log=network.estimate_log,
    )


def cftrl_round(network: CooperativeNetwork, t: int) -> np.ndarray:
    if network.algorithm != "cftrl":
        raise ValueError("network is not running CFTRL")
    return network.play_round(t)


def dftrl_round(network: CooperativeNetwork, t: int) -> np.ndarray:
    if network.algorithm != "dftrl":
        raise ValueError("network is not running DFTRL")
    return network.play_round(t)
