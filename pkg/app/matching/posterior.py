"""Matching-set posteriors and an exact enumeration oracle."""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Set, Tuple

import networkx as nx
import numpy as np

from app.matching.population import pair_value

BRUTE_FORCE_NODE_LIMIT = 24


def posterior_pi(size: int, prior: float) -> float:
    """Probability that a matching set of `size` nodes holds a high-type node

    pi(a) = p a / (1 - p + p a); pi(0) = 0.
    """
    if size < 0:
        raise ValueError("set size must be non-negative")
    if not 0.0 <= prior <= 1.0:
        raise ValueError("prior must lie in [0, 1]")
    if size == 0 or prior == 0.0:
        return 0.0
    return prior * size / (1.0 - prior + prior * size)


@dataclass
class MatchingSetState:
    """Knowledge of a Least-Size-Merge run: open matching sets, identified nodes, observed pairs"""

    prior: float
    value_fn: str = "and"
    sets: List[FrozenSet[int]] = field(default_factory=list)
    high: Set[int] = field(default_factory=set)
    low: Set[int] = field(default_factory=set)
    observations: Dict[Tuple[int, int], int] = field(default_factory=dict)

    def observe(self, u: int, v: int, value: int) -> None:
        self.observations[(min(u, v), max(u, v))] = int(value)

    def validate(self) -> None:
        seen: Set[int] = set()
        for members in self.sets:
            if seen & members:
                raise ValueError("matching sets overlap")
            seen |= members
        if seen & (self.high | self.low):
            raise ValueError("identified nodes must not sit in a matching set")
        if self.high & self.low:
            raise ValueError("a node is identified both high and low")

    def posterior(self, index: int) -> float:
        return posterior_pi(len(self.sets[index]), self.prior)

    def snapshot(self) -> "MatchingSetState":
        return MatchingSetState(
            self.prior, self.value_fn, list(self.sets), set(self.high), set(self.low), dict(self.observations)
        )


def brute_force_posterior(state: MatchingSetState, index: int) -> float:
    """Exact Pr[set `index` holds a high node] by enumerating consistent type assignments

    Identified nodes are fixed; only the observation-connected component of the
    target set is enumerated, since the prior is a product over nodes.
    """
    total = sum(len(s) for s in state.sets)
    if total > BRUTE_FORCE_NODE_LIMIT:
        raise ValueError(f"enumeration limited to {BRUTE_FORCE_NODE_LIMIT} nodes, got {total}")
    target = state.sets[index]
    fixed = {v: 1 for v in state.high}
    fixed.update({v: 0 for v in state.low})

    if any(fixed.get(v) == 1 for v in target):
        return 1.0
    target_free = [v for v in target if v not in fixed]
    if not target_free:
        return 0.0

    free = nx.Graph()
    free.add_nodes_from(target_free)
    for (u, v) in state.observations:
        if u not in fixed and v not in fixed:
            free.add_edge(u, v)
    component = set()
    for v in target_free:
        component |= nx.node_connected_component(free, v)
    nodes = sorted(component)
    position = {v: i for i, v in enumerate(nodes)}

    codes = np.arange(2 ** len(nodes), dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(len(nodes))) & 1).astype(np.int8)
    consistent = np.ones(codes.size, dtype=bool)
    table = np.array([[pair_value(x, y, state.value_fn) for y in (0, 1)] for x in (0, 1)])
    for (u, v), value in state.observations.items():
        if u not in position and v not in position:
            continue
        if u in position and v in position:
            a, b = bits[:, position[u]], bits[:, position[v]]
        else:
            inside, outside = (u, v) if u in position else (v, u)
            if outside not in fixed:
                continue
            a = bits[:, position[inside]]
            b = np.full(codes.size, fixed[outside], dtype=np.int8)
        consistent &= table[a, b] == value

    n_high = bits.sum(axis=1)
    weights = state.prior**n_high * (1.0 - state.prior) ** (len(nodes) - n_high)
    weights = np.where(consistent, weights, 0.0)
    evidence = weights.sum()
    if evidence <= 0.0:
        raise ValueError("observations are inconsistent with the prior")
    target_cols = [position[v] for v in target_free]
    holds_high = bits[:, target_cols].any(axis=1)
    return float(weights[holds_high].sum() / evidence)
