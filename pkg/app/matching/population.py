"""Node populations, perfect matchings and the incremental rematching constraint."""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from app.utils.traces import MATCHING_COLUMNS

VALUE_FUNCTIONS = ("and", "or")
MATCHING_EVENTS = ("swap", "merge", "remove", "terminate")
# child streams of one run seed: node types, then the strategy (initial matching and pair picks)
TYPES_STREAM = 0
STRATEGY_STREAM = 1
Pair = Tuple[int, int]


def seed_stream(seed: int, stream: int) -> np.random.Generator:
    """Generator for child `stream` of SeedSequence(seed)"""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(stream + 1)[stream])


def pair_value(theta_u: int, theta_v: int, fn: str) -> int:
    if theta_u not in (0, 1) or theta_v not in (0, 1):
        raise ValueError("node types must be binary")
    if fn == "and":
        return theta_u & theta_v
    if fn == "or":
        return theta_u | theta_v
    raise ValueError(f"unknown value function '{fn}'")


@dataclass(frozen=True, eq=False)
class NodePopulation:
    types: np.ndarray
    prior: float
    seed: Optional[int] = None

    def __post_init__(self):
        types = np.asarray(self.types, dtype=np.int8)
        if types.ndim != 1 or types.size == 0 or types.size % 2:
            raise ValueError("a population needs an even, positive number of nodes")
        if not np.isin(types, (0, 1)).all():
            raise ValueError("node types must be binary")
        if not 0.0 <= self.prior <= 1.0:
            raise ValueError("prior must lie in [0, 1]")
        types.setflags(write=False)
        object.__setattr__(self, "types", types)

    @classmethod
    def sample(cls, n: int, prior: float, seed: int) -> "NodePopulation":
        if n < 2 or n % 2:
            raise ValueError("n must be an even positive integer")
        rng = seed_stream(seed, TYPES_STREAM)
        return cls((rng.random(n) < prior).astype(np.int8), prior, seed)

    @property
    def n(self) -> int:
        return int(self.types.size)

    @property
    def n_high(self) -> int:
        return int(self.types.sum())


def optimal_value(population: NodePopulation, fn: str) -> int:
    """Value of the best perfect matching"""
    n_high = population.n_high
    if fn == "or":
        # 2 mu* = N_1 + min{N_1, n - N_1}
        return (n_high + min(n_high, population.n - n_high)) // 2
    if fn == "and":
        return n_high // 2
    raise ValueError(f"unknown value function '{fn}'")


class Matching:
    """Perfect matching stored as a partner array"""

    def __init__(self, partner: Sequence[int]):
        partner = np.asarray(partner, dtype=np.int64)
        n = partner.size
        if n == 0 or n % 2:
            raise ValueError("a perfect matching needs an even, positive number of nodes")
        idx = np.arange(n)
        if (partner < 0).any() or (partner >= n).any() or (partner == idx).any() or (partner[partner] != idx).any():
            raise ValueError("partner array is not a perfect matching")
        self.partner = partner

    @classmethod
    def from_pairs(cls, pairs: Sequence[Pair], n: int) -> "Matching":
        partner = np.full(n, -1, dtype=np.int64)
        for u, v in pairs:
            if partner[u] != -1 or partner[v] != -1:
                raise ValueError(f"node appears twice in pairs ({u}, {v})")
            partner[u], partner[v] = v, u
        if (partner == -1).any():
            raise ValueError("pairs do not cover every node")
        return cls(partner)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Matching":
        order = rng.permutation(n)
        return cls.from_pairs(list(zip(order[0::2].tolist(), order[1::2].tolist())), n)

    @property
    def n(self) -> int:
        return int(self.partner.size)

    def pairs(self) -> List[Pair]:
        return [(u, int(w)) for u, w in enumerate(self.partner) if u < w]

    def pair_set(self) -> Set[FrozenSet[int]]:
        return {frozenset(p) for p in self.pairs()}

    def value(self, types: np.ndarray, fn: str) -> int:
        return sum(pair_value(int(types[u]), int(types[w]), fn) for u, w in self.pairs())

    def copy(self) -> "Matching":
        return Matching(self.partner.copy())

    def rematch(self, u: int, v: int) -> Tuple[Pair, Pair]:
        """Swap partners so that u is matched with v; returns the two new pairs

        (u, u'), (v, v') become (u, v), (u', v'). At most two pairs change.
        """
        u_prime = int(self.partner[u])
        if u == v or u_prime == v:
            raise ValueError(f"nodes {u} and {v} cannot be rematched")
        v_prime = int(self.partner[v])
        self.partner[u], self.partner[v] = v, u
        self.partner[u_prime], self.partner[v_prime] = v_prime, u_prime
        return (u, v), (u_prime, v_prime)


def symmetric_difference(first: Matching, second: Matching) -> int:
    """|M delta M'| counted in pairs"""
    return len(first.pair_set() ^ second.pair_set())


def incremental_violations(matchings: Sequence[Matching], limit: int = 4) -> int:
    return sum(symmetric_difference(a, b) > limit for a, b in zip(matchings, matchings[1:]))


@dataclass
class IncrementalTrace:
    """One greedy matching run: per-round rows, stopping time and regret accounting"""

    value_fn: str
    optimal: int
    rows: List[Dict[str, object]] = field(default_factory=list)
    rewards: List[int] = field(default_factory=list)
    matchings: List[Matching] = field(default_factory=list)
    metadata: Dict[str, object] = field(default_factory=dict)
    _cumulative_regret: float = 0.0

    @property
    def tau(self) -> int:
        return len(self.rewards)

    @property
    def instantaneous_regret(self) -> np.ndarray:
        return self.optimal - np.asarray(self.rewards, dtype=float)

    @property
    def total_regret(self) -> float:
        return self._cumulative_regret

    @property
    def terminal_regret(self) -> float:
        return float(self.optimal - self.rewards[-1]) if self.rewards else 0.0

    def cumulative_regret(self, horizon: Optional[int] = None) -> float:
        """Regret to horizon T; rounds after termination repeat the terminal regret"""
        if horizon is None or horizon == self.tau:
            return self.total_regret
        if horizon < self.tau:
            return float(self.instantaneous_regret[:horizon].sum())
        return self.total_regret + (horizon - self.tau) * self.terminal_regret

    def record(
        self,
        reward: int,
        num_sets: int,
        event: str = "swap",
        stride: int = 1,
        matching: Optional[Matching] = None,
    ) -> None:
        if event not in MATCHING_EVENTS:
            raise ValueError(f"unknown matching event '{event}'")
        self.rewards.append(int(reward))
        self._cumulative_regret += self.optimal - int(reward)
        if matching is not None:
            self.matchings.append(matching.copy())
        if self.tau % stride == 0 or event != "swap":
            self._append_row(num_sets, event)

    def mark(self, event: str, num_sets: int) -> None:
        """Relabel the event of the latest round"""
        if event not in MATCHING_EVENTS:
            raise ValueError(f"unknown matching event '{event}'")
        if self.rows and self.rows[-1]["round"] == self.tau:
            self.rows[-1]["event"] = event
            self.rows[-1]["num_sets"] = num_sets
        else:
            self._append_row(num_sets, event)

    def _append_row(self, num_sets: int, event: str) -> None:
        values = (self.tau, self.rewards[-1], self._cumulative_regret, num_sets, event)
        self.rows.append(dict(zip(MATCHING_COLUMNS, values)))


def random_matching_trace(population: NodePopulation, fn: str, seed: int) -> IncrementalTrace:
    """Baseline that keeps its initial random matching; regret accrues at a constant rate"""
    matching = Matching.random(population.n, seed_stream(seed, STRATEGY_STREAM))
    trace = IncrementalTrace(value_fn=fn, optimal=optimal_value(population, fn))
    trace.record(matching.value(population.types, fn), 0, "terminate")
    trace.metadata.update({"tau": 1, "n": population.n, "prior": population.prior, "n_high": population.n_high})
    return trace
