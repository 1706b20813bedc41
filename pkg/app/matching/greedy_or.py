"""Greedy Bayes rematching for the OR value function.

Known low-low pairs are used as probes: swapping one of them with an unknown
value-1 pair reveals the types of both unknown nodes in a single round.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from app.matching.population import (
    STRATEGY_STREAM,
    IncrementalTrace,
    Matching,
    NodePopulation,
    optimal_value,
    pair_value,
    seed_stream,
)

logger = logging.getLogger(__name__)


@dataclass
class OrTrace(IncrementalTrace):
    s_history: List[int] = field(default_factory=list)
    u_history: List[int] = field(default_factory=list)
    u11_history: List[int] = field(default_factory=list)
    k_history: List[int] = field(default_factory=list)

    @property
    def initial_probes(self) -> int:
        return self.s_history[0] if self.s_history else 0

    @property
    def initial_unknown(self) -> int:
        return self.u_history[0] if self.u_history else 0


def _take(pool: List[tuple], rng: np.random.Generator) -> tuple:
    """Remove and return a uniformly random element"""
    i = int(rng.integers(len(pool)))
    pool[i], pool[-1] = pool[-1], pool[i]
    return pool.pop()


def greedy_bayes_or(
    population: NodePopulation,
    seed: int,
    initial: Optional[Matching] = None,
    stride: int = 1,
    keep_matchings: bool = False,
) -> OrTrace:
    """Run until no known low-low pair or no unknown value-1 pair remains"""
    rng = seed_stream(seed, STRATEGY_STREAM)
    types = population.types
    matching = initial.copy() if initial is not None else Matching.random(population.n, rng)
    if matching.n != population.n:
        raise ValueError("initial matching does not cover the population")
    trace = OrTrace(value_fn="or", optimal=optimal_value(population, "or"))

    probes: List[tuple] = []
    unknown: List[tuple] = []
    for u, v in matching.pairs():
        (unknown if pair_value(int(types[u]), int(types[v]), "or") else probes).append((u, v))
    known = 0
    u11 = sum(1 for u, v in unknown if types[u] and types[v])

    def snapshot(event: str) -> None:
        trace.s_history.append(len(probes))
        trace.u_history.append(len(unknown))
        trace.u11_history.append(u11)
        trace.k_history.append(known)
        trace.record(
            len(unknown) + known,
            len(probes),
            event,
            stride,
            matching if keep_matchings else None,
        )

    while probes and unknown:
        snapshot("swap")
        a, b = _take(probes, rng)
        x, y = _take(unknown, rng)
        matching.rematch(a, x)
        high_x, high_y = int(types[x]), int(types[y])
        if high_x and high_y:
            known += 2
            u11 -= 1
        else:
            # the low unknown node rejoins a low probe
            known += 1
            probes.append((b, y) if high_x else (a, x))
    snapshot("terminate")
    trace.metadata.update(
        {
            "tau": trace.tau,
            "n": population.n,
            "prior": population.prior,
            "n_high": population.n_high,
            "S_1": trace.s_history[0],
            "U_1": trace.u_history[0],
            "U11_1": trace.u11_history[0],
        }
    )
    logger.debug("OR greedy run: n=%d tau=%d regret=%.1f", population.n, trace.tau, trace.total_regret)
    return trace
