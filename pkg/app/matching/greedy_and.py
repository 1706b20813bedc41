"""Least-Size-Merge: greedy Bayes rematching for the AND value function."""
import heapq
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Set, Tuple

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
from app.matching.posterior import MatchingSetState

logger = logging.getLogger(__name__)

EpochHook = Callable[[MatchingSetState], None]


@dataclass
class MergeCall:
    """Outcome of one IS-MERGE(A, B) examination"""

    size_a: int
    size_b: int
    steps: int
    merged: bool
    covered: Optional[Set[Tuple[int, int]]] = None


@dataclass
class AndTrace(IncrementalTrace):
    calls: List[MergeCall] = field(default_factory=list)
    size_history: List[List[int]] = field(default_factory=list)

    @property
    def exploration_rounds(self) -> int:
        return sum(c.steps for c in self.calls)


class LeastSizeMerge:
    """Run state: current matching, open matching sets and the trace being written"""

    def __init__(
        self,
        population: NodePopulation,
        rng: np.random.Generator,
        initial: Optional[Matching] = None,
        stride: int = 1,
        keep_matchings: bool = False,
        instrument: bool = False,
    ):
        self.types = population.types
        self.matching = initial.copy() if initial is not None else Matching.random(population.n, rng)
        if self.matching.n != population.n:
            raise ValueError("initial matching does not cover the population")
        self.stride = stride
        self.keep_matchings = keep_matchings
        self.instrument = instrument
        self.trace = AndTrace(value_fn="and", optimal=optimal_value(population, "and"))
        self.state = MatchingSetState(prior=population.prior, value_fn="and")
        self.reward = 0
        self._heap: List[Tuple[int, int, int]] = []
        self._sets: Dict[int, FrozenSet[int]] = {}
        self._next_id = 0

        for u, v in self.matching.pairs():
            value = self._value(u, v)
            if instrument:
                self.state.observe(u, v, value)
            self.reward += value
            if value:
                self.state.high.update((u, v))
            else:
                self._push(frozenset((u, v)))
        self._record("swap")

    def _value(self, u: int, v: int) -> int:
        return pair_value(int(self.types[u]), int(self.types[v]), "and")

    def _push(self, members: FrozenSet[int]) -> None:
        # least size first, ties to the lowest contained node id
        set_id = self._next_id
        self._next_id += 1
        self._sets[set_id] = members
        heapq.heappush(self._heap, (len(members), min(members), set_id))

    def _pop(self) -> FrozenSet[int]:
        _, _, set_id = heapq.heappop(self._heap)
        return self._sets.pop(set_id)

    @property
    def open_sets(self) -> List[FrozenSet[int]]:
        return [self._sets[i] for _, _, i in sorted(self._heap)]

    def _record(self, event: str, in_flight: int = 0) -> None:
        self.trace.record(
            self.reward,
            len(self._heap) + in_flight,
            event,
            self.stride,
            self.matching if self.keep_matchings else None,
        )

    def _swap(self, u: int, v: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        u_prime, v_prime = int(self.matching.partner[u]), int(self.matching.partner[v])
        self.reward -= self._value(u, u_prime) + self._value(v, v_prime)
        first, second = self.matching.rematch(u, v)
        self.reward += self._value(*first) + self._value(*second)
        if self.instrument:
            self.state.observe(*first, self._value(*first))
            self.state.observe(*second, self._value(*second))
        self._record("swap", in_flight=2)
        return first, second

    def is_merge(self, a_set: FrozenSet[int], b_set: FrozenSet[int]) -> MergeCall:
        """Examine cross pairs of A x B until a high-high pair appears

        Returns merged=True when every cross pair was co-matched without finding one.
        """
        candidates = {u: set(b_set) for u in a_set}
        covered: Optional[Set[Tuple[int, int]]] = set() if self.instrument else None

        def cover(x: int, y: int) -> None:
            if x in a_set and y in b_set:
                candidates[x].discard(y)
                if covered is not None:
                    covered.add((x, y))
            elif y in a_set and x in b_set:
                cover(y, x)

        for u in a_set:
            cover(u, int(self.matching.partner[u]))

        steps = 0
        for u in sorted(a_set):
            while candidates[u]:
                v = min(candidates[u])
                first, second = self._swap(u, v)
                steps += 1
                if self._value(*first) + self._value(*second) == 1:
                    found = first if self._value(*first) else second
                    self.state.high.update(found)
                    self.state.low.update((a_set | b_set) - set(found))
                    return MergeCall(len(a_set), len(b_set), steps, False, covered)
                cover(*first)
                cover(*second)
        return MergeCall(len(a_set), len(b_set), steps, True, covered)

    def run(self, on_epoch: Optional[EpochHook] = None) -> AndTrace:
        while len(self._heap) > 1:
            self.state.sets = self.open_sets
            self.trace.size_history.append([len(s) for s in self.state.sets])
            if on_epoch is not None:
                on_epoch(self.state.snapshot())
            a_set = self._pop()
            b_set = self._pop()
            call = self.is_merge(a_set, b_set)
            self.trace.calls.append(call)
            if call.merged:
                self._push(a_set | b_set)
            self.trace.mark("merge" if call.merged else "remove", len(self._heap))
        self.state.sets = self.open_sets
        self.trace.size_history.append([len(s) for s in self.state.sets])
        self.trace.mark("terminate", len(self._heap))
        return self.trace


def greedy_bayes_and(
    population: NodePopulation,
    seed: int,
    initial: Optional[Matching] = None,
    stride: int = 1,
    keep_matchings: bool = False,
    instrument: bool = False,
    on_epoch: Optional[EpochHook] = None,
) -> AndTrace:
    """Least-Size-Merge from a random (or given) initial matching until at most one set is open"""
    runner = LeastSizeMerge(
        population, seed_stream(seed, STRATEGY_STREAM), initial, stride, keep_matchings, instrument or on_epoch is not None
    )
    trace = runner.run(on_epoch)
    trace.metadata.update(
        {
            "tau": trace.tau,
            "n": population.n,
            "prior": population.prior,
            "n_high": population.n_high,
            "initial_sets": len(trace.size_history[0]),
            "merges": sum(c.merged for c in trace.calls),
            "removals": sum(not c.merged for c in trace.calls),
        }
    )
    logger.debug("AND greedy run: n=%d tau=%d regret=%.1f", population.n, trace.tau, trace.total_regret)
    return trace
