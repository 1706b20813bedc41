"""Super-epoch Markov chain approximating Least-Size-Merge set dynamics."""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from app.matching.posterior import posterior_pi


@dataclass
class ChainTrace:
    """States (X_s, Y_s): regular set count and special set size per super-epoch"""

    n: int
    prior: float
    states: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def absorbed(self) -> bool:
        return bool(self.states) and is_absorbing(*self.states[-1])

    @property
    def superepochs(self) -> int:
        return len(self.states) - 1


def is_absorbing(regular: int, special: int) -> bool:
    return (regular == 0 and special == 0) or (regular == 1 and special == 0) or (regular == 0 and special > 0)


def _special_size(
    s: int, regular: int, special: int, next_regular: int, prior: float, rng: np.random.Generator
) -> int:
    """Special set size after super-epoch s >= 1"""
    if regular % 2:
        partner = 2**s
    elif next_regular > 0:
        partner = 2 ** (s + 1)
    else:
        partner = 0
    if special > 0:
        survive = 1.0 - posterior_pi(partner, prior) * posterior_pi(special, prior)
        return (special + partner) * int(rng.random() < survive)
    if regular % 2 and next_regular > 0:
        survive = 1.0 - posterior_pi(2**s, prior) * posterior_pi(2 ** (s + 1), prior)
        return (2**s + 2 ** (s + 1)) * int(rng.random() < survive)
    return 0


def superepoch_chain(
    n: int, prior: float, seed: int, rng: Optional[np.random.Generator] = None
) -> ChainTrace:
    """Simulate to absorption at (0, 0), (1, 0) or (0, z)

    The first step observes the initial random matching: X_1 ~ Bin(n/2, 1 - pi(1)^2).
    After that X_{s+1} ~ Bin(floor(X_s / 2), 1 - pi(2^s)^2) with the special set
    updated by the three-case rule.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be an even positive integer")
    if not 0.0 <= prior <= 1.0:
        raise ValueError("prior must lie in [0, 1]")
    rng = rng if rng is not None else np.random.default_rng(seed)
    trace = ChainTrace(n, prior, [(n // 2, 0)])
    regular = int(rng.binomial(n // 2, 1.0 - posterior_pi(1, prior) ** 2))
    trace.states.append((regular, 0))
    special = 0
    s = 1
    while not is_absorbing(regular, special):
        merge_probability = 1.0 - posterior_pi(2**s, prior) ** 2
        next_regular = int(rng.binomial(regular // 2, merge_probability))
        special = _special_size(s, regular, special, next_regular, prior, rng)
        regular = next_regular
        trace.states.append((regular, special))
        s += 1
    return trace


def expected_first_regular(n: int, prior: float) -> float:
    """E[X_1] = (n / 2)(1 - pi(1)^2)"""
    return n / 2 * (1.0 - posterior_pi(1, prior) ** 2)
