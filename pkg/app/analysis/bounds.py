"""Closed-form regret evaluators used as reference curves and acceptance oracles."""
import inspect
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, Union

import numpy as np
import pandas as pd

from app.fed.fedexp3 import consensus_constant
from app.matching.posterior import posterior_pi
from app.utils.traces import write_trace

AND_CONSTANT_FLOOR = 16.0 / (math.sqrt(2.0) - 1.0)
DEFAULT_AND_CONSTANT = 39.0


def _check_prior(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")


def or_asymptotic_regret(n: float, p: float) -> float:
    """(1 - (1-p)^2) / (8 p^2) * min{p, 1-p}^4 * n^2, zero at p in {0, 1}"""
    _check_prior(p)
    if p in (0.0, 1.0):
        return 0.0
    return (1.0 - (1.0 - p) ** 2) / (8.0 * p**2) * min(p, 1.0 - p) ** 4 * n**2


def and_bound_terms(n: int, p: float, c: float = DEFAULT_AND_CONSTANT) -> Dict[str, float]:
    """The three coefficients a, b, c of the Least-Size-Merge bound (a + b + c) n^2"""
    _check_prior(p)
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two, at least 2")
    if c <= AND_CONSTANT_FLOOR:
        raise ValueError(f"constant must exceed 16/(sqrt 2 - 1) = {AND_CONSTANT_FLOOR:.4f}")
    levels = int(round(math.log2(n)))
    p_s = np.array([posterior_pi(2**s, p) for s in range(levels + 1)])
    q_s = 1.0 - p_s**2

    a_term = 0.0
    b_term = 0.0
    for s in range(1, levels + 1):
        head = (1.0 - 0.5 * p_s[s]) * (1.0 - 0.5 * p_s[s] ** 2) * p_s[s]
        squared = float(np.prod(q_s[:s] ** 2))
        mixed = sum(
            2 ** (i + 1) * float(np.prod(q_s[: i + 1])) * float(np.prod(q_s[i + 1 : s] ** 2)) for i in range(s)
        )
        a_term += head * (squared + mixed / n)
        b_term += 2 ** (s + 1) * p_s[s] * float(np.prod(q_s[:s]))
    c_term = 4.0 / 3.0 if p == 0.0 else min(c / (n * p), 4.0 / 3.0)
    return {"a": 0.25 * a_term, "b": b_term / n, "c": c_term}


def and_regret_bound(n: int, p: float, c: float = DEFAULT_AND_CONSTANT) -> float:
    terms = and_bound_terms(n, p, c)
    return (terms["a"] + terms["b"] + terms["c"]) * n**2


def fedexp3_regret_bound(n_arms: int, horizon: float, sigma2: float, n_agents: int) -> float:
    """5 (C_W K^2 log K)^(1/3) T^(2/3)"""
    c_w = consensus_constant(int(horizon), n_agents, sigma2)
    return 5.0 * (c_w * n_arms**2 * math.log(n_arms)) ** (1.0 / 3.0) * horizon ** (2.0 / 3.0)


def random_matching_regret(n: float, p: float, fn: str) -> float:
    _check_prior(p)
    if fn == "or":
        return 0.5 * min(p, 1.0 - p) ** 2 * n
    if fn == "and":
        return 0.5 * p * (1.0 - p) * n
    raise ValueError(f"unknown value function '{fn}'")


def coop_lower_bound(horizon: float, n_arms: int, neighborhood: int, delay: int) -> float:
    """Unnormalized max{min{T, sqrt(K T / |N(v)|)}, sqrt(d T log K)}"""
    bandit = min(horizon, math.sqrt(n_arms * horizon / neighborhood))
    return max(bandit, math.sqrt(delay * horizon * math.log(n_arms)))


def fed_lower_bound(
    horizon: float, n_arms: int, degree: int, max_degree: int, algebraic_connectivity: float
) -> float:
    """Unnormalized max{sqrt(K T / (1 + d_v)), ((1 + d_max) / lambda_{N-1})^(1/4) sqrt(T log K)}"""
    bandit = math.sqrt(n_arms * horizon / (1 + degree))
    if algebraic_connectivity <= 0:
        return math.inf
    full_info = ((1 + max_degree) / algebraic_connectivity) ** 0.25 * math.sqrt(horizon * math.log(n_arms))
    return max(bandit, full_info)


def matching_lower_bound(n: float, p: float, fn: str) -> float:
    _check_prior(p)
    if fn == "or":
        return min(p, 1.0 - p) ** 4 * n**2
    if fn == "and":
        return (p * (1.0 - p)) ** 2 * n**2
    raise ValueError(f"unknown value function '{fn}'")


EVALUATORS: Dict[str, Callable[..., float]] = {
    "or_asymptotic": or_asymptotic_regret,
    "and_bound": and_regret_bound,
    "fedexp3_bound": fedexp3_regret_bound,
    "random_matching": random_matching_regret,
    "coop_lower": coop_lower_bound,
    "fed_lower": fed_lower_bound,
    "matching_lower": matching_lower_bound,
}


@dataclass(frozen=True)
class BoundCurve:
    """One evaluator with all parameters fixed except the x-axis variable"""

    name: str
    x_param: str
    params: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in EVALUATORS:
            raise ValueError(f"unknown bound '{self.name}'; choose from {sorted(EVALUATORS)}")
        accepted = inspect.signature(EVALUATORS[self.name]).parameters
        if self.x_param not in accepted:
            raise ValueError(f"bound '{self.name}' has no parameter '{self.x_param}'")
        unknown = set(self.params) - set(accepted)
        if unknown:
            raise ValueError(f"bound '{self.name}' does not accept {sorted(unknown)}")

    def __call__(self, x: float) -> float:
        value = EVALUATORS[self.name](**{**self.params, self.x_param: x})
        if value < 0:
            raise ValueError(f"bound '{self.name}' returned a negative value at {self.x_param}={x}")
        return value

    def evaluate(self, xs: Iterable[float]) -> np.ndarray:
        return np.array([self(x) for x in xs], dtype=float)

    def to_frame(self, xs: Iterable[float]) -> pd.DataFrame:
        xs = list(xs)
        return pd.DataFrame({"x": xs, "value": self.evaluate(xs)})

    def write_csv(self, path: Union[str, Path], xs: Iterable[float]) -> Path:
        return write_trace(self.to_frame(xs), path)


def evaluate_bound(name: str, **params) -> float:
    if name not in EVALUATORS:
        raise ValueError(f"unknown bound '{name}'; choose from {sorted(EVALUATORS)}")
    return EVALUATORS[name](**params)
