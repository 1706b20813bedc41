"""Online convex problems for federated dual averaging."""
import math
from typing import Callable, Optional

import numpy as np

from app.core.exceptions import EnvironmentDataError
from app.env.losses import round_generator

DECISION_SETS = ("simplex", "l2_ball")
ParamSource = Callable[[int], np.ndarray]


class OcoProblem:
    """Per-(t, v) convex losses over a decision set.

    linear:    f_t^v(x) = <c_t^v, x> on the simplex, c in [0, 1]^K, L = 1 (dual norm: max-norm)
    quadratic: f_t^v(x) = 0.5 ||x - b_t^v||^2 on the L2 ball, ||b|| <= radius, L = 2 radius
    """

    def __init__(
        self,
        kind: str,
        dimension: int,
        n_agents: int,
        horizon: int,
        source: ParamSource,
        set_radius: float = 1.0,
    ):
        if kind not in ("linear", "quadratic"):
            raise EnvironmentDataError(f"unknown OCO loss kind '{kind}'")
        if dimension < 1 or n_agents < 1 or horizon < 1:
            raise EnvironmentDataError("dimension, n_agents and horizon must be positive")
        self.kind = kind
        self.dimension = dimension
        self.n_agents = n_agents
        self.horizon = horizon
        self.set_radius = set_radius
        self._source = source

    @property
    def decision_set(self) -> str:
        return "simplex" if self.kind == "linear" else "l2_ball"

    @property
    def lipschitz(self) -> float:
        return 1.0 if self.kind == "linear" else 2.0 * self.set_radius

    @property
    def regularizer_radius(self) -> float:
        """R with psi(x*) <= R^2"""
        if self.decision_set == "simplex":
            return math.sqrt(max(math.log(self.dimension), 1e-12))
        return self.set_radius / math.sqrt(2.0)

    def params(self, t: int) -> np.ndarray:
        """(n_agents, dimension) loss parameters at 0-based round t"""
        return self._source(t)

    def loss(self, t: int, v: int, x: np.ndarray) -> float:
        theta = self.params(t)[v]
        if self.kind == "linear":
            return float(theta @ x)
        return 0.5 * float(np.sum((x - theta) ** 2))

    def network_loss(self, t: int, x: np.ndarray) -> float:
        """f_t(x) = (1/N) sum_v f_t^v(x)"""
        theta = self.params(t)
        if self.kind == "linear":
            return float(theta.mean(axis=0) @ x)
        return 0.5 * float(np.mean(np.sum((x[None, :] - theta) ** 2, axis=1)))

    def subgradient(self, t: int, v: int, x: np.ndarray) -> np.ndarray:
        theta = self.params(t)[v]
        if self.kind == "linear":
            return theta.copy()
        return x - theta

    def dual_norm(self, g: np.ndarray) -> float:
        if self.decision_set == "simplex":
            return float(np.max(np.abs(g)))
        return float(np.linalg.norm(g))

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        if self.decision_set == "simplex":
            return bool(x.min() >= -tol and abs(x.sum() - 1.0) <= tol)
        return bool(np.linalg.norm(x) <= self.set_radius + tol)

    def best_fixed_point(self, mean_param: np.ndarray) -> np.ndarray:
        """Minimizer of sum_s f_s given the across-(s, v) mean parameter"""
        if self.kind == "linear":
            point = np.zeros(self.dimension)
            point[int(np.argmin(mean_param))] = 1.0
            return point
        norm = np.linalg.norm(mean_param)
        if norm <= self.set_radius:
            return mean_param.copy()
        return mean_param * (self.set_radius / norm)


class ComparatorTracker:
    """Running value of min_x sum_{s<=t} f_s(x) for the network loss"""

    def __init__(self, problem: OcoProblem):
        self.problem = problem
        self.rounds = 0
        self.first_moment = np.zeros(problem.dimension)
        self.second_moment = 0.0

    def update(self, params: np.ndarray) -> None:
        self.rounds += 1
        self.first_moment += params.mean(axis=0)
        if self.problem.kind == "quadratic":
            self.second_moment += float(np.mean(np.sum(params**2, axis=1)))

    def best_point(self) -> np.ndarray:
        return self.problem.best_fixed_point(self.first_moment / max(self.rounds, 1))

    def value(self) -> float:
        x = self.best_point()
        if self.problem.kind == "linear":
            return float(self.first_moment @ x)
        return 0.5 * (self.rounds * float(x @ x) - 2.0 * float(x @ self.first_moment) + self.second_moment)


class _UniformCosts:
    def __init__(self, n_agents: int, dimension: int, seed: int):
        self.shape = (n_agents, dimension)
        self.seed = seed

    def __call__(self, t: int) -> np.ndarray:
        return round_generator(self.seed, t, stream=1).random(self.shape)


class _BallTargets:
    def __init__(self, n_agents: int, dimension: int, radius: float, seed: int):
        self.n_agents = n_agents
        self.dimension = dimension
        self.radius = radius
        self.seed = seed

    def __call__(self, t: int) -> np.ndarray:
        rng = round_generator(self.seed, t, stream=2)
        direction = rng.standard_normal((self.n_agents, self.dimension))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        scale = rng.random((self.n_agents, 1)) ** (1.0 / self.dimension) * self.radius
        return direction / norms * scale


class _ConstantParams:
    def __init__(self, params: np.ndarray):
        self.params = params

    def __call__(self, t: int) -> np.ndarray:
        return self.params


def oco_linear_env(
    dimension: int, n_agents: int, horizon: int, seed: int, constant: Optional[np.ndarray] = None
) -> OcoProblem:
    if constant is not None:
        costs = np.broadcast_to(np.asarray(constant, dtype=float), (n_agents, dimension))
        if costs.min() < 0 or costs.max() > 1:
            raise EnvironmentDataError("linear costs must lie in [0, 1]")
        source: ParamSource = _ConstantParams(costs)
    else:
        source = _UniformCosts(n_agents, dimension, seed)
    return OcoProblem("linear", dimension, n_agents, horizon, source)


def oco_quadratic_env(
    dimension: int,
    n_agents: int,
    horizon: int,
    seed: int,
    radius: float = 1.0,
    constant: Optional[np.ndarray] = None,
) -> OcoProblem:
    if constant is not None:
        targets = np.broadcast_to(np.asarray(constant, dtype=float), (n_agents, dimension))
        if np.linalg.norm(targets, axis=1).max() > radius + 1e-12:
            raise EnvironmentDataError("quadratic targets must lie in the ball")
        source: ParamSource = _ConstantParams(targets)
    else:
        source = _BallTargets(n_agents, dimension, radius, seed)
    return OcoProblem("quadratic", dimension, n_agents, horizon, source, set_radius=radius)
