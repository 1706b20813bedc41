"""Oblivious loss tensors: per-(round, agent, arm) losses in [0, 1].

Round indices are 0-based here; simulations run rounds t = 1..T and read index t - 1.
"""
import logging
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from app.core.exceptions import EnvironmentDataError

logger = logging.getLogger(__name__)

RoundSource = Callable[[int], np.ndarray]


def round_generator(seed: int, t: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator whose draws depend only on (seed, t, stream)"""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, t, stream, 0]))


class LossTensor:
    """Losses of an oblivious adversary, materialized or derived lazily per round"""

    def __init__(
        self,
        horizon: int,
        n_agents: int,
        n_arms: int,
        data: Optional[np.ndarray] = None,
        source: Optional[RoundSource] = None,
        name: str = "explicit",
    ):
        if horizon < 1 or n_agents < 1 or n_arms < 1:
            raise EnvironmentDataError("horizon, n_agents and n_arms must be positive")
        if (data is None) == (source is None):
            raise EnvironmentDataError("exactly one of data or source is required")
        if data is not None:
            data = np.asarray(data, dtype=float)
            if data.shape != (horizon, n_agents, n_arms):
                raise EnvironmentDataError(f"tensor shape {data.shape} != {(horizon, n_agents, n_arms)}")
            if data.size and (data.min() < 0.0 or data.max() > 1.0):
                raise EnvironmentDataError("loss values must lie in [0, 1]")
            data.setflags(write=False)
        self.horizon = horizon
        self.n_agents = n_agents
        self.n_arms = n_arms
        self.name = name
        self._data = data
        self._source = source

    @property
    def mode(self) -> str:
        return "materialized" if self._data is not None else "seeded-lazy"

    def round_losses(self, t: int) -> np.ndarray:
        """(n_agents, n_arms) losses at 0-based round t"""
        if not 0 <= t < self.horizon:
            raise IndexError(f"round {t} outside [0, {self.horizon})")
        if self._data is not None:
            return self._data[t]
        return self._source(t)

    def loss(self, t: int, v: int, i: int) -> float:
        return float(self.round_losses(t)[v, i])

    def average_losses(self, t: int) -> np.ndarray:
        """Across-agent average loss vector at round t"""
        return self.round_losses(t).mean(axis=0)

    def materialize(self) -> np.ndarray:
        if self._data is not None:
            return self._data
        return np.stack([self.round_losses(t) for t in range(self.horizon)])

    def truncated(self, horizon: int) -> "LossTensor":
        """Same adversary over a shorter horizon"""
        if horizon > self.horizon:
            raise EnvironmentDataError("cannot extend a loss tensor")
        if self._data is not None:
            return LossTensor(horizon, self.n_agents, self.n_arms, data=self._data[:horizon], name=self.name)
        return LossTensor(horizon, self.n_agents, self.n_arms, source=self._source, name=self.name)


def linear_means(n_arms: int) -> np.ndarray:
    """mu_i = (1 + 8 (i - 1) / (K - 1)) / 10 for 1-based i"""
    if n_arms < 2:
        raise EnvironmentDataError("bernoulli_linear needs K >= 2")
    return (1.0 + 8.0 * np.arange(n_arms) / (n_arms - 1)) / 10.0


def activation_means(n_arms: int) -> np.ndarray:
    """mu_i = (i - 1) / (K - 1) for 1-based i"""
    if n_arms < 2:
        raise EnvironmentDataError("federated_activation needs K >= 2")
    return np.arange(n_arms) / (n_arms - 1)


class _BernoulliRounds:
    def __init__(self, means: np.ndarray, n_agents: int, seed: int):
        self.means = means
        self.n_agents = n_agents
        self.seed = seed

    def __call__(self, t: int) -> np.ndarray:
        draws = round_generator(self.seed, t).random(len(self.means))
        row = (draws < self.means).astype(float)
        return np.broadcast_to(row, (self.n_agents, len(self.means)))


class _ActivationRounds:
    def __init__(self, means: np.ndarray, n_agents: int, seed: int):
        self.means = means
        self.n_agents = n_agents
        self.seed = seed

    def __call__(self, t: int) -> np.ndarray:
        rng = round_generator(self.seed, t)
        active = np.zeros(self.n_agents, dtype=bool)
        active[rng.integers(0, self.n_agents, size=self.n_agents // 2)] = True
        draws = rng.random((self.n_agents, len(self.means)))
        return (draws < self.means).astype(float) * active[:, None]


def bernoulli_linear_env(n_arms: int, horizon: int, seed: int, n_agents: int = 1) -> LossTensor:
    """Homogeneous Bernoulli losses with linearly spaced means from 0.1 to 0.9"""
    means = linear_means(n_arms)
    return LossTensor(horizon, n_agents, n_arms, source=_BernoulliRounds(means, n_agents, seed), name="bernoulli_linear")


def federated_activation_env(n_agents: int, n_arms: int, horizon: int, seed: int) -> LossTensor:
    """Each round N/2 agents drawn with replacement receive Bernoulli losses; the rest see 0"""
    if n_agents < 2 or n_agents % 2:
        raise EnvironmentDataError("federated_activation needs an even number of agents")
    means = activation_means(n_arms)
    return LossTensor(
        horizon, n_agents, n_arms, source=_ActivationRounds(means, n_agents, seed), name="federated_activation"
    )


def explicit_env(path: Union[str, Path]) -> LossTensor:
    """Load a tensor file: header 'T N K' then T*N*K values in (t, v, i) order"""
    text = Path(path).read_text().split()
    if len(text) < 3:
        raise EnvironmentDataError("tensor file needs a 'T N K' header")
    try:
        horizon, n_agents, n_arms = (int(x) for x in text[:3])
        values = np.array([float(x) for x in text[3:]], dtype=float)
    except ValueError as e:
        raise EnvironmentDataError(f"malformed tensor file: {e}") from e
    if values.size != horizon * n_agents * n_arms:
        raise EnvironmentDataError(f"expected {horizon * n_agents * n_arms} values, found {values.size}")
    if not np.all(np.isfinite(values)):
        raise EnvironmentDataError("tensor values must be finite")
    return LossTensor(horizon, n_agents, n_arms, data=values.reshape(horizon, n_agents, n_arms))


def write_tensor(tensor: LossTensor, path: Union[str, Path]) -> None:
    data = tensor.materialize()
    with open(path, "w") as handle:
        handle.write(f"{tensor.horizon} {tensor.n_agents} {tensor.n_arms}\n")
        np.savetxt(handle, data.reshape(tensor.horizon * tensor.n_agents, tensor.n_arms), fmt="%.17g")
