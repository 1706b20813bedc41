import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from app.core.exceptions import EnvironmentDataError
from app.env.losses import LossTensor

logger = logging.getLogger(__name__)

COLUMNS = ["agent_id", "arm_id", "rating", "timestamp"]
VALID_RATINGS = frozenset(x / 2 for x in range(1, 11))
MAX_RATING = 5.5


def rating_to_loss(rating: float) -> float:
    """(5.5 - r) / 5.5"""
    return (MAX_RATING - rating) / MAX_RATING


def load_ratings(path: Union[str, Path]) -> pd.DataFrame:
    """Read 'agent_id,arm_id,rating,timestamp' rows, dropping invalid ratings with a warning"""
    try:
        frame = pd.read_csv(path, header=None, names=COLUMNS, comment="#", skipinitialspace=True)
    except (OSError, pd.errors.ParserError) as e:
        raise EnvironmentDataError(f"cannot read ratings file: {e}") from e
    if len(frame) and pd.isna(pd.to_numeric(frame.iloc[0]["rating"], errors="coerce")):
        frame = frame.iloc[1:]
    try:
        frame = frame.astype({"agent_id": int, "arm_id": int, "rating": float, "timestamp": float})
    except (ValueError, TypeError) as e:
        raise EnvironmentDataError(f"malformed ratings row: {e}") from e
    if not frame["timestamp"].is_monotonic_increasing:
        raise EnvironmentDataError("ratings rows must be sorted ascending by timestamp")
    valid = frame["rating"].isin(VALID_RATINGS)
    for row in frame[~valid].itertuples():
        logger.warning(
            "rejected rating %s for agent %s arm %s at %s", row.rating, row.agent_id, row.arm_id, row.timestamp
        )
    return frame[valid].reset_index(drop=True)


def ratings_env(path: Union[str, Path], n_agents: int, n_arms: int, horizon: Optional[int] = None) -> LossTensor:
    """Piecewise-constant losses: the j-th rating of (v, i) covers [j w, (j + 1) w) with w = floor(T / m)"""
    frame = load_ratings(path)
    out_of_range = (frame["agent_id"] < 0) | (frame["agent_id"] >= n_agents) | (frame["arm_id"] < 0) | (
        frame["arm_id"] >= n_arms
    )
    if out_of_range.any():
        raise EnvironmentDataError("agent_id or arm_id outside the configured sizes")
    grouped = {key: group["rating"].to_numpy() for key, group in frame.groupby(["agent_id", "arm_id"], sort=True)}
    missing = [(v, i) for v in range(n_agents) for i in range(n_arms) if (v, i) not in grouped]
    if missing:
        raise EnvironmentDataError(f"agent {missing[0][0]} has no ratings for arm {missing[0][1]}")
    if horizon is None:
        horizon = max(len(r) for r in grouped.values())

    data = np.empty((horizon, n_agents, n_arms))
    for (v, i), ratings in grouped.items():
        width = horizon // len(ratings)
        if width == 0:
            logger.warning("agent %d arm %d has %d ratings for %d rounds; extras dropped", v, i, len(ratings), horizon)
            width = 1
        losses = rating_to_loss(ratings)
        for j, value in enumerate(losses):
            start = j * width
            if start >= horizon:
                break
            data[start:, v, i] = value
    return LossTensor(horizon, n_agents, n_arms, data=data, name="ratings")
