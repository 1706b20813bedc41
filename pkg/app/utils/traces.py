from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import pandas as pd

COOP_COLUMNS = ["t", "agent", "regret", "avg_regret"]
FEDOCO_COLUMNS = ["t", "agent", "regret", "Q_running"]
MATCHING_COLUMNS = ["round", "reward", "regret", "num_sets", "event"]
CHAIN_COLUMNS = ["superepoch", "regular", "special"]
KEY_COLUMNS = ("t", "agent", "round", "superepoch")


def checkpoint_rounds(horizon: int, stride: int) -> List[int]:
    """Multiples of stride up to horizon, always ending at horizon"""
    if stride < 1:
        raise ValueError("stride must be positive")
    rounds = list(range(stride, horizon + 1, stride))
    if not rounds or rounds[-1] != horizon:
        rounds.append(horizon)
    return rounds


def trace_frame(rows: Iterable[Dict[str, object]], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))


def write_trace(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a trace CSV with round-trip float precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
