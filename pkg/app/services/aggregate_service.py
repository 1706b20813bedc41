"""Seed-wise reduction of trace CSVs into mean/std summaries."""
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd

from app.core.exceptions import AggregateError
from app.utils.traces import KEY_COLUMNS, write_trace

logger = logging.getLogger(__name__)

TRACE_GLOB = "trace_seed*.csv"


def read_trace(path: Union[str, Path]) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise AggregateError(f"cannot read trace {path}: {e}") from e


def aggregate_frames(frames: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """Mean and sample std (n - 1) of every numeric column per checkpoint key, plus the seed count"""
    if not frames:
        raise AggregateError("no traces to aggregate")
    columns = list(frames[0].columns)
    for frame in frames[1:]:
        if list(frame.columns) != columns:
            raise AggregateError(f"schema mismatch: {list(frame.columns)} vs {columns}")
    keys = [c for c in columns if c in KEY_COLUMNS]
    if not keys:
        raise AggregateError(f"traces carry none of the key columns {KEY_COLUMNS}")
    combined = pd.concat(frames, ignore_index=True)
    values = [c for c in columns if c not in keys and pd.api.types.is_numeric_dtype(combined[c])]

    grouped = combined.groupby(keys, sort=True)
    mean = grouped[values].mean().add_suffix("_mean")
    std = grouped[values].std(ddof=1).fillna(0.0).add_suffix("_std")
    count = grouped.size().rename("count")
    ordered = [f"{c}_{stat}" for c in values for stat in ("mean", "std")]
    summary = pd.concat([mean, std], axis=1)[ordered].join(count)
    return summary.reset_index()


def aggregate_finals(finals: pd.DataFrame) -> pd.DataFrame:
    """(variant, algorithm, metric) -> mean, std, count over seeds"""
    required = {"variant", "algorithm", "metric", "value"}
    if not required.issubset(finals.columns):
        raise AggregateError(f"finals need columns {sorted(required)}")
    grouped = finals.groupby(["variant", "algorithm", "metric"], sort=False)["value"]
    result = pd.DataFrame(
        {
            "mean": grouped.mean(),
            "std": grouped.std(ddof=1).fillna(0.0),
            "count": grouped.size(),
        }
    )
    return result.reset_index()


def aggregate_directory(directory: Union[str, Path]) -> Path:
    """Reduce every trace_seed*.csv under directory, grouped by its variant/algorithm folders"""
    directory = Path(directory)
    paths = sorted(directory.rglob(TRACE_GLOB))
    if not paths:
        raise AggregateError(f"no {TRACE_GLOB} files under {directory}")
    groups: Dict[Path, List[Path]] = {}
    for path in paths:
        groups.setdefault(path.parent, []).append(path)

    summaries = []
    for parent, group in groups.items():
        parts = parent.relative_to(directory).parts
        summary = aggregate_frames([read_trace(p) for p in group])
        summary.insert(0, "algorithm", parts[-1] if parts else "")
        summary.insert(0, "variant", parts[0] if len(parts) > 1 else "")
        summaries.append(summary)
        logger.debug("aggregated %d traces in %s", len(group), parent)
    return write_trace(pd.concat(summaries, ignore_index=True), directory / "summary.csv")
