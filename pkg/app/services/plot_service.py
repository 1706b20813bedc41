"""Deterministic SVG line plots of summaries and reference curves."""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.core.exceptions import PlotError  # noqa: E402
from app.schemas.experiment import PlotSpec  # noqa: E402

logger = logging.getLogger(__name__)

SVG_SALT = "maclab"
Series = Tuple[str, np.ndarray, np.ndarray]


def _series(frame: pd.DataFrame, spec: PlotSpec) -> List[Series]:
    for column in (spec.x, spec.y):
        if column not in frame.columns:
            raise PlotError(f"column '{column}' not in the data")
    if spec.filter_column is not None:
        if spec.filter_column not in frame.columns:
            raise PlotError(f"filter column '{spec.filter_column}' not in the data")
        frame = frame[frame[spec.filter_column].astype(str) == spec.filter_value]
    if spec.series and spec.series in frame.columns:
        groups = [(str(name), group) for name, group in frame.groupby(spec.series, sort=False)]
    else:
        groups = [(spec.y, frame)]
    if not groups:
        raise PlotError("no data to plot")
    series = []
    for name, group in groups:
        group = group.sort_values(spec.x)
        series.append((name, group[spec.x].to_numpy(dtype=float), group[spec.y].to_numpy(dtype=float)))
    return series


def read_curve(path: Union[str, Path]) -> Series:
    curve = pd.read_csv(path)
    if list(curve.columns[:2]) != ["x", "value"]:
        raise PlotError(f"curve file {path} needs columns x, value")
    return Path(path).stem, curve["x"].to_numpy(dtype=float), curve["value"].to_numpy(dtype=float)


def render_svg(
    series: Sequence[Series],
    path: Union[str, Path],
    log_x: bool = False,
    log_y: bool = False,
    title: Optional[str] = None,
    xlabel: Optional[str] = None,
    ylabel: Optional[str] = None,
    overlays: Sequence[Series] = (),
) -> Path:
    """One Line2D per series (gid series-<i>), legend in input order, byte-stable output"""
    everything = list(series) + list(overlays)
    if not series or any(x.size == 0 for _, x, _ in everything):
        raise PlotError("empty series")
    if log_x and any((x <= 0).any() for _, x, _ in everything):
        raise PlotError("log x-axis needs positive x values")
    if log_y and any((y <= 0).any() for _, _, y in everything):
        raise PlotError("log y-axis needs positive values")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        try:
            for i, (name, x, y) in enumerate(series):
                ax.plot(x, y, label=name, gid=f"series-{i}")
            for j, (name, x, y) in enumerate(overlays):
                ax.plot(x, y, label=name, linestyle="--", color="black", gid=f"overlay-{j}")
            if log_x:
                ax.set_xscale("log")
            if log_y:
                ax.set_yscale("log")
            if title:
                ax.set_title(title)
            ax.set_xlabel(xlabel or "")
            ax.set_ylabel(ylabel or "")
            ax.legend()
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.debug("wrote plot %s with %d series", path, len(everything))
    return path


def plot_frame(frame: pd.DataFrame, spec: PlotSpec, path: Union[str, Path], base_dir: Optional[Path] = None) -> Path:
    overlays = [read_curve(Path(base_dir or ".") / p if not Path(p).is_absolute() else p) for p in spec.overlays]
    return render_svg(
        _series(frame, spec),
        path,
        log_x=spec.log_x,
        log_y=spec.log_y,
        title=spec.title,
        xlabel=spec.xlabel or spec.x,
        ylabel=spec.ylabel or spec.y,
        overlays=overlays,
    )


def plot_csv(csv_path: Union[str, Path], spec: PlotSpec, output: Optional[Union[str, Path]] = None) -> Path:
    csv_path = Path(csv_path)
    try:
        frame = pd.read_csv(csv_path)
    except (OSError, pd.errors.EmptyDataError) as e:
        raise PlotError(f"cannot read {csv_path}: {e}") from e
    target = Path(output) if output else csv_path.parent / spec.output
    return plot_frame(frame, spec, target, base_dir=csv_path.parent)


def plot_run(output_dir: Union[str, Path], spec: PlotSpec) -> Path:
    """Plot the summary.csv or finals.csv of a finished run"""
    output_dir = Path(output_dir)
    source = output_dir / ("finals.csv" if spec.source == "finals" else "summary.csv")
    return plot_csv(source, spec, output_dir / spec.output)
