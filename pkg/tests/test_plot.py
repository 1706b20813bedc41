import re

import numpy as np
import pandas as pd
import pytest

from app.analysis.bounds import BoundCurve
from app.core.exceptions import PlotError
from app.schemas.experiment import PlotSpec
from app.services.plot_service import plot_csv, read_curve, render_svg


def test_one_series_one_line(tmp_path):
    """One series with two points draws exactly one line"""
    path = render_svg([("regret", np.array([1.0, 2.0]), np.array([3.0, 4.0]))], tmp_path / "one.svg")
    svg = path.read_text()
    assert svg.count('id="series-') == 1
    assert 'id="overlay-' not in svg
    assert re.search(r'<g id="series-0">\s*<path ', svg)
    assert "<polyline" not in svg


def test_log_axis_rejects_zero(tmp_path):
    with pytest.raises(PlotError):
        render_svg([("a", np.array([0.0, 1.0]), np.array([1.0, 2.0]))], tmp_path / "bad.svg", log_x=True)
    with pytest.raises(PlotError):
        render_svg([("a", np.array([1.0, 2.0]), np.array([0.0, 2.0]))], tmp_path / "bad.svg", log_y=True)


def test_empty_series_rejected(tmp_path):
    with pytest.raises(PlotError):
        render_svg([], tmp_path / "empty.svg")
    with pytest.raises(PlotError):
        render_svg([("a", np.array([]), np.array([]))], tmp_path / "empty.svg")


def test_overlay_with_bound_curve(tmp_path):
    """Empirical curve plus a reference curve: two lines, legend in input order"""
    curve_path = BoundCurve("or_asymptotic", "n", {"p": 0.3}).write_csv(tmp_path / "reference.csv", [16, 64, 256])
    path = render_svg(
        [("empirical", np.array([16.0, 64.0, 256.0]), np.array([0.5, 9.0, 140.0]))],
        tmp_path / "overlay.svg",
        log_x=True,
        log_y=True,
        overlays=[read_curve(curve_path)],
    )
    svg = path.read_text()
    assert svg.count('id="series-0"') == 1
    assert svg.count('id="overlay-0"') == 1
    assert svg.index(">empirical<") < svg.index(">reference<")


def test_render_is_byte_stable(tmp_path):
    series = [("a", np.array([1.0, 2.0, 3.0]), np.array([1.0, 4.0, 9.0])), ("b", np.array([1.0, 3.0]), np.array([2.0, 2.5]))]
    first = render_svg(series, tmp_path / "first.svg", title="stable").read_bytes()
    second = render_svg(series, tmp_path / "second.svg", title="stable").read_bytes()
    assert first == second


def test_plot_csv_groups_series(tmp_path):
    """Rows split into one line per algorithm, filtered by variant"""
    summary = pd.DataFrame(
        {
            "variant": ["v1", "v1", "v1", "v1", "v2"],
            "algorithm": ["cftrl", "cftrl", "dftrl", "dftrl", "cftrl"],
            "t": [10, 20, 10, 20, 10],
            "avg_regret_mean": [1.0, 1.5, 2.0, 2.5, 9.0],
        }
    )
    csv = tmp_path / "summary.csv"
    summary.to_csv(csv, index=False)
    spec = PlotSpec(filter_column="variant", filter_value="v1", output="curves.svg")
    path = plot_csv(csv, spec)
    assert path == tmp_path / "curves.svg"
    svg = path.read_text()
    assert svg.count('id="series-') == 2


def test_plot_csv_missing_column(tmp_path):
    csv = tmp_path / "summary.csv"
    pd.DataFrame({"t": [1], "value": [2.0]}).to_csv(csv, index=False)
    with pytest.raises(PlotError):
        plot_csv(csv, PlotSpec())
