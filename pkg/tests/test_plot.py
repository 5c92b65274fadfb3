import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpfnav.field import box_environment, solve_laplace
from hpfnav.plot import line_plot, nice_ticks, plot_distance, plot_heatmap, plot_log
from hpfnav.sim import TrajectoryLog, column_names


def _log(rows):
    cols = column_names(("v", "theta", "phi"), ("u1", "u2"))
    data = np.arange(rows * len(cols), dtype=float).reshape(rows, len(cols)) / 10
    return TrajectoryLog.from_array(("v", "theta", "phi"), ("u1", "u2"), data, {"scenario": "demo"})


def test_single_row_log():
    svg = plot_log(_log(1), "xyz")
    assert svg.count("<circle") == 3 and "<polyline" not in svg


def test_empty_and_bad_inputs():
    with pytest.raises(ValueError):
        plot_log(_log(0), "xyz")
    with pytest.raises(ValueError):
        plot_log(_log(3), "pie")
    with pytest.raises(ValueError):
        line_plot([0, 1], {"a": [0, np.nan]})
    with pytest.raises(KeyError):
        plot_log(_log(3), "columns", ["nope"])


def test_all_log_kinds():
    tl = _log(5)
    for kind in ("xyz", "speed", "angles", "controls", "xy", "yz", "xz"):
        svg = plot_log(tl, kind)
        assert svg.startswith("<svg") and svg.endswith("</svg>\n")
    assert "E_p" in plot_log(tl, "columns", ["E_p"])


def test_heatmap_deterministic():
    f = solve_laplace(box_environment((5, 5), target=(2, 2)))
    path = [("descent", np.array([[1.0, 1.0], [2.0, 2.0]]), True)]
    a = plot_heatmap(f, path)
    b = plot_heatmap(solve_laplace(box_environment((5, 5), target=(2, 2))), path)
    assert a == b
    assert a.count('fill="#000000"') == 16    # border cells
    assert 'stroke-dasharray="3 3"' in a


def test_distance_plot():
    svg = plot_distance([0, 1, 2], [3, 2, 3], radius=1.0)
    assert "obstacle radius" in svg


@given(st.floats(-1e3, 1e3), st.floats(0, 1e3))
def test_nice_ticks_cover(lo, span):
    a, b, ticks = nice_ticks(lo, lo + span)
    assert a <= lo + 1e-9 and b >= lo + span - 1e-9
    assert 2 <= len(ticks) <= 12
    assert np.allclose(np.diff(ticks), ticks[1] - ticks[0])
