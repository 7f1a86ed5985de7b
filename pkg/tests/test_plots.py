"""SVG plot rendering tests: structure, scaling, determinism."""
import re
import statistics

import pytest

from drillguide.plots import _nice_ticks, box_plot_svg, box_stats, radar_svg

GROUPS = {
    "EntryPoint": [2.1, 2.5, 1.8, 2.9, 2.3, 2.0],
    "TargetAxis": [1.6, 1.9, 1.4, 2.1, 1.7, 1.5],
    "DWEP": [0.5, 0.7, 0.4, 0.8, 0.6, 0.5],
    "DWTA": [0.4, 0.5, 0.3, 0.6, 0.45, 0.42],
}


def test_box_stats_inclusive_quartiles():
    vals = [1.0, 2.0, 3.0, 4.0]
    vmin, q1, med, q3, vmax = box_stats(vals)
    want = statistics.quantiles(vals, n=4, method="inclusive")
    assert (q1, med, q3) == tuple(want)
    assert (vmin, vmax) == (1.0, 4.0)
    with pytest.raises(ValueError):
        box_stats([1.0])


def test_box_plot_structure():
    svg = box_plot_svg("PM by condition", "positional error (mm)", GROUPS)
    assert svg.startswith("<svg ")
    assert svg.rstrip().endswith("</svg>")
    # one background rect plus one box rect per group
    assert svg.count("<rect") == 1 + len(GROUPS)
    # median strokes, one per group
    assert svg.count('stroke-width="2.5"') == len(GROUPS)
    for name in GROUPS:
        assert name in svg
    assert "PM by condition" in svg
    assert "positional error (mm)" in svg


def test_box_plot_is_deterministic():
    a = box_plot_svg("t", "y", GROUPS)
    b = box_plot_svg("t", "y", GROUPS)
    assert a == b


def test_box_plot_box_edges_ordered():
    svg = box_plot_svg("t", "y", {"A": [0.0, 1.0, 2.0, 3.0, 4.0]})
    m = re.search(r'<rect x="[\d.]+" y="([\d.]+)" width="[\d.]+" height="([\d.]+)"', svg)
    assert m is not None
    y_top, h = float(m.group(1)), float(m.group(2))
    med = re.search(r'y1="([\d.]+)" x2="[\d.]+" y2="\1" stroke="#4C78A8" '
                    r'stroke-width="2.5"', svg)
    assert med is not None
    y_med = float(med.group(1))
    assert y_top <= y_med <= y_top + h  # median inside the box


def test_box_plot_escapes_markup():
    svg = box_plot_svg('a <b> & "c"', "y", {"g<1>": [1.0, 2.0]})
    assert "<b>" not in svg
    assert "&amp;" in svg and "&lt;b&gt;" in svg
    assert "g&lt;1&gt;" in svg


def test_box_plot_rejects_empty():
    with pytest.raises(ValueError):
        box_plot_svg("t", "y", {})


RADAR = {
    "EntryPoint": {"PM": 0, "RM": 0, "TT": 3},
    "DWTA": {"PM": 3, "RM": 3, "TT": 0},
}


def test_radar_structure_and_determinism():
    svg = radar_svg("wins", ["PM", "RM", "TT"], RADAR, max_value=3.0)
    assert svg.startswith("<svg ")
    # 3 rings plus one polygon per series
    assert svg.count("<polygon") == 3 + len(RADAR)
    for name in RADAR:
        assert name in svg
    for axis in ("PM", "RM", "TT"):
        assert axis in svg
    assert svg == radar_svg("wins", ["PM", "RM", "TT"], RADAR, max_value=3.0)


def test_radar_points_stay_in_canvas():
    series = {"X": {"A": 50.0, "B": 1.0}}  # far beyond max_value, must clip
    svg = radar_svg("t", ["A", "B"], series, max_value=3.0)
    for pts in re.findall(r'points="([^"]+)"', svg):
        for pair in pts.split():
            x, y = (float(v) for v in pair.split(","))
            assert 0.0 <= x <= 560.0
            assert 0.0 <= y <= 560.0


def test_radar_defaults_max_from_data():
    svg = radar_svg("t", ["A"], {"s": {"A": 2.0}})
    assert "<svg " in svg
    with pytest.raises(ValueError):
        radar_svg("t", [], {"s": {}})
    with pytest.raises(ValueError):
        radar_svg("t", ["A"], {})


def test_nice_ticks_cover_range():
    for lo, hi in ((0.0, 1.0), (0.0, 37.0), (0.2, 0.9), (0.0, 120.0), (5.0, 5.0)):
        ticks = _nice_ticks(lo, hi)
        assert ticks == sorted(ticks)
        assert ticks[0] <= lo + 1e-9
        assert ticks[-1] >= min(hi, lo + 1.0) - 1e-9 or ticks[-1] >= hi - 1e-9
        assert 2 <= len(ticks) <= 14
