"""Static SVG plots, no drawing dependencies.

Output is a deterministic function of the input data: coordinates are
formatted to fixed precision and element order follows input order, so
plot files are byte-stable and diffable. Box plots show median and
quartiles (inclusive method) with whiskers to the extremes; the radar
chart plots one polygon per condition over a shared set of axes.
"""
from __future__ import annotations

import math
import statistics
from typing import Mapping, Sequence

CONDITION_COLORS = {
    "EntryPoint": "#4C78A8",
    "TargetAxis": "#F58518",
    "DWEP": "#54A24B",
    "DWTA": "#B279A2",
}
_FALLBACK_COLORS = ("#4C78A8", "#F58518", "#54A24B", "#B279A2", "#E45756",
                    "#72B7B2", "#EECA3B", "#9D755D")


def _color(name: str, index: int) -> str:
    return CONDITION_COLORS.get(name, _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(1, target)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.floor(lo / step) * step
    last = math.ceil(hi / step - 1e-9) * step
    n = int(round((last - first) / step))
    return [round(first + i * step, 10) for i in range(n + 1)]


def box_stats(values: Sequence[float]) -> tuple[float, float, float, float, float]:
    """(min, q1, median, q3, max) with inclusive quartiles."""
    if len(values) < 2:
        raise ValueError("need at least 2 values per group")
    q1, med, q3 = statistics.quantiles(values, n=4, method="inclusive")
    return min(values), q1, med, q3, max(values)


def box_plot_svg(title: str, ylabel: str, groups: Mapping[str, Sequence[float]]) -> str:
    """Box-and-whisker chart, one box per group, in input order."""
    if not groups:
        raise ValueError("no groups to plot")
    names = list(groups)
    stats = {name: box_stats(groups[name]) for name in names}
    left, right, top, bottom = 64.0, 24.0, 46.0, 54.0
    slot = 104.0
    width = left + right + slot * len(names)
    height = 420.0
    plot_h = height - top - bottom
    lo = min(0.0, min(s[0] for s in stats.values()))
    hi = max(s[4] for s in stats.values())
    ticks = _nice_ticks(lo, hi)
    lo, hi = min(ticks[0], lo), max(ticks[-1], hi)

    def sy(v: float) -> float:
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        '<g font-family="sans-serif" font-size="12" fill="#222">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#FFFFFF"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="15" '
        f'font-weight="bold">{_esc(title)}</text>',
        f'<text x="16" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.1f})">{_esc(ylabel)}</text>',
    ]
    for t in ticks:
        y = sy(t)
        out.append(f'<line x1="{left:.1f}" y1="{_fmt(y)}" x2="{width - right:.1f}" '
                   f'y2="{_fmt(y)}" stroke="#DDDDDD" stroke-width="1"/>')
        out.append(f'<text x="{left - 8:.1f}" y="{_fmt(y + 4)}" '
                   f'text-anchor="end">{t:g}</text>')
    out.append(f'<line x1="{left:.1f}" y1="{_fmt(sy(lo))}" x2="{width - right:.1f}" '
               f'y2="{_fmt(sy(lo))}" stroke="#444444" stroke-width="1"/>')
    box_w = 46.0
    for i, name in enumerate(names):
        vmin, q1, med, q3, vmax = stats[name]
        cx = left + slot * (i + 0.5)
        color = _color(name, i)
        out.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(sy(vmin))}" x2="{_fmt(cx)}" '
                   f'y2="{_fmt(sy(vmax))}" stroke="{color}" stroke-width="1.5"/>')
        for v in (vmin, vmax):
            out.append(f'<line x1="{_fmt(cx - box_w / 4)}" y1="{_fmt(sy(v))}" '
                       f'x2="{_fmt(cx + box_w / 4)}" y2="{_fmt(sy(v))}" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        y3, y1 = sy(q3), sy(q1)
        out.append(f'<rect x="{_fmt(cx - box_w / 2)}" y="{_fmt(y3)}" '
                   f'width="{_fmt(box_w)}" height="{_fmt(max(y1 - y3, 0.5))}" '
                   f'fill="{color}" fill-opacity="0.35" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<line x1="{_fmt(cx - box_w / 2)}" y1="{_fmt(sy(med))}" '
                   f'x2="{_fmt(cx + box_w / 2)}" y2="{_fmt(sy(med))}" '
                   f'stroke="{color}" stroke-width="2.5"/>')
        out.append(f'<text x="{_fmt(cx)}" y="{height - bottom + 20:.1f}" '
                   f'text-anchor="middle">{_esc(name)}</text>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def radar_svg(title: str, axes: Sequence[str],
              series: Mapping[str, Mapping[str, float]],
              max_value: float | None = None) -> str:
    """Radar chart: one polygon per series over the given axes."""
    if not axes:
        raise ValueError("no axes to plot")
    if not series:
        raise ValueError("no series to plot")
    if max_value is None:
        max_value = max((row.get(a, 0.0) for row in series.values() for a in axes),
                        default=0.0)
    max_value = max(max_value, 1.0)
    size = 560.0
    cx, cy, radius = size / 2, size / 2 + 16, 168.0
    n = len(axes)

    def point(axis_index: int, value: float) -> tuple[float, float]:
        ang = -math.pi / 2 + 2 * math.pi * axis_index / n
        r = radius * min(value, max_value) / max_value
        return cx + r * math.cos(ang), cy + r * math.sin(ang)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" '
        f'height="{size:.0f}" viewBox="0 0 {size:.0f} {size:.0f}">',
        '<g font-family="sans-serif" font-size="12" fill="#222">',
        f'<rect x="0" y="0" width="{size:.0f}" height="{size:.0f}" fill="#FFFFFF"/>',
        f'<text x="{cx:.1f}" y="26" text-anchor="middle" font-size="15" '
        f'font-weight="bold">{_esc(title)}</text>',
    ]
    rings = int(max_value) if max_value <= 8 and max_value == int(max_value) else 4
    for ring in range(1, rings + 1):
        pts = " ".join(f"{x:.2f},{y:.2f}"
                       for x, y in (point(i, max_value * ring / rings) for i in range(n)))
        out.append(f'<polygon points="{pts}" fill="none" stroke="#DDDDDD" '
                   f'stroke-width="1"/>')
    for i, axis in enumerate(axes):
        x, y = point(i, max_value)
        out.append(f'<line x1="{cx:.1f}" y1="{cy:.1f}" x2="{x:.2f}" y2="{y:.2f}" '
                   f'stroke="#CCCCCC" stroke-width="1"/>')
        lx, ly = point(i, max_value * 1.14)
        anchor = "middle"
        if lx < cx - 4:
            anchor = "end"
        elif lx > cx + 4:
            anchor = "start"
        out.append(f'<text x="{lx:.2f}" y="{ly + 4:.2f}" '
                   f'text-anchor="{anchor}">{_esc(axis)}</text>')
    for idx, (name, row) in enumerate(series.items()):
        color = _color(name, idx)
        pts = " ".join(f"{x:.2f},{y:.2f}"
                       for x, y in (point(i, float(row.get(a, 0.0)))
                                    for i, a in enumerate(axes)))
        out.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.18" '
                   f'stroke="{color}" stroke-width="2"/>')
        ly = 46 + 18 * idx
        out.append(f'<rect x="20" y="{ly - 10:.0f}" width="12" height="12" '
                   f'fill="{color}"/>')
        out.append(f'<text x="38" y="{ly:.0f}">{_esc(name)}</text>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"
