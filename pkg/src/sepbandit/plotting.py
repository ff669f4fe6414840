"""Self-contained SVG rendering of aggregated regret curves."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

__all__ = ["emit_plot", "read_agg_csv", "nice_ticks"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
WIDTH, HEIGHT = 760, 460
LEFT, RIGHT, TOP, BOTTOM = 70, 180, 30, 50


def read_agg_csv(path) -> dict:
    """``policy -> (t, mean, stderr)`` from an agg.csv file; stderr is None when blank."""
    cols = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"policy", "t", "mean", "stderr"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            t, m, s = cols.setdefault(row["policy"], ([], [], []))
            t.append(int(row["t"]))
            m.append(float(row["mean"]))
            s.append(float(row["stderr"]) if row["stderr"] else math.nan)
    out = {}
    for name, (t, m, s) in cols.items():
        s = np.array(s)
        out[name] = (np.array(t), np.array(m), None if np.all(np.isnan(s)) else s)
    return out


def nice_ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _normalise(trace) -> dict:
    out = {}
    for name, val in trace.items():
        if len(val) == 2:
            mean, se = val
            t = np.arange(1, len(mean) + 1)
        else:
            t, mean, se = val
        mean = np.asarray(mean, dtype=float)
        if mean.size:
            out[name] = (np.asarray(t, dtype=float), mean,
                         None if se is None else np.asarray(se, dtype=float))
    return out


def _pts(xs, ys) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))


def emit_plot(trace: dict, path, title: str = "Cumulative regret", max_points: int = 1000) -> None:
    """Write one polyline per policy with a translucent mean +/- stderr band.

    ``trace`` maps policy names to ``(mean, stderr)`` or ``(t, mean, stderr)``.
    Curves longer than ``max_points`` are thinned to evenly spaced rounds.
    The data-to-pixel map is stored on the ``<g id="plot">`` element as
    ``px = x0 + (t - t0) * sx`` and ``py = y0 - (v - v0) * sy``.
    """
    series = _normalise(trace)
    if not series:
        raise ValueError("empty trace: nothing to plot")

    t_all = np.concatenate([s[0] for s in series.values()])
    lo_v, hi_v = [], []
    for _, mean, se in series.values():
        band = np.nan_to_num(se) if se is not None else 0.0
        lo_v.append(np.min(mean - band))
        hi_v.append(np.max(mean + band))
    t0, t1 = float(t_all.min()), float(t_all.max())
    v0, v1 = min(0.0, float(min(lo_v))), float(max(hi_v))
    if v1 <= v0:
        v1 = v0 + 1.0
    if t1 <= t0:
        t1 = t0 + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    sx, sy = pw / (t1 - t0), ph / (v1 - v0)
    x0, y0 = LEFT, TOP + ph

    def px(t):
        return x0 + (np.asarray(t) - t0) * sx

    def py(v):
        return y0 - (np.asarray(v) - v0) * sy

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + pw / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<g id="axes" stroke="#333" fill="none">'
        f'<line x1="{x0}" y1="{y0}" x2="{x0 + pw}" y2="{y0}"/>'
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{TOP}"/></g>',
    ]
    ticks = []
    for tv in nice_ticks(t0, t1):
        x = float(px(tv))
        ticks.append(f'<line x1="{x:.3f}" y1="{y0}" x2="{x:.3f}" y2="{y0 + 5}" stroke="#333"/>'
                     f'<text x="{x:.3f}" y="{y0 + 18}" text-anchor="middle">{tv:g}</text>')
    for vv in nice_ticks(v0, v1):
        y = float(py(vv))
        ticks.append(f'<line x1="{x0 - 5}" y1="{y:.3f}" x2="{x0}" y2="{y:.3f}" stroke="#333"/>'
                     f'<text x="{x0 - 8}" y="{y + 4:.3f}" text-anchor="end">{vv:g}</text>')
    parts.append('<g id="ticks">' + "".join(ticks) + "</g>")
    parts.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">round t</text>')

    parts.append(f'<g id="plot" data-t0="{t0!r}" data-sx="{sx!r}" data-x0="{x0!r}" '
                 f'data-v0="{v0!r}" data-sy="{sy!r}" data-y0="{y0!r}">')
    legend = []
    for k, (name, (t, mean, se)) in enumerate(series.items()):
        colour = PALETTE[k % len(PALETTE)]
        keep = np.arange(len(t))
        if len(t) > max_points:
            keep = np.unique(np.linspace(0, len(t) - 1, max_points).round().astype(int))
        tt, mm = t[keep], mean[keep]
        label = quoteattr(name)
        if se is not None:
            ss = np.nan_to_num(se[keep])
            xs = px(tt)
            poly = _pts(np.concatenate([xs, xs[::-1]]),
                        np.concatenate([py(mm + ss), py((mm - ss)[::-1])]))
            parts.append(f'<polygon class="band" data-policy={label} points="{poly}" '
                         f'fill="{colour}" fill-opacity="0.2" stroke="none"/>')
        parts.append(f'<polyline class="line" data-policy={label} points="{_pts(px(tt), py(mm))}" '
                     f'fill="none" stroke="{colour}" stroke-width="1.5"/>')
        ly = TOP + 10 + 18 * k
        lx = WIDTH - RIGHT + 15
        legend.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" '
                      f'stroke-width="2"/><text x="{lx + 26}" y="{ly + 4}">{escape(name)}</text>')
    parts.append("</g>")
    parts.append('<g id="legend">' + "".join(legend) + "</g>")
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
