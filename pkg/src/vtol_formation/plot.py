"""Static SVG figures from a simulation log.

Output is plain text with fixed number formatting so that identical logs
give identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .engine import SimLog

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
LEADER_COLOR = "#000000"
MAX_POINTS = 2000
SNAPSHOT_PERIOD = 20.0


class PlotError(ValueError):
    pass


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    # round away accumulation noise and negative zero
    return [round(float(v) / step) * step + 0.0 for v in np.arange(start, hi + step * 1e-9, step)]


def _range(arrays) -> tuple[float, float]:
    vals = [a[np.isfinite(a)] for a in arrays if a.size]
    vals = [v for v in vals if v.size]
    if not vals:
        return 0.0, 1.0
    lo = min(float(v.min()) for v in vals)
    hi = max(float(v.max()) for v in vals)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class Axes:
    """One rectangular panel with linear x/y scales."""

    def __init__(self, x0, y0, w, h, xlim, ylim, title="", xlabel="", ylabel="", equal=False):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        if equal:
            cx, cy = 0.5 * sum(xlim), 0.5 * sum(ylim)
            half = 0.5 * max(xlim[1] - xlim[0], (ylim[1] - ylim[0]) * w / h)
            xlim = (cx - half, cx + half)
            half_y = half * h / w
            ylim = (cy - half_y, cy + half_y)
        self.xlim, self.ylim = xlim, ylim
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.items: list[str] = []

    def sx(self, x):
        return self.x0 + (x - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * self.w

    def sy(self, y):
        return self.y0 + self.h - (y - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h

    def line(self, x, y, color, width=1.2, dash=None):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if x.size == 0:
            return
        step = max(1, int(np.ceil(x.size / MAX_POINTS)))
        idx = np.arange(0, x.size, step)
        if idx[-1] != x.size - 1:
            idx = np.append(idx, x.size - 1)
        pts = " ".join(f"{_f(self.sx(a))},{_f(self.sy(b))}" for a, b in zip(x[idx], y[idx]))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def marker(self, x, y, color, shape="circle"):
        px, py = _f(self.sx(x)), _f(self.sy(y))
        if shape == "square":
            self.items.append(f'<rect x="{_f(self.sx(x) - 3)}" y="{_f(self.sy(y) - 3)}" width="6" height="6" '
                              f'fill="{color}"/>')
        else:
            self.items.append(f'<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>')

    def render(self) -> str:
        out = [f'<g>', f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" height="{_f(self.h)}" '
               f'fill="none" stroke="#444" stroke-width="1"/>']
        for v in _ticks(*self.xlim):
            px = self.sx(v)
            out.append(f'<line x1="{_f(px)}" y1="{_f(self.y0 + self.h)}" x2="{_f(px)}" y2="{_f(self.y0 + self.h + 4)}" '
                       f'stroke="#444"/>')
            out.append(f'<text x="{_f(px)}" y="{_f(self.y0 + self.h + 16)}" font-size="10" '
                       f'text-anchor="middle">{v:g}</text>')
        for v in _ticks(*self.ylim):
            py = self.sy(v)
            out.append(f'<line x1="{_f(self.x0 - 4)}" y1="{_f(py)}" x2="{_f(self.x0)}" y2="{_f(py)}" stroke="#444"/>')
            out.append(f'<text x="{_f(self.x0 - 6)}" y="{_f(py + 3)}" font-size="10" '
                       f'text-anchor="end">{v:g}</text>')
        out.append(f'<clipPath id="c{int(self.x0)}_{int(self.y0)}"><rect x="{_f(self.x0)}" y="{_f(self.y0)}" '
                   f'width="{_f(self.w)}" height="{_f(self.h)}"/></clipPath>')
        out.append(f'<g clip-path="url(#c{int(self.x0)}_{int(self.y0)})">')
        out += self.items
        out.append("</g>")
        if self.title:
            out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(self.y0 - 8)}" font-size="12" '
                       f'text-anchor="middle">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(self.y0 + self.h + 32)}" font-size="11" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cx, cy = self.x0 - 44, self.y0 + self.h / 2
            out.append(f'<text x="{_f(cx)}" y="{_f(cy)}" font-size="11" text-anchor="middle" '
                       f'transform="rotate(-90 {_f(cx)} {_f(cy)})">{escape(self.ylabel)}</text>')
        out.append("</g>")
        return "\n".join(out)


def _document(width, height, axes, legend) -> str:
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    parts += [ax.render() for ax in axes]
    for k, (label, color) in enumerate(legend):
        y = 16 + 14 * k
        parts.append(f'<line x1="{width - 110}" y1="{y}" x2="{width - 90}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{width - 85}" y="{y + 4}" font-size="10">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _require(sim: SimLog, names):
    missing = [c for c in names if c not in sim.columns]
    if missing:
        raise PlotError(f"log is missing column(s): {', '.join(missing)}")


def _select(sim: SimLog, nodes) -> list[int]:
    valid = list(range(1, sim.n + 1))
    if nodes is None:
        return valid
    bad = [i for i in nodes if i not in valid]
    if bad:
        raise PlotError(f"unknown node id(s) {bad}; valid ids are {valid}")
    return list(nodes)


def trajectory_svg(sim: SimLog, nodes=None) -> str:
    nodes = _select(sim, nodes)
    _require(sim, ["t", "pr_x", "pr_y", "pr_z"] + [f"n{i}_p_{a}" for i in nodes for a in "xyz"])
    pr = np.column_stack([sim.column(f"pr_{a}") for a in "xyz"])
    ps = {i: sim.vec(i, "p") for i in nodes}
    t = sim.t
    snaps = [int(np.argmin(np.abs(t - s))) for s in np.arange(0.0, t[-1] + 1e-9, SNAPSHOT_PERIOD)] if len(t) else []
    axes = []
    for k, (a, b, name) in enumerate(((0, 1, "x-y"), (0, 2, "x-z"))):
        xl = _range([pr[:, a]] + [p[:, a] for p in ps.values()])
        yl = _range([pr[:, b]] + [p[:, b] for p in ps.values()])
        ax = Axes(70 + 420 * k, 40, 340, 340, xl, yl, title=f"trajectories ({name} projection)",
                  xlabel=f"{'xyz'[a]} [m]", ylabel=f"{'xyz'[b]} [m]", equal=True)
        ax.line(pr[:, a], pr[:, b], LEADER_COLOR, dash="4 3")
        for i in nodes:
            ax.line(ps[i][:, a], ps[i][:, b], COLORS[(i - 1) % len(COLORS)])
        for s in snaps:
            ax.marker(pr[s, a], pr[s, b], LEADER_COLOR, "square")
            for i in nodes:
                ax.marker(ps[i][s, a], ps[i][s, b], COLORS[(i - 1) % len(COLORS)])
        axes.append(ax)
    legend = [("leader", LEADER_COLOR)] + [(f"follower {i}", COLORS[(i - 1) % len(COLORS)]) for i in nodes]
    return _document(900, 440, axes, legend)


def error_svg(sim: SimLog, kind: str, nodes=None) -> str:
    """Per-axis time series of ``track_p`` (kind='p') or ``track_v`` (kind='v')."""
    nodes = _select(sim, nodes)
    _require(sim, ["t"] + [f"n{i}_track_{kind}_{a}" for i in nodes for a in "xyz"])
    t = sim.t
    unit = "m" if kind == "p" else "m/s"
    label = "position" if kind == "p" else "velocity"
    axes = []
    for k, a in enumerate("xyz"):
        series = [sim.node(i, f"track_{kind}_{a}") for i in nodes]
        ax = Axes(80, 40 + 200 * k, 680, 150, _range([t]), _range(series),
                  title=f"{label} error, {a} axis", xlabel="t [s]" if k == 2 else "", ylabel=f"[{unit}]")
        for i, s in zip(nodes, series):
            ax.line(t, s, COLORS[(i - 1) % len(COLORS)])
        axes.append(ax)
    legend = [(f"follower {i}", COLORS[(i - 1) % len(COLORS)]) for i in nodes]
    return _document(900, 640, axes, legend)


def write_plots(sim: SimLog, out_dir, nodes=None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    figures = {
        "trajectory.svg": trajectory_svg(sim, nodes),
        "position_error.svg": error_svg(sim, "p", nodes),
        "velocity_error.svg": error_svg(sim, "v", nodes),
    }
    paths = []
    for name, text in figures.items():
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
