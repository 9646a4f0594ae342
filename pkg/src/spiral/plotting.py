"""Static SVG convergence plots (suboptimality on a log axis)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["emit_svg", "CLAMP"]

CLAMP = 1e-16
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 20, 50


def _xs(trace, x):
    if x == "epochs":
        return trace.column("epoch")
    if x == "seconds":
        return trace.column("wall_time")
    raise ValueError(f"x axis must be 'epochs' or 'seconds', got {x!r}")


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def emit_svg(traces, x="epochs", title=None):
    """Render traces as a standalone SVG document (returned as a string).

    Nonpositive suboptimality values are clamped to ``1e-16`` for the log
    axis; the legend marks the solvers affected.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    series = []
    for tr in traces:
        xs = np.asarray(_xs(tr, x), dtype=float)
        ys = np.asarray(tr.column("suboptimality"), dtype=float)
        keep = np.isfinite(xs) & ~np.isnan(ys)
        xs, ys = xs[keep], ys[keep]
        clamped = bool(np.any(ys <= CLAMP))
        ys = np.clip(ys, CLAMP, None)
        ys[np.isposinf(ys)] = 1e300
        series.append((tr.solver, xs, np.log10(ys), clamped))

    allx = np.concatenate([s[1] for s in series]) if series else np.array([])
    ally = np.concatenate([s[2] for s in series]) if series else np.array([])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 0.0])
    x0, x1 = float(allx.min()), float(allx.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    d0, d1 = math.floor(float(ally.min())), math.ceil(float(ally.max()))
    if d1 <= d0:
        d1 = d0 + 1

    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (d1 - v) / (d1 - d0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    step = max(1, math.ceil((d1 - d0) / 12))
    for d in range(d0, d1 + 1, step):
        y = py(d)
        out.append(f'<line class="ytick" x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT + pw}" '
                   f'y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">1e{d}</text>')
    for k in range(5):
        v = x0 + (x1 - x0) * k / 4
        xp = px(v)
        out.append(f'<line x1="{xp:.2f}" y1="{TOP + ph}" x2="{xp:.2f}" y2="{TOP + ph + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{xp:.2f}" y="{TOP + ph + 18}" font-size="11" '
                   f'text-anchor="middle">{_fmt(v)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{H - 10}" font-size="12" '
               f'text-anchor="middle">{x}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">suboptimality</text>')

    for k, (name, xs, ys, clamped) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
        out.append(f'<polyline class="trace" data-solver="{escape(name)}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = TOP + 14 + 18 * k
        lx = LEFT + pw + 12
        label = name + (" (clamped at 1e-16)" if clamped else "")
        out.append(f'<g class="legend"><line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 26}" y="{ly}" font-size="11">{escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
