"""Minimal line plots written directly as SVG."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
MARGIN = (70, 30, 40, 60)  # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _ticks(lo, hi, n=6):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(x) for x in np.arange(start, hi + step * 1e-9, step)]


def line_plot(t, series: dict[str, np.ndarray], title: str = "", xlabel: str = "t") -> str:
    t = np.asarray(t, float)
    ys = {k: np.asarray(v, float) for k, v in series.items()}
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom
    x0, x1 = (float(t.min()), float(t.max())) if t.size else (0.0, 1.0)
    finite = [v[np.isfinite(v)] for v in ys.values()]
    finite = [v for v in finite if v.size]
    y0 = min((float(v.min()) for v in finite), default=0.0)
    y1 = max((float(v.max()) for v in finite), default=1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 - y0 < 1e-12 * max(1.0, abs(y0)):
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for xt in _ticks(x0, x1):
        out.append(f'<line x1="{sx(xt):.2f}" y1="{top + ph}" x2="{sx(xt):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(xt):.2f}" y="{top + ph + 18}" text-anchor="middle">{xt:g}</text>')
    for yt in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{sy(yt):.2f}" x2="{left}" y2="{sy(yt):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(yt) + 4:.2f}" text-anchor="end">{yt:.4g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="{top - 12}" text-anchor="middle" font-size="14">'
                   f'{escape(title)}</text>')
    for i, (name, y) in enumerate(ys.items()):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, y) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 16 + 16 * i
        out.append(f'<line x1="{left + pw - 120}" y1="{ly - 4}" x2="{left + pw - 100}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 95}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(path, t, series, title="", xlabel="t"):
    with open(path, "w") as fh:
        fh.write(line_plot(t, series, title, xlabel))
