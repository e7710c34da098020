"""Minimal deterministic SVG line plots.

Hand-written so the same series always produce byte-identical files: no
library version, font cache or timestamp leaks into the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Series", "emit_plot"]

WIDTH, HEIGHT = 640, 420
MARGIN = 60
COLORS = ["#1f5fa8", "#b8322c", "#2e8540", "#7a4ea0"]


@dataclass
class Series:
    label: str
    x: list
    y: list
    markers: bool = True


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _check(series: Series) -> None:
    if len(series.x) != len(series.y):
        raise ValueError(f"series {series.label!r}: x and y differ in length")
    if len(series.x) < 2:
        raise ValueError(f"series {series.label!r}: need at least 2 points")
    for v in list(series.x) + list(series.y):
        if not math.isfinite(float(v)):
            raise ValueError(f"series {series.label!r} contains a non-finite value")


def emit_plot(series, path, fit=None, xlabel: str = "x", ylabel: str = "y",
              title: str = "") -> str:
    """Write an SVG with one polyline per series; returns the SVG text.

    ``fit`` is an optional ``(rate, intercept, label)`` drawn as the line
    ``y = rate * x + intercept`` across the data range.
    """
    if isinstance(series, Series):
        series = [series]
    if not series:
        raise ValueError("nothing to plot")
    for s in series:
        _check(s)
    xs = [float(v) for s in series for v in s.x]
    ys = [float(v) for s in series for v in s.y]
    x0, x1 = min(xs), max(xs)
    if fit is not None:
        ys += [fit[0] * x0 + fit[1], fit[0] * x1 + fit[1]]
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    # axes and extreme tick labels
    out.append(f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
               f'y2="{HEIGHT - MARGIN}" stroke="black"/>')
    out.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>')
    out.append(f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{_fmt(x0)}</text>')
    out.append(f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{_fmt(x1)}</text>')
    out.append(f'<text x="{MARGIN - 6}" y="{HEIGHT - MARGIN}" text-anchor="end">{_fmt(y0)}</text>')
    out.append(f'<text x="{MARGIN - 6}" y="{MARGIN + 4}" text-anchor="end">{_fmt(y1)}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 18}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {HEIGHT / 2})">{_esc(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="13">{_esc(title)}</text>')
    legend = []
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}" for a, b in zip(s.x, s.y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.markers:
            for a, b in zip(s.x, s.y):
                out.append(f'<circle cx="{px(float(a)):.2f}" cy="{py(float(b)):.2f}" r="2.5" fill="{color}"/>')
        legend.append((s.label, color, None))
    if fit is not None:
        rate, icpt = float(fit[0]), float(fit[1])
        label = fit[2] if len(fit) > 2 else f"fit: rate {_fmt(rate)}"
        out.append(f'<line x1="{px(x0):.2f}" y1="{py(rate * x0 + icpt):.2f}" x2="{px(x1):.2f}" '
                   f'y2="{py(rate * x1 + icpt):.2f}" stroke="#444" stroke-dasharray="6,4"/>')
        legend.append((label, "#444", "6,4"))
    for i, (label, color, dash) in enumerate(legend):
        y = MARGIN + 14 * i
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{WIDTH - MARGIN - 150}" y1="{y}" x2="{WIDTH - MARGIN - 130}" y2="{y}" '
                   f'stroke="{color}" stroke-width="1.5"{extra}/>')
        out.append(f'<text x="{WIDTH - MARGIN - 125}" y="{y + 4}">{_esc(label)}</text>')
    out.append("</svg>\n")
    text = "\n".join(out)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
