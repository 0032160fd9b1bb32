"""Minimal standalone SVG plots: polyline charts, bar charts, scatter.

No plotting dependency; output is deterministic text so plots can be
diffed and committed like any other artifact.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

_COLORS = ("#c0392b", "#2e6db4", "#27824d", "#8e44ad", "#d68910",
           "#16757a", "#7f8c8d", "#2c3e50")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


class _Canvas:
    def __init__(self, width: int, height: int, title: str):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width / 2}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>',
        ]

    def text(self, x, y, s, size=10, anchor="middle"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size}">{s}</text>'
        )

    def line(self, x1, y1, x2, y2, color="#444", width=1.0):
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{color}" stroke-width="{width}"/>'
        )

    def polyline(self, points, color, width=1.5):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{color}"/>'
        )

    def circle(self, x, y, r, color):
        self.parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{color}"/>'
        )

    def save(self, path):
        self.parts.append("</svg>")
        Path(path).write_text("\n".join(self.parts) + "\n", "utf-8")


class _Axes:
    """Maps data space onto a margined plot box and draws the frame."""

    def __init__(self, canvas: _Canvas, x_range, y_range, x_label, y_label):
        self.canvas = canvas
        self.left, self.right = 56, canvas.width - 16
        self.top, self.bottom = 32, canvas.height - 40
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        if self.x_hi == self.x_lo:
            self.x_hi = self.x_lo + 1.0
        if self.y_hi == self.y_lo:
            self.y_hi = self.y_lo + 1.0
        canvas.line(self.left, self.bottom, self.right, self.bottom)
        canvas.line(self.left, self.top, self.left, self.bottom)
        for t in _ticks(self.x_lo, self.x_hi):
            px = self.x(t)
            canvas.line(px, self.bottom, px, self.bottom + 4)
            canvas.text(px, self.bottom + 16, f"{t:g}")
        for t in _ticks(self.y_lo, self.y_hi):
            py = self.y(t)
            canvas.line(self.left - 4, py, self.left, py)
            canvas.text(self.left - 8, py + 3, f"{t:.2g}", anchor="end")
        canvas.text((self.left + self.right) / 2, canvas.height - 8, x_label)
        canvas.text(14, (self.top + self.bottom) / 2, y_label, anchor="middle")

    def x(self, v: float) -> float:
        return self.left + (v - self.x_lo) / (self.x_hi - self.x_lo) * (
            self.right - self.left
        )

    def y(self, v: float) -> float:
        return self.bottom - (v - self.y_lo) / (self.y_hi - self.y_lo) * (
            self.bottom - self.top
        )


def line_plot(path, series: Sequence[tuple[Sequence[float], Sequence[float], str]],
              title: str, x_label: str, y_label: str,
              size: tuple[int, int] = (640, 400)) -> None:
    """series: list of (xs, ys, label) drawn in palette order."""
    canvas = _Canvas(size[0], size[1], title)
    all_x = [x for xs, _, _ in series for x in xs]
    all_y = [y for _, ys, _ in series for y in ys]
    axes = _Axes(canvas, (min(all_x), max(all_x)), (min(all_y), max(all_y)),
                 x_label, y_label)
    for i, (xs, ys, label) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        axes.canvas.polyline(
            [(axes.x(x), axes.y(y)) for x, y in zip(xs, ys)], color
        )
        if label:
            canvas.text(axes.right - 6, axes.top + 14 + 14 * i, label,
                        anchor="end", size=11)
            canvas.line(axes.right - 90, axes.top + 10 + 14 * i,
                        axes.right - 70, axes.top + 10 + 14 * i, color, 2)
    canvas.save(path)


def bar_chart(path, categories: Sequence[str],
              series: Sequence[tuple[str, Sequence[float]]],
              title: str, y_label: str,
              size: tuple[int, int] = (800, 400)) -> None:
    """Grouped bars per category; categories label the x axis."""
    canvas = _Canvas(size[0], size[1], title)
    flat = [v for _, values in series for v in values]
    lo, hi = min(0.0, min(flat)), max(1.0, max(flat))
    axes = _Axes(canvas, (0.0, float(len(categories))), (lo, hi), "", y_label)
    group_w = (axes.right - axes.left) / max(1, len(categories))
    bar_w = group_w * 0.8 / max(1, len(series))
    for ci, cat in enumerate(categories):
        base = axes.left + ci * group_w + group_w * 0.1
        for si, (name, values) in enumerate(series):
            v = values[ci]
            y0 = axes.y(max(0.0, v))
            canvas.rect(base + si * bar_w, y0, bar_w * 0.92,
                        abs(axes.y(0.0) - axes.y(v)), _COLORS[si % len(_COLORS)])
        canvas.text(base + group_w * 0.4, axes.bottom + 26, cat, size=9)
    for si, (name, _) in enumerate(series):
        canvas.text(axes.right - 6, axes.top + 14 + 14 * si, name,
                    anchor="end", size=11)
        canvas.line(axes.right - 90, axes.top + 10 + 14 * si,
                    axes.right - 70, axes.top + 10 + 14 * si,
                    _COLORS[si % len(_COLORS)], 6)
    canvas.save(path)


def scatter_plot(path, points: Sequence[tuple[float, float]], title: str,
                 x_label: str, y_label: str,
                 size: tuple[int, int] = (420, 420)) -> None:
    """Scatter with a position-index color ramp (start dark, end light)."""
    canvas = _Canvas(size[0], size[1], title)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    axes = _Axes(canvas, (min(xs), max(xs)), (min(ys), max(ys)), x_label, y_label)
    n = max(1, len(points) - 1)
    for i, (x, y) in enumerate(points):
        shade = int(40 + 180 * i / n)
        canvas.circle(axes.x(x), axes.y(y), 2.4, f"rgb({shade},{90},{255 - shade})")
    canvas.save(path)
