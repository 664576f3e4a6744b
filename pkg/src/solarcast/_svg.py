"""Minimal self-contained SVG charts for the command-line reports."""
from __future__ import annotations

from html import escape
from typing import Optional, Sequence

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#7f7f7f")


def moving_average(values: Sequence[float], window: int) -> np.ndarray:
    """Centred moving average; the window shrinks at the ends. ``window=1`` is identity."""
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1:
        return values.copy()
    half = window // 2
    out = np.empty_like(values)
    for i in range(len(values)):
        lo, hi = max(0, i - half), min(len(values), i + window - half)
        out[i] = values[lo:hi].mean()
    return out


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    return f"{v:.4g}"


class _Frame:
    def __init__(self, xs, ys):
        xs = np.asarray([x for x in xs if np.isfinite(x)], dtype=float)
        ys = np.asarray([y for y in ys if np.isfinite(y)], dtype=float)
        self.x0, self.x1 = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
        self.y0, self.y1 = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 == self.y0:
            pad = abs(self.y0) * 0.05 or 0.5
            self.y0, self.y1 = self.y0 - pad, self.y1 + pad
        pad = 0.05 * (self.y1 - self.y0)
        self.y0, self.y1 = self.y0 - pad, self.y1 + pad
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return MARGIN["top"] + (self.y1 - y) / (self.y1 - self.y0) * self.h


def chart(title: str, xlabel: str, ylabel: str, series: Sequence[dict],
          hline: Optional[tuple[float, str]] = None, note: Optional[str] = None,
          ribbons: Sequence[dict] = ()) -> str:
    """Render line/scatter series.

    Each series dict has ``x``, ``y``, ``label`` and optionally ``style``
    (``"line"``, ``"points"`` or ``"both"``). A ribbon dict has ``x``,
    ``lo``, ``hi``.
    """
    all_x = [v for s in series for v in s["x"]] + [v for r in ribbons for v in r["x"]]
    all_y = [v for s in series for v in s["y"]]
    all_y += [v for r in ribbons for v in list(r["lo"]) + list(r["hi"])]
    if hline is not None:
        all_y.append(hline[0])
    fr = _Frame(all_x, all_y)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    left, top = MARGIN["left"], MARGIN["top"]
    out.append(f'<rect x="{left}" y="{top}" width="{fr.w}" height="{fr.h}" '
               f'fill="none" stroke="black"/>')
    for t in np.linspace(fr.x0, fr.x1, 6):
        x = fr.px(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{top + fr.h}" x2="{_fmt(x)}" y2="{top + fr.h + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{top + fr.h + 18}" text-anchor="middle">{_tick(t)}</text>')
    for t in np.linspace(fr.y0, fr.y1, 6):
        y = fr.py(t)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end">{_tick(t)}</text>')
    out.append(f'<text x="{left + fr.w / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{top + fr.h / 2}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for r in ribbons:
        upper = [f"{_fmt(fr.px(x))},{_fmt(fr.py(y))}" for x, y in zip(r["x"], r["hi"])]
        lower = [f"{_fmt(fr.px(x))},{_fmt(fr.py(y))}" for x, y in zip(r["x"], r["lo"])]
        out.append(f'<polygon points="{" ".join(upper + lower[::-1])}" fill="#1f77b4" '
                   f'fill-opacity="0.2" stroke="none"/>')
    if hline is not None:
        y = fr.py(hline[0])
        out.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + fr.w}" y2="{_fmt(y)}" '
                   f'stroke="#555" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{left + fr.w - 4}" y="{_fmt(y - 5)}" text-anchor="end" '
                   f'fill="#555">{escape(hline[1])}</text>')

    for i, s in enumerate(series):
        colour = COLOURS[i % len(COLOURS)]
        style = s.get("style", "both")
        pts = [(fr.px(x), fr.py(y)) for x, y in zip(s["x"], s["y"])]
        if style in ("line", "both") and len(pts) > 1:
            path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        if style in ("points", "both"):
            out.extend(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.5" fill="{colour}"/>'
                       for x, y in pts)
        ly = top + 16 + 16 * i
        out.append(f'<rect x="{left + 10}" y="{ly - 9}" width="12" height="3" fill="{colour}"/>')
        out.append(f'<text x="{left + 28}" y="{ly - 4}">{escape(s["label"])}</text>')
    if note:
        out.append(f'<text x="{left + fr.w}" y="{top - 6}" text-anchor="end" font-size="11" '
                   f'fill="#555">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
