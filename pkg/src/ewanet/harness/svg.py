"""Minimal hand-rolled SVG line and scatter plots. CSV stays the authoritative output."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, PAD = 480, 360, 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v, float) - lo) / span * (b - a)


def _frame(title, xlabel, ylabel, xlim, ylim):
    sx = _scale(*xlim, PAD, WIDTH - PAD / 2)
    sy = _scale(*ylim, HEIGHT - PAD, PAD / 2)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD / 2}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD / 2}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="14" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 8}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{HEIGHT / 2}" transform="rotate(-90 12 {HEIGHT / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]
    for v in np.linspace(*xlim, 5):
        parts.append(f'<text x="{sx(v):.1f}" y="{HEIGHT - PAD + 14}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(*ylim, 5):
        parts.append(f'<text x="{PAD - 4}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    return parts, sx, sy


def _limits(arrays):
    flat = np.concatenate([np.asarray(a, float).ravel() for a in arrays])
    flat = flat[np.isfinite(flat)]
    if flat.size == 0:
        return 0.0, 1.0
    lo, hi = float(flat.min()), float(flat.max())
    return (lo - 0.5, hi + 0.5) if lo == hi else (lo, hi)


def line_plot(series: dict, title="", xlabel="", ylabel="", ylim=None) -> str:
    """``series`` maps a label to (x, y) arrays."""
    xs = [s[0] for s in series.values()]
    ys = [s[1] for s in series.values()]
    parts, sx, sy = _frame(title, xlabel, ylabel, _limits(xs), ylim or _limits(ys))
    for k, (label, (x, y)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(sx(x), sy(y)) if np.isfinite(b))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{WIDTH - PAD}" y="{PAD / 2 + 14 * (k + 1)}" fill="{color}" '
                     f'text-anchor="end">{escape(str(label))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def quiver_plot(points, vectors, title="", xlabel="q_0", ylabel="q_1", marks=()) -> str:
    """Arrow field on a grid; arrows are scaled to a common maximum length. ``marks`` are dots."""
    points = np.asarray(points, float)
    vectors = np.asarray(vectors, float)
    parts, sx, sy = _frame(title, xlabel, ylabel, _limits([points[:, 0]]), _limits([points[:, 1]]))
    norms = np.linalg.norm(vectors, axis=1)
    cell = (WIDTH - 1.5 * PAD) / max(np.sqrt(len(points)), 1)
    unit = 0.8 * cell / norms.max() if norms.max() > 0 else 0.0
    for (x, y), (u, v) in zip(points, vectors):
        x0, y0 = float(sx(x)), float(sy(y))
        parts.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0 + u * unit:.1f}" '
                     f'y2="{y0 - v * unit:.1f}" stroke="#555" stroke-width="0.8"/>')
    for x, y in marks:
        parts.append(f'<circle cx="{float(sx(x)):.1f}" cy="{float(sy(y)):.1f}" r="4" fill="#d62728"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
