"""Self-contained SVG figure: pixels, credible band, truth and posterior mean.

Written by hand with fixed-precision coordinates so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .geometry import DEFAULT_FRAME, Frame

SIZE = 500
MAX_PIXELS = 10_000


def _xy(theta, r, frame: Frame):
    phi = np.asarray(theta) + frame.angle_origin
    x = frame.reference_point[0] + np.asarray(r) * np.cos(phi)
    y = frame.reference_point[1] + np.asarray(r) * np.sin(phi)
    return _screen(x, y)


def _screen(x, y):
    return (np.asarray(x) + 0.5) * SIZE, (0.5 - np.asarray(y)) * SIZE


def _path(theta, r, frame):
    sx, sy = _xy(theta, r, frame)
    pts = " L ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))
    return f"M {pts} Z"


def _pixel_layer(data, frame) -> list:
    if data is None:
        return []
    x = np.asarray(data.x, dtype=float)
    y = np.asarray(data.y, dtype=float)
    stride = max(1, math.ceil(y.size / MAX_PIXELS))
    x, y = x[::stride], y[::stride]
    lo, hi = np.percentile(y, [1, 99]) if y.size else (0.0, 1.0)
    scale = (np.clip(y, lo, hi) - lo) / (hi - lo) if hi > lo else np.full(y.size, 0.5)
    shade = np.round(235 - 200 * scale).astype(int)
    sx, sy = _screen(x[:, 0], x[:, 1])
    side = SIZE / math.sqrt(max(1, data.y.size / stride))
    return [
        f'<rect x="{a - side / 2:.2f}" y="{b - side / 2:.2f}" width="{side:.2f}" height="{side:.2f}" '
        f'fill="rgb({s},{s},{s})"/>'
        for a, b, s in zip(sx, sy, shade)
    ]


def render_svg(theta, mean, lower, upper, truth=None, data=None, frame: Frame = DEFAULT_FRAME) -> str:
    theta = np.asarray(theta, dtype=float)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
        '<g id="pixels" stroke="none">',
        *_pixel_layer(data, frame),
        "</g>",
        '<g id="band" fill="#9e9e9e" fill-opacity="0.6" fill-rule="evenodd" stroke="none">',
        f'<path d="{_path(theta, upper, frame)} {_path(theta, lower, frame)}"/>',
        "</g>",
        '<g id="truth" fill="none" stroke="black" stroke-width="2">',
    ]
    if truth is not None:
        fine = np.arange(720) * (2.0 * math.pi / 720)
        lines.append(f'<path d="{_path(fine, truth(fine), frame)}"/>')
    lines += [
        "</g>",
        '<g id="mean" fill="none" stroke="black" stroke-width="2" stroke-dasharray="8,5">',
        f'<path d="{_path(theta, mean, frame)}"/>',
        "</g>",
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def emit_plot(summary, path, truth=None, data=None, frame: Frame = DEFAULT_FRAME) -> Path:
    """Write the figure for a ``Summary`` (or its JSON dict) to ``path``."""
    if hasattr(summary, "to_dict"):
        summary = summary.to_dict()
    svg = render_svg(summary["theta"], summary["mean"], summary["lower"], summary["upper"], truth, data, frame)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path
