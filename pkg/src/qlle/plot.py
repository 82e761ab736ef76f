"""Scatter plots as plain SVG text.

Everything is formatted with fixed precision and no timestamps, so the same
embedding always produces the same bytes.
"""

import numpy as np

from .errors import ContractError

WIDTH = HEIGHT = 400
MARGIN = 30

# a few anchor colors of a perceptually ordered ramp (dark blue -> yellow)
_RAMP = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)


def color(v):
    """Hex color for ``v`` in [0, 1]."""
    v = float(np.clip(v, 0.0, 1.0)) * (len(_RAMP) - 1)
    i = min(int(v), len(_RAMP) - 2)
    rgb = _RAMP[i] + (v - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#" + "".join(f"{int(round(c)):02x}" for c in rgb)


def project(points, azimuth=30.0, elevation=20.0):
    """Fixed-angle orthographic projection of ``3 x N`` points to the plane."""
    a, e = np.radians(azimuth), np.radians(elevation)
    rz = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
    rx = np.array([[1, 0, 0], [0, np.cos(e), -np.sin(e)], [0, np.sin(e), np.cos(e)]])
    return (rx @ rz @ points)[[0, 2]]


def render(embedding, labels=None, title=""):
    """SVG document text for a 2D (or projected 3D) scatter."""
    y = np.asarray(embedding, dtype=float)
    if y.ndim != 2 or y.size == 0:
        raise ContractError("cannot plot an empty embedding")
    if y.shape[0] not in (2, 3):
        raise ContractError(f"unsupported embedding dimension {y.shape[0]}; only 2 or 3 can be plotted")
    if not np.all(np.isfinite(y)):
        raise ContractError("embedding contains NaN or Inf")
    xy = project(y) if y.shape[0] == 3 else y
    n = xy.shape[1]
    lab = np.zeros(n) if labels is None else np.asarray(labels, dtype=float)
    if lab.shape != (n,):
        raise ContractError(f"need one label per point, got {lab.shape}")
    span = np.ptp(lab)
    lab = (lab - lab.min()) / span if span > 0 else np.full(n, 0.5)

    lo, hi = xy.min(axis=1), xy.max(axis=1)
    scale = (WIDTH - 2 * MARGIN) / max(float(np.max(hi - lo)), 1e-12)
    center = (lo + hi) / 2
    px = WIDTH / 2 + (xy[0] - center[0]) * scale
    py = HEIGHT / 2 - (xy[1] - center[1]) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        lines.append(f'<text x="{WIDTH / 2:.1f}" y="18" font-family="sans-serif" font-size="13" text-anchor="middle">{safe}</text>')
    for i in np.argsort(lab, kind="stable"):
        lines.append(f'<circle cx="{px[i]:.3f}" cy="{py[i]:.3f}" r="4" fill="{color(lab[i])}" stroke="#333333" stroke-width="0.5"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def plot(embedding, labels, path, title=""):
    """Write the scatter SVG to ``path``; nothing is written if the input is rejected."""
    text = render(embedding, labels, title)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
