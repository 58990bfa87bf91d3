"""Static SVG scatter plots of 2-D embeddings."""

from __future__ import annotations

import numpy as np

# tab20
PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
    "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
    "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)
UNLABELED = "#808080"
MARGIN = 0.05


def _num(v: float) -> str:
    return format(float(v), ".9g")


def scatter_svg(coords, labels=None, size: int = 800, radius_frac: float = 0.004) -> str:
    """Render points as circles, colored by label.

    The viewBox spans the data range plus a 5% margin on each side; y is
    mirrored within that range so that larger y is drawn higher.  Output is
    a pure function of the inputs.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] < 2:
        raise ValueError("scatter_svg needs at least two coordinate columns")
    x, y = coords[:, 0], coords[:, 1]
    lo = np.array([x.min(), y.min()]) if len(x) else np.zeros(2)
    hi = np.array([x.max(), y.max()]) if len(x) else np.ones(2)
    span = np.where(hi > lo, hi - lo, 1.0)
    origin = lo - MARGIN * span
    extent = span * (1 + 2 * MARGIN)
    r = radius_frac * extent.max()
    flip = lo[1] + hi[1]
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{} {} {} {}">'.format(
            size, size, _num(origin[0]), _num(origin[1]), _num(extent[0]), _num(extent[1])),
        '<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>'.format(
            _num(origin[0]), _num(origin[1]), _num(extent[0]), _num(extent[1])),
    ]
    for i in range(len(x)):
        color = UNLABELED if labels is None else PALETTE[int(labels[i]) % len(PALETTE)]
        out.append('<circle cx="{}" cy="{}" r="{}" fill="{}"/>'.format(
            _num(x[i]), _num(flip - y[i]), _num(r), color))
    out.append("</svg>")
    return "\n".join(out) + "\n"
