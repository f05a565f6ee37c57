"""Dependency-free SVG rendering of 2-D decision boundaries.

Decisions are evaluated on a regular grid over the covariate square and
drawn as run-length-merged colored cells, one panel per rule (for example
ground truth next to a fitted policy). Output is plain SVG text, which is
cheap to emit and easy to diff in tests.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PlotError",
    "ARM_COLORS",
    "decision_grid",
    "count_regions",
    "render_panels",
    "emit_boundary_plot",
]

ARM_COLORS = (
    "#4477aa",
    "#ee6677",
    "#228833",
    "#ccbb44",
    "#66ccee",
    "#aa3377",
)


class PlotError(ValueError):
    pass


def decision_grid(decide_fn, x_range=(-2.8, 2.8), n=100) -> np.ndarray:
    """(n, n) array of arm indices; row i is x2 index, column j is x1 index."""
    if n < 1:
        raise PlotError("grid must have at least one cell per axis")
    lo, hi = x_range
    if not hi > lo:
        raise PlotError(f"empty grid range {x_range}")
    xs = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    g1, g2 = np.meshgrid(xs, xs)
    X = np.column_stack([g1.ravel(), g2.ravel()])
    arms = np.asarray(decide_fn(X))
    if arms.shape != (n * n,):
        raise PlotError("decision function must return one arm per grid row")
    return arms.reshape(n, n).astype(int)


def count_regions(grid: np.ndarray) -> int:
    """Number of 4-connected constant-colored regions in the grid."""
    grid = np.asarray(grid)
    seen = np.zeros(grid.shape, dtype=bool)
    regions = 0
    for si in range(grid.shape[0]):
        for sj in range(grid.shape[1]):
            if seen[si, sj]:
                continue
            regions += 1
            color = grid[si, sj]
            stack = [(si, sj)]
            seen[si, sj] = True
            while stack:
                i, j = stack.pop()
                for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                    if (
                        0 <= ni < grid.shape[0]
                        and 0 <= nj < grid.shape[1]
                        and not seen[ni, nj]
                        and grid[ni, nj] == color
                    ):
                        seen[ni, nj] = True
                        stack.append((ni, nj))
    return regions


def _panel_svg(grid, title, x_range, x0, y0, size, font=12):
    n = grid.shape[0]
    cell = size / n
    parts = [f'<text x="{x0 + size / 2:.2f}" y="{y0 - 6:.2f}" text-anchor="middle" '
             f'font-size="{font}" font-family="sans-serif">{title}</text>']
    for i in range(n):  # i indexes x2; SVG y axis points down, so flip
        py = y0 + (n - 1 - i) * cell
        j = 0
        while j < n:
            k = j
            while k < n and grid[i, k] == grid[i, j]:
                k += 1
            color = ARM_COLORS[grid[i, j] % len(ARM_COLORS)]
            parts.append(
                f'<rect x="{x0 + j * cell:.2f}" y="{py:.2f}" '
                f'width="{(k - j) * cell:.2f}" height="{cell:.2f}" fill="{color}"/>'
            )
            j = k
    lo, hi = x_range
    parts.append(
        f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{size:.2f}" height="{size:.2f}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{x0 + size / 2:.2f}" y="{y0 + size + 14:.2f}" text-anchor="middle" '
        f'font-size="{font - 2}" font-family="sans-serif">x1 in [{lo:g}, {hi:g}]</text>'
    )
    parts.append(
        f'<text x="{x0 - 6:.2f}" y="{y0 + size / 2:.2f}" text-anchor="middle" '
        f'font-size="{font - 2}" font-family="sans-serif" '
        f'transform="rotate(-90 {x0 - 6:.2f} {y0 + size / 2:.2f})">x2 in [{lo:g}, {hi:g}]</text>'
    )
    return parts


def render_panels(panels, x_range=(-2.8, 2.8), panel_size=300, arms=None) -> str:
    """SVG text with one square panel per (title, grid) pair, plus a legend."""
    panels = list(panels)
    if not panels:
        raise PlotError("nothing to plot")
    margin, gap, top, bottom = 40, 30, 30, 60
    width = margin * 2 + panel_size * len(panels) + gap * (len(panels) - 1)
    height = top + panel_size + bottom
    if arms is None:
        arms = sorted({int(v) for _, g in panels for v in np.unique(g)})
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for k, (title, grid) in enumerate(panels):
        grid = np.asarray(grid)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise PlotError(f"panel {k}: grid must be square, got {grid.shape}")
        x0 = margin + k * (panel_size + gap)
        body.extend(_panel_svg(grid, title, x_range, x0, top, panel_size))
    lx = margin
    ly = top + panel_size + 34
    for a in arms:
        color = ARM_COLORS[a % len(ARM_COLORS)]
        body.append(f'<rect x="{lx}" y="{ly}" width="12" height="12" fill="{color}"/>')
        body.append(
            f'<text x="{lx + 16}" y="{ly + 11}" font-size="11" '
            f'font-family="sans-serif">arm {a}</text>'
        )
        lx += 80
    body.append("</svg>")
    return "\n".join(body) + "\n"


def emit_boundary_plot(
    path,
    predicted=None,
    truth=None,
    x_range=(-2.8, 2.8),
    grid_n=100,
    p=2,
) -> str:
    """Write a decision-boundary SVG; returns the SVG text.

    ``predicted`` and ``truth`` are callables mapping an (m, 2) covariate
    matrix to m arm indices; either may be omitted, and supplying both gives
    side-by-side panels.
    """
    if p != 2:
        raise PlotError(f"boundary plots support exactly 2 covariates, got p={p}")
    panels = []
    if truth is not None:
        panels.append(("ground truth", decision_grid(truth, x_range, grid_n)))
    if predicted is not None:
        panels.append(("fitted policy", decision_grid(predicted, x_range, grid_n)))
    svg = render_panels(panels, x_range=x_range)
    with open(path, "w") as fh:
        fh.write(svg)
    return svg
