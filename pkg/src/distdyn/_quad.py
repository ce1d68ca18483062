"""Trapezoid quadrature on uniform grids.

One discretization shared by the estimators, the evolution operator and the
net-transition integrals, so the three stay mutually consistent. All
reductions go through numpy's fixed-order pairwise summation (no BLAS), which
keeps results bitwise identical regardless of caller threading.
"""

from __future__ import annotations

import numpy as np


def weights(grid) -> np.ndarray:
    """Trapezoid weights for a uniform grid: h/2 at the ends, h inside."""
    w = np.full(grid.count, grid.spacing)
    w[0] = w[-1] = 0.5 * grid.spacing
    return w


def integrate(grid, values) -> float:
    """Trapezoid integral of point values over the grid."""
    return float(np.sum(weights(grid) * np.asarray(values)))


def integrate_2d(grid_x, grid_y, values) -> float:
    """Trapezoid integral of a surface sampled on a grid pair."""
    inner = np.sum(np.asarray(values) * weights(grid_y)[None, :], axis=1)
    return float(np.sum(inner * weights(grid_x)))


def l1_distance(grid, a, b) -> float:
    """L1 distance between two point-value arrays on a shared grid."""
    return integrate(grid, np.abs(np.asarray(a) - np.asarray(b)))


def cumulative(grid, values) -> np.ndarray:
    """Cumulative trapezoid integral; entry k integrates up to point k."""
    v = np.asarray(values, dtype=float)
    cells = 0.5 * grid.spacing * (v[:-1] + v[1:])
    out = np.empty(grid.count)
    out[0] = 0.0
    np.cumsum(cells, out=out[1:])
    return out
