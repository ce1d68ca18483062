"""Shared fixtures and small construction helpers for the test suite."""

import math
from pathlib import Path

import numpy as np
import pytest

from distdyn import DensityCurve, Grid, StochasticKernel

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def demo_panel_path(repo_root) -> Path:
    path = repo_root / "demo" / "panel.csv"
    assert path.is_file(), "bundled demo panel is missing"
    return path


@pytest.fixture(scope="session")
def demo_config_path(repo_root) -> Path:
    path = repo_root / "demo" / "config.json"
    assert path.is_file(), "bundled demo config is missing"
    return path


def gaussian(points: np.ndarray, mu: float, sd: float) -> np.ndarray:
    z = (points - mu) / sd
    return np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))


def lognormal_pdf(points: np.ndarray, mu: float, sd: float) -> np.ndarray:
    out = np.zeros_like(points, dtype=float)
    pos = points > 0.0
    z = (np.log(points[pos]) - mu) / sd
    out[pos] = np.exp(-0.5 * z * z) / (points[pos] * sd * math.sqrt(2.0 * math.pi))
    return out


def mixture_row(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One smooth random density row: a two-Gaussian mixture on the grid span."""
    lo, hi = float(points[0]), float(points[-1])
    span = hi - lo
    row = np.zeros_like(points)
    weights = rng.dirichlet(np.ones(2))
    for w in weights:
        mu = rng.uniform(lo + 0.15 * span, hi - 0.15 * span)
        sd = rng.uniform(0.04 * span, 0.25 * span)
        row = row + w * gaussian(points, mu, sd)
    return row


def random_kernel(grid: Grid, rng: np.random.Generator) -> StochasticKernel:
    """A fully supported random smooth kernel on a square grid."""
    rows = np.stack([mixture_row(grid.points, rng) for _ in range(len(grid.points))])
    return StochasticKernel.from_rows(grid, grid, rows)


def curve_from(grid: Grid, values: np.ndarray) -> DensityCurve:
    return DensityCurve.from_values(grid, values)


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Independent trapezoid quadrature weights (test-side reimplementation)."""
    w = np.zeros_like(points)
    w[1:] += 0.5 * np.diff(points)
    w[:-1] += 0.5 * np.diff(points)
    return w
