"""Distribution dynamics on a stochastic kernel.

Three operations on a row-normalized kernel g(y|x): push a density one step
forward, iterate that push to the ergodic (long-run) density, and reduce
each row to its net transition probability

    p(x) = P(move above x) - P(stay at or below x) = 1 - 2*C(x|x),

where C(.|x) is the row's CDF. Positive p means net upward mobility at x.

Everything shares one trapezoid discretization with the estimators, so the
evolution, fixed point, and NTP integrals are mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _quad
from .errors import GridMismatch, NoSupportedRows, NotConverged
from .kde import DensityCurve, Grid, StochasticKernel


@dataclass(frozen=True, eq=False)
class NTPCurve:
    """Net transition probability per grid point.

    ``values`` holds NaN wherever ``supported`` is False (grid points whose
    kernel row was below the conditioning floor).
    """

    grid: Grid
    values: np.ndarray
    supported: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        sup = np.asarray(self.supported, dtype=bool)
        if v.shape != (self.grid.count,) or sup.shape != (self.grid.count,):
            raise ValueError("values/support flags do not match the grid")
        ok = v[sup]
        if np.any(~np.isfinite(ok)) or np.any(ok < -1.0) or np.any(ok > 1.0):
            raise ValueError("supported NTP values must lie in [-1, 1]")
        if not np.all(np.isnan(v[~sup])):
            raise ValueError("unsupported points must hold NaN")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        sup = np.ascontiguousarray(sup)
        sup.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "supported", sup)


@dataclass(frozen=True)
class ErgodicSolution:
    """Converged long-run density with its fixed-point residual."""

    density: DensityCurve
    residual: float
    iterations: int


def evolve(kernel: StochasticKernel, f: DensityCurve) -> DensityCurve:
    """One forward step: g(y) = integral of kernel(y|x) * f(x) dx.

    Unsupported kernel rows are excluded; the input mass is renormalized
    over the supported region (equivalently, the output is renormalized,
    which is what happens here). Output has unit trapezoid mass.
    """
    if f.grid != kernel.grid_x:
        raise GridMismatch("density grid differs from the kernel's x grid")
    if kernel.n_supported == 0:
        raise NoSupportedRows("kernel has no supported rows")
    contrib = _quad.weights(kernel.grid_x) * f.values * kernel.supported
    if float(np.sum(contrib)) <= 0.0:
        raise NoSupportedRows("density carries no mass on the kernel's supported rows")
    # default einsum: fixed-order C contraction, no BLAS
    out = np.einsum("i,iy->y", contrib, kernel.rows)
    return DensityCurve.from_values(kernel.grid_y, out)


def ergodic_distribution(
    kernel: StochasticKernel,
    init: DensityCurve | None = None,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> ErgodicSolution:
    """Iterate `evolve` to its fixed point, the ergodic density.

    Starts from ``init`` (uniform over the grid when omitted) and stops when
    the L1 change between successive iterates is at most ``tol``. The
    returned residual is a fresh ||f - evolve(f)||_1 at the solution. The
    Markov operator is L1 non-expansive, so on success the residual cannot
    exceed the final delta.

    Raises :class:`NotConverged` after ``max_iter`` steps, carrying the last
    two deltas so a stall is distinguishable from oscillation.
    """
    if kernel.grid_x != kernel.grid_y:
        raise GridMismatch("ergodic solve needs a square kernel (grid_x == grid_y)")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    if init is None:
        flat = np.ones(kernel.grid_x.count)
        f = DensityCurve.from_values(kernel.grid_x, flat)
    else:
        if init.grid != kernel.grid_x:
            raise GridMismatch("init grid differs from the kernel grid")
        f = init
    deltas = (np.inf, np.inf)
    for iteration in range(1, max_iter + 1):
        nxt = evolve(kernel, f)
        delta = _quad.l1_distance(kernel.grid_x, f.values, nxt.values)
        deltas = (deltas[1], delta)
        f = nxt
        if delta <= tol:
            residual = _quad.l1_distance(kernel.grid_x, f.values, evolve(kernel, f).values)
            return ErgodicSolution(density=f, residual=residual, iterations=iteration)
    raise NotConverged(
        f"no fixed point after {max_iter} iterations; "
        f"last two L1 deltas {deltas[0]:.3e}, {deltas[1]:.3e}",
        last_deltas=deltas,
    )


def _row_cdf_at(grid_y: Grid, row: np.ndarray, x: float) -> float:
    """Trapezoid CDF of a row evaluated at x, splitting x's cell proportionally."""
    cum = _quad.cumulative(grid_y, row)
    return float(np.interp(x, grid_y.points, cum))


def net_transition_probability(kernel: StochasticKernel) -> NTPCurve:
    """NTP at each supported x: 1 - 2*C(x) with C the row CDF at x itself.

    Equivalent to the difference of the two one-sided integrals (mass above
    x minus mass at or below x) because each row has unit mass. Values are
    clipped to [-1, 1] against rounding; unsupported rows yield NaN.
    """
    values = np.full(kernel.grid_x.count, np.nan)
    for i in range(kernel.grid_x.count):
        if not kernel.supported[i]:
            continue
        c = _row_cdf_at(kernel.grid_y, kernel.rows[i], float(kernel.grid_x.points[i]))
        values[i] = min(1.0, max(-1.0, 1.0 - 2.0 * c))
    return NTPCurve(grid=kernel.grid_x, values=values, supported=kernel.supported.copy())


def net_transition_probability_two_sided(kernel: StochasticKernel) -> NTPCurve:
    """NTP by the two one-sided integrals, accumulated independently.

    Upward mass integrates the row from x to the top of the grid, downward
    mass from the bottom up to x; their difference is the NTP. Kept separate
    from :func:`net_transition_probability` as a cross-check of the
    discretization.
    """
    grid_y = kernel.grid_y
    values = np.full(kernel.grid_x.count, np.nan)
    for i in range(kernel.grid_x.count):
        if not kernel.supported[i]:
            continue
        row = kernel.rows[i]
        x = float(kernel.grid_x.points[i])
        down = float(np.interp(x, grid_y.points, _quad.cumulative(grid_y, row)))
        # accumulate the upper tail from the top down so it is an
        # independent sum, not 1 - down
        rev = _quad.cumulative(grid_y, row[::-1])
        up_from_top = rev[::-1]
        up = float(np.interp(x, grid_y.points, up_from_top))
        values[i] = min(1.0, max(-1.0, up - down))
    return NTPCurve(grid=kernel.grid_x, values=values, supported=kernel.supported.copy())


def ntp_crossings(ntp: NTPCurve) -> list[float]:
    """x locations where the NTP changes sign.

    Consecutive supported grid points bracketing a sign change contribute a
    linearly interpolated crossing; exact zeros are reported at their grid
    point. Gaps (unsupported points) break the sequence.
    """
    pts = ntp.grid.points
    v = ntp.values
    sup = ntp.supported
    out: list[float] = []
    for i in range(ntp.grid.count):
        if not sup[i]:
            continue
        if v[i] == 0.0:
            out.append(float(pts[i]))
            continue
        j = i + 1
        if j < ntp.grid.count and sup[j] and v[j] != 0.0 and (v[i] < 0) != (v[j] < 0):
            t = v[i] / (v[i] - v[j])
            out.append(float(pts[i] + t * (pts[j] - pts[i])))
    return out


def support_components(kernel: StochasticKernel) -> list[tuple[float, float]]:
    """Connected blocks of the supported region, as x intervals.

    Two supported grid points communicate when either row places positive
    mass at the other's location; the transitive closure partitions the
    supported set. More than one component means the kernel is effectively
    reducible and the ergodic density depends on the starting point, so the
    solver's result should be read per component.
    """
    if kernel.grid_x != kernel.grid_y:
        raise GridMismatch("support connectivity needs a square kernel")
    idx = np.flatnonzero(kernel.supported)
    if idx.size == 0:
        return []
    parent = {int(i): int(i) for i in idx}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    sup_set = set(int(i) for i in idx)
    for i in idx:
        hits = np.flatnonzero(kernel.rows[i] > 0.0)
        for j in hits:
            j = int(j)
            if j in sup_set:
                union(int(i), j)
    groups: dict[int, list[int]] = {}
    for i in idx:
        groups.setdefault(find(int(i)), []).append(int(i))
    spans = [
        (float(kernel.grid_x.points[min(g)]), float(kernel.grid_x.points[max(g)]))
        for g in groups.values()
    ]
    return sorted(spans)
