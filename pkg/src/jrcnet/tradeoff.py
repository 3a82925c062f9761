"""Throughput maximisation over the ALOHA persistency, optionally subject to
a minimum radar detection range."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import (
    InfeasibleFalseAlarm,
    UnsupportedAlpha,
    ZeroDensity,
    radar_range,
    throughput_density,
)
from .model import SystemParams

BISECT_TOL = 1e-6
GOLDEN_TOL = 1e-6
GRID_STEP = 1e-3
INV_PHI = (math.sqrt(5) - 1) / 2


def _require_alpha4(p: SystemParams) -> None:
    if p.alpha != 4:
        raise UnsupportedAlpha(f"tradeoff analysis requires alpha == 4, got {p.alpha!r}")


def range_at(p: SystemParams, lam: float, q_c: float) -> float:
    """Radar range at persistency ``q_c``; ``inf`` when there are no
    interferers or silence alone already meets the false-alarm target."""
    try:
        return radar_range(p.replace(q_c=q_c), lam)
    except (InfeasibleFalseAlarm, ZeroDensity):
        return math.inf


def max_qc_for_range(p: SystemParams, lam: float, d_min: float) -> float | None:
    """Largest ``q_c`` keeping the radar range at least ``d_min``, or ``None``
    if even ``q_c = 0`` cannot."""
    _require_alpha4(p)
    if not d_min > 0:
        raise ValueError(f"minimum range must be positive, got {d_min!r}")
    if range_at(p, lam, 0.0) < d_min:
        return None
    if range_at(p, lam, 1.0) >= d_min:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if range_at(p, lam, mid) >= d_min:
            lo = mid
        else:
            hi = mid
    return lo


def golden_max(f, a: float, b: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@dataclass(frozen=True)
class TradeoffResult:
    q_c_star: float | None
    T_star: float
    feasible: bool
    binding: str  # "none" | "range_constraint" | "boundary"
    q_max: float | None = None


def optimize_throughput(p: SystemParams, lam: float, d_min: float | None = None) -> TradeoffResult:
    """Maximise throughput density over ``q_c`` with ``eps`` held fixed.

    A 1e-3 grid over the feasible interval locates the peak, golden-section
    search refines it inside the neighbouring grid cells, and the better of
    the two is kept. The objective ``q * erfc(a + b q)`` is log-concave, so
    the grid peak brackets the true one.
    """
    _require_alpha4(p)
    if d_min is None:
        q_max = 1.0
    else:
        q_max = max_qc_for_range(p, lam, d_min)
        if q_max is None:
            return TradeoffResult(None, 0.0, False, "none", None)

    def T(q: float) -> float:
        return throughput_density(p.replace(q_c=q), lam)

    n = max(1, math.ceil(q_max / GRID_STEP - 1e-9))
    grid = np.minimum(np.arange(n + 1) * GRID_STEP, q_max)
    values = np.array([T(float(q)) for q in grid])
    k = int(np.argmax(values))
    q_best, T_best = float(grid[k]), float(values[k])
    a, b = float(grid[max(k - 1, 0)]), float(grid[min(k + 1, n)])
    if b > a:
        q_g, T_g = golden_max(T, a, b)
        if T_g > T_best:
            q_best, T_best = q_g, T_g

    if q_max < 1.0 and q_max - q_best <= GOLDEN_TOL:
        binding = "range_constraint"
    elif q_best >= 1.0 - GOLDEN_TOL or q_best <= GOLDEN_TOL:
        binding = "boundary"
    else:
        binding = "none"
    return TradeoffResult(q_best, T_best, True, binding, q_max)


@dataclass(frozen=True)
class CriticalDensity:
    """Bracket ``[lower, upper]`` around the density where ``q_c = 0`` stops
    meeting the range constraint."""

    lower: float
    upper: float

    @property
    def lam(self) -> float:
        return math.sqrt(self.lower * self.upper)


def critical_density(p: SystemParams, d_min: float, rel_tol: float = 1e-9) -> CriticalDensity:
    """Bisect (in log density) for the feasibility frontier of ``d_min``."""
    _require_alpha4(p)
    if range_at(p, 1.0, 0.0) == math.inf:
        return CriticalDensity(math.inf, math.inf)

    def ok(lam: float) -> bool:
        return range_at(p, lam, 0.0) >= d_min

    lo, hi = 1e-6, 1e-2
    while not ok(lo):
        lo, hi = lo / 1e4, lo
    while ok(hi):
        lo, hi = hi, hi * 1e4
    while hi / lo - 1 > rel_tol:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return CriticalDensity(lo, hi)
