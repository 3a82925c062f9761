"""Closed-form radar and communication performance.

Radar side: the detection threshold is tuned against the nearest mutually
aligned interferer only, which makes the false-alarm constraint invertible
for any path-loss exponent. Comm side: at ``alpha = 4`` the aggregate
interference is Levy distributed, giving an erfc expression for the success
probability and the throughput density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gamma as gamma_fn

from .model import (
    NonPositiveDistance,
    SystemParams,
    derived_constants,
    radar_return_power,
    thinned_intensities,
)


class UnsupportedAlpha(ValueError):
    """The Levy closed form only exists for a path-loss exponent of 4."""


class InfeasibleFalseAlarm(ValueError):
    """The target false-alarm probability is not below the activity factor,
    so no finite threshold is needed to meet it."""


class ZeroDensity(ValueError):
    """No interferers: there is nothing to calibrate a threshold against."""


def _require_alpha4(p: SystemParams) -> None:
    if p.alpha != 4:
        raise UnsupportedAlpha(f"closed form requires alpha == 4, got {p.alpha!r}")


def activity_factor(p: SystemParams) -> float:
    """Probability that the nearest aligned interferer transmits at least once
    while the typical radar waits for its echo.

    An interferer with mark ``i`` in ``1..M_r-1`` always pulses inside the
    window, one with mark 0 never transmits in it, and one with mark
    ``i >= M_r`` spends ``min(M_r - 1, M - i)`` window slots in comm mode.
    """
    i = np.arange(p.M_r, p.M)
    n_comm = np.minimum(p.M_r - 1, p.M - i)
    silent = math.fsum((1.0 - p.q_c) ** n_comm) if i.size else 0.0
    return 1.0 - 1.0 / p.M - silent / p.M


# Alias under the symbol name.
activity_factor_C = activity_factor


def _log_term(p: SystemParams) -> float:
    """``-ln(1 - P_f / C)``, the quantity both threshold and range hinge on."""
    C = activity_factor(p)
    if p.pf_target >= C:
        raise InfeasibleFalseAlarm(
            f"target P_f={p.pf_target} is not below activity factor C={C:.6g}"
        )
    return -math.log1p(-p.pf_target / C)


def detection_threshold(p: SystemParams, lam: float) -> float:
    """Threshold (W) meeting ``p.pf_target`` against the nearest aligned node.

    Valid for any ``alpha > 2``: inverts ``P_f = C * (1 - exp(-lambda_a pi r^2))``
    at ``r = (K / theta) ** (1 / alpha)``.
    """
    dens = thinned_intensities(p, lam)
    if lam == 0:
        raise ZeroDensity("threshold is unbounded without interferers")
    K = derived_constants(p).K
    return K * (dens.lambda_a * math.pi / _log_term(p)) ** (p.alpha / 2)


def detection_threshold_alpha4(p: SystemParams, lam: float) -> float:
    """The ``alpha = 4`` display form, ``phi^4 lam^2 K / (16 pi^2 ln^2(...))``."""
    _require_alpha4(p)
    if lam == 0:
        raise ZeroDensity("threshold is unbounded without interferers")
    K = derived_constants(p).K
    return p.phi**4 * lam**2 * K / (16 * math.pi**2 * _log_term(p) ** 2)


def radar_range(p: SystemParams, lam: float) -> float:
    """Largest target distance whose echo still reaches the threshold (m)."""
    theta = detection_threshold(p, lam)
    K = derived_constants(p).K
    return (K * p.sigma / (4 * math.pi * theta)) ** (1 / (2 * p.alpha))


def radar_range_alpha4(p: SystemParams, lam: float) -> float:
    _require_alpha4(p)
    if lam == 0:
        raise ZeroDensity("range is unbounded without interferers")
    return (4 * math.pi * p.sigma / (p.phi**4 * lam**2)) ** 0.125 * _log_term(p) ** 0.25


def interference_laplace(p: SystemParams, lam: float, s):
    """Laplace transform ``E[exp(-s I)]`` of the single-slot aggregate interference."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("Laplace argument must be non-negative")
    dens = thinned_intensities(p, lam)
    K = derived_constants(p).K
    delta = 2 / p.alpha
    out = np.exp(-dens.active * K**delta * math.pi * gamma_fn(1 - delta) * s**delta)
    return out[()] if out.ndim == 0 else out


def levy_scale(p: SystemParams, lam: float) -> float:
    _require_alpha4(p)
    dens = thinned_intensities(p, lam)
    return math.pi**3 * dens.active**2 * derived_constants(p).K / 2


def interference_cdf(p: SystemParams, lam: float, x):
    """``P{I <= x}`` for the aggregate interference at ``alpha = 4``."""
    _require_alpha4(p)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("interference level must be positive")
    dens = thinned_intensities(p, lam)
    K = derived_constants(p).K
    out = erfc(math.pi**1.5 * dens.active * np.sqrt(K / x) / 2)
    return out[()] if out.ndim == 0 else out


def success_probability(p: SystemParams, lam: float) -> float:
    """Probability the comm SIR exceeds ``gamma``: ``F_I(K d_c^-alpha / gamma)``."""
    _require_alpha4(p)
    K = derived_constants(p).K
    return float(interference_cdf(p, lam, K * p.d_c ** (-p.alpha) / p.gamma))


def throughput_density(p: SystemParams, lam: float) -> float:
    """Successful packets per slot per m^2.

    Composed from the ALOHA rate and :func:`success_probability`; the erfc
    argument carries ``sqrt(gamma)``, not ``gamma**2``.
    """
    return (1 - p.eps) * p.q_c * lam * success_probability(p, lam)


def detection_probability(p: SystemParams, lam: float, theta: float, d_r: float) -> float:
    """Single-slot probability that echo plus interference crosses ``theta``."""
    _require_alpha4(p)
    if not theta > 0:
        raise ValueError(f"threshold must be positive, got {theta!r}")
    if not d_r > 0:
        raise NonPositiveDistance(f"target distance must be positive, got {d_r!r}")
    S = radar_return_power(p, d_r)
    if S >= theta:
        return 1.0
    return float(1.0 - interference_cdf(p, lam, theta - S))


@dataclass(frozen=True)
class RadarAnalytics:
    C: float
    theta: float
    d_rm: float


@dataclass(frozen=True)
class CommAnalytics:
    P_s: float
    T: float
    levy_scale: float


@dataclass(frozen=True)
class AnalyticReport:
    """Closed-form outputs for one ``(params, lambda)`` point.

    Radar fields are ``None`` when the threshold is undefined (zero density,
    or a false-alarm target already met by silence); comm fields are ``None``
    away from ``alpha = 4``.
    """

    lam: float
    eps: float
    C: float
    theta: float | None
    d_rm: float | None
    P_s: float | None
    T: float | None
    radar_status: str = "ok"


def radar_analytics(p: SystemParams, lam: float) -> RadarAnalytics:
    return RadarAnalytics(
        C=activity_factor(p), theta=detection_threshold(p, lam), d_rm=radar_range(p, lam)
    )


def comm_analytics(p: SystemParams, lam: float) -> CommAnalytics:
    return CommAnalytics(
        P_s=success_probability(p, lam),
        T=throughput_density(p, lam),
        levy_scale=levy_scale(p, lam),
    )


def analytic_report(p: SystemParams, lam: float) -> AnalyticReport:
    theta = d_rm = None
    status = "ok"
    try:
        theta = detection_threshold(p, lam)
        d_rm = radar_range(p, lam)
    except ZeroDensity:
        status = "no_interference"
    except InfeasibleFalseAlarm:
        status = "pf_unreachable"
    P_s = T = None
    if p.alpha == 4:
        P_s = success_probability(p, lam)
        T = throughput_density(p, lam)
    return AnalyticReport(
        lam=lam, eps=p.eps, C=activity_factor(p), theta=theta, d_rm=d_rm,
        P_s=P_s, T=T, radar_status=status,
    )
