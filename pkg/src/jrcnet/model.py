"""Scenario parameters, unit conventions and the deterministic physics.

Internal units are SI throughout: watts, hertz, metres, radians, and node
densities in nodes per square metre. Density is always passed as an argument
rather than stored on :class:`SystemParams`, so a density sweep reuses one
validated parameter object.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact SI value


class ParamError(ValueError):
    """A scenario parameter violates its constraint."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class AlphaOutOfRange(ParamError):
    pass


class CycleInvalid(ParamError):
    pass


class ProbabilityOutOfRange(ParamError):
    pass


class NonPositive(ParamError):
    pass


class UnknownParameter(ParamError):
    pass


class ParamErrors(ParamError):
    """Several constraints violated at once; ``errors`` lists each one."""

    def __init__(self, errors: list[ParamError]):
        ValueError.__init__(self, "; ".join(str(e) for e in errors))
        self.field = ",".join(e.field for e in errors)
        self.errors = errors


class NegativeDensity(ValueError):
    pass


class NonPositiveDistance(ValueError):
    pass


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """Validated scenario. Defaults are the reference operating point.

    ``M`` is the full radar+comm cycle length in slots; the radar duty
    fraction ``eps = M_r / M`` is derived and never stored.
    """

    P_t: float = 0.01  # W (10 dBm)
    f: float = 60e9  # Hz
    phi: float = math.pi / 6
    alpha: float = 4.0
    sigma: float = 10.0  # m^2
    M_r: int = 100
    M: int = 200
    q_c: float = 0.5
    gamma: float = 5.0
    d_c: float = 5.0  # m
    pf_target: float = 0.1

    def __post_init__(self):
        errors = _violations(self)
        if len(errors) == 1:
            raise errors[0]
        if errors:
            raise ParamErrors(errors)

    @property
    def eps(self) -> float:
        return self.M_r / self.M

    @property
    def M_c(self) -> int:
        return self.M - self.M_r

    def replace(self, **changes: Any) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def with_eps(self, eps: float) -> "SystemParams":
        """Return a copy whose cycle length realizes ``eps`` as closely as
        integer slots allow (``M = round(M_r / eps)``)."""
        return self.replace(M=cycle_length_for_eps(self.M_r, eps))


def cycle_length_for_eps(M_r: int, eps: float) -> int:
    if not 0.0 < eps <= 1.0:
        raise ProbabilityOutOfRange("eps", f"must lie in (0, 1], got {eps!r}")
    return max(M_r, int(round(M_r / eps)))


def _violations(p: SystemParams) -> list[ParamError]:
    errors: list[ParamError] = []
    for name in ("P_t", "f", "sigma", "gamma", "d_c", "phi"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0):
            errors.append(NonPositive(name, f"must be positive and finite, got {value!r}"))
    if p.phi > 2 * math.pi:
        errors.append(NonPositive("phi", f"beamwidth must not exceed 2*pi, got {p.phi!r}"))
    if not (math.isfinite(p.alpha) and p.alpha > 2):
        errors.append(AlphaOutOfRange("alpha", f"path-loss exponent must exceed 2, got {p.alpha!r}"))
    if int(p.M_r) != p.M_r or int(p.M) != p.M:
        errors.append(CycleInvalid("M", f"slot counts must be integers, got M_r={p.M_r!r}, M={p.M!r}"))
    elif p.M_r < 2:
        errors.append(CycleInvalid("M_r", f"need at least 2 radar slots (non-empty echo window), got {p.M_r}"))
    elif p.M < p.M_r:
        errors.append(CycleInvalid("M", f"cycle length {p.M} shorter than radar slots {p.M_r}"))
    if not 0.0 <= p.q_c <= 1.0:
        errors.append(ProbabilityOutOfRange("q_c", f"must lie in [0, 1], got {p.q_c!r}"))
    if not 0.0 < p.pf_target < 1.0:
        errors.append(ProbabilityOutOfRange("pf_target", f"must lie in (0, 1), got {p.pf_target!r}"))
    return errors


_FIELDS = {f.name: f.type for f in dataclasses.fields(SystemParams)}


def validate(raw: Mapping[str, Any]) -> SystemParams:
    """Build :class:`SystemParams` from an unvalidated mapping.

    Missing keys take the defaults. Unknown keys and every violated
    constraint are reported together.
    """
    errors: list[ParamError] = []
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            errors.append(UnknownParameter(key, "not a scenario parameter"))
            continue
        try:
            if key in ("M_r", "M"):
                as_float = float(value)
                kwargs[key] = int(as_float) if as_float.is_integer() else as_float
            else:
                kwargs[key] = float(value)
        except (TypeError, ValueError):
            errors.append(NonPositive(key, f"not a number: {value!r}"))
    try:
        params = SystemParams(**kwargs)
    except ParamErrors as exc:
        errors.extend(exc.errors)
    except ParamError as exc:
        errors.append(exc)
    if len(errors) == 1:
        raise errors[0]
    if errors:
        raise ParamErrors(errors)
    return params


@dataclass(frozen=True)
class DerivedConstants:
    K: float  # W * m^alpha
    G: float
    eps: float
    c: float = SPEED_OF_LIGHT


def derived_constants(p: SystemParams) -> DerivedConstants:
    G = 4 * math.pi / p.phi**2
    K = p.P_t * (G * SPEED_OF_LIGHT / (4 * math.pi * p.f)) ** 2
    return DerivedConstants(K=K, G=G, eps=p.eps)


def radar_return_power(p: SystemParams, d_r: float) -> float:
    """Deterministic target echo power at range ``d_r`` (two-way path loss)."""
    if not d_r > 0:
        raise NonPositiveDistance(f"target distance must be positive, got {d_r!r}")
    K = derived_constants(p).K
    return K * p.sigma / (4 * math.pi) * d_r ** (-2 * p.alpha)


@dataclass(frozen=True)
class ThinnedIntensities:
    """Per-slot densities of mutually aligned interferers (nodes/m^2)."""

    lambda_r: float
    lambda_c: float
    lambda_a: float
    lam: float

    @property
    def active(self) -> float:
        return self.lambda_r + self.lambda_c


def alignment_factor(p: SystemParams) -> float:
    return (p.phi / (2 * math.pi)) ** 2


def thinned_intensities(p: SystemParams, lam: float) -> ThinnedIntensities:
    if lam < 0:
        raise NegativeDensity(f"density must be non-negative, got {lam!r}")
    lambda_a = alignment_factor(p) * lam
    return ThinnedIntensities(
        lambda_r=p.eps / p.M_r * lambda_a,
        lambda_c=(1 - p.eps) * p.q_c * lambda_a,
        lambda_a=lambda_a,
        lam=lam,
    )
