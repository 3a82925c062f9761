"""Radar range and ALOHA throughput tradeoffs in shared-channel networks of
pulse-radar/communication nodes: closed forms, Monte Carlo validation and
persistency optimisation."""

from .analytic import (
    AnalyticReport,
    InfeasibleFalseAlarm,
    UnsupportedAlpha,
    ZeroDensity,
    activity_factor,
    analytic_report,
    detection_probability,
    detection_threshold,
    interference_cdf,
    interference_laplace,
    radar_range,
    success_probability,
    throughput_density,
)
from .model import SystemParams, derived_constants, radar_return_power, thinned_intensities, validate
from .simulator import (
    SeedSpec,
    calibrate_threshold,
    estimate_false_alarm,
    estimate_throughput,
    sample_network,
    simulated_radar_range,
)
from .tradeoff import critical_density, max_qc_for_range, optimize_throughput

__version__ = "0.1.0"
