"""Row builders for figure reproductions and generic sweeps.

Each function returns plain dicts keyed by the column names in ``COLUMNS``.
Analytic columns are direct library calls on the row's own parameters;
simulated columns come from the Monte Carlo estimators with the run's master
seed (the same seed at every sweep point, i.e. common random numbers).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import analytic, simulator, tradeoff
from .model import SystemParams


class NumericalFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class SimControls:
    radar_trials: int = 10_000
    comm_trials: int = 100_000
    window_radius: float | None = None
    seed: int = 0
    workers: int = 1
    simulate: bool = True


COLUMNS = {
    "radar": [
        "curve", "phi_deg", "lambda", "eps_requested", "eps", "M_r", "M", "q_c", "pf_target",
        "C", "theta_analytic", "d_rm_analytic", "radar_status",
        "theta_sim", "d_rm_sim", "d_rm_sim_lo", "d_rm_sim_hi", "d_rm_rel_err", "trials",
    ],
    "comm": [
        "curve", "phi_deg", "lambda", "eps_requested", "eps", "M_r", "M", "q_c", "gamma", "d_c",
        "P_s_analytic", "T_analytic", "T_linear",
        "P_s_sim", "P_s_half_width", "T_sim", "T_half_width", "trials",
    ],
    "tradeoff": [
        "curve", "lambda", "eps", "M_r", "M", "d_min", "feasible", "q_c_star", "T_star",
        "binding", "q_max", "lambda_crit_lower", "lambda_crit_upper",
    ],
}


@contextmanager
def _point(p: SystemParams, lam: float):
    """Attach the sweep point to overflow errors."""
    try:
        yield
    except (OverflowError, ZeroDivisionError, FloatingPointError) as exc:
        raise NumericalFailure(f"{exc} at lambda={lam!r}, eps={p.eps!r}, q_c={p.q_c!r}") from exc


def _finite(row: dict, keys) -> dict:
    for k in keys:
        v = row.get(k)
        if isinstance(v, float) and not math.isfinite(v):
            raise NumericalFailure(f"non-finite {k}={v!r} at point {row}")
    return row


def _order_stat_bounds(maxima: np.ndarray, pf: float) -> tuple[float, float]:
    """95% distribution-free interval for the (1 - pf) quantile."""
    x = np.sort(maxima)
    n = x.size
    k = max(1, math.ceil((1 - pf) * n - 1e-9)) - 1
    h = math.ceil(simulator.Z95 * math.sqrt(n * pf * (1 - pf)))
    return float(x[max(0, k - h)]), float(x[min(n - 1, k + h)])


def radar_row(p: SystemParams, lam: float, sim: SimControls, *, curve: str = "",
              eps_requested: float | None = None) -> dict:
    with _point(p, lam):
        rep = analytic.analytic_report(p, lam)
        row = {
            "curve": curve, "phi_deg": round(math.degrees(p.phi), 9), "lambda": lam,
            "eps_requested": p.eps if eps_requested is None else eps_requested,
            "eps": p.eps, "M_r": p.M_r, "M": p.M, "q_c": p.q_c, "pf_target": p.pf_target,
            "C": rep.C, "theta_analytic": rep.theta, "d_rm_analytic": rep.d_rm,
            "radar_status": rep.radar_status,
            "theta_sim": None, "d_rm_sim": None, "d_rm_sim_lo": None, "d_rm_sim_hi": None,
            "d_rm_rel_err": None, "trials": None,
        }
        if sim.simulate:
            ens = simulator.run_ensemble(p, lam, sim.radar_trials, window_radius=sim.window_radius,
                                         seed=sim.seed, workers=sim.workers, slot=False)
            theta = simulator.threshold_from_maxima(ens.echo_maxima, p.pf_target)
            row["theta_sim"] = theta
            row["trials"] = sim.radar_trials
            if theta > 0:
                lo, hi = _order_stat_bounds(ens.echo_maxima, p.pf_target)
                row["d_rm_sim"] = simulator.simulated_radar_range(p, theta)
                row["d_rm_sim_hi"] = simulator.simulated_radar_range(p, lo) if lo > 0 else math.inf
                row["d_rm_sim_lo"] = simulator.simulated_radar_range(p, hi)
                if rep.d_rm is not None:
                    row["d_rm_rel_err"] = row["d_rm_sim"] / rep.d_rm - 1
        return _finite(row, ("C", "theta_analytic", "d_rm_analytic", "theta_sim", "d_rm_sim"))


def comm_row(p: SystemParams, lam: float, sim: SimControls, *, curve: str = "",
             eps_requested: float | None = None) -> dict:
    with _point(p, lam):
        row = {
            "curve": curve, "phi_deg": round(math.degrees(p.phi), 9), "lambda": lam,
            "eps_requested": p.eps if eps_requested is None else eps_requested,
            "eps": p.eps, "M_r": p.M_r, "M": p.M, "q_c": p.q_c, "gamma": p.gamma, "d_c": p.d_c,
            "P_s_analytic": analytic.success_probability(p, lam),
            "T_analytic": analytic.throughput_density(p, lam),
            "T_linear": (1 - p.eps) * p.q_c * lam,
            "P_s_sim": None, "P_s_half_width": None, "T_sim": None, "T_half_width": None,
            "trials": None,
        }
        if sim.simulate:
            est = simulator.estimate_throughput(p, lam, sim.comm_trials, sim.window_radius,
                                                seed=sim.seed, workers=sim.workers)
            row.update(P_s_sim=est.P_s, P_s_half_width=est.P_s_half_width, T_sim=est.T,
                       T_half_width=est.T_half_width, trials=est.trials)
        return _finite(row, ("P_s_analytic", "T_analytic", "P_s_sim", "T_sim"))


def tradeoff_row(p: SystemParams, lam: float, d_min: float | None, *, curve: str = "",
                 crit: tradeoff.CriticalDensity | None = None) -> dict:
    with _point(p, lam):
        res = tradeoff.optimize_throughput(p, lam, d_min)
        return _finite({
            "curve": curve, "lambda": lam, "eps": p.eps, "M_r": p.M_r, "M": p.M,
            "d_min": d_min, "feasible": res.feasible, "q_c_star": res.q_c_star,
            "T_star": res.T_star, "binding": res.binding, "q_max": res.q_max,
            "lambda_crit_lower": None if crit is None else crit.lower,
            "lambda_crit_upper": None if crit is None else crit.upper,
        }, ("T_star", "q_c_star"))


def grid(lo: float, hi: float, points: int, spacing: str = "log") -> list[float]:
    if points < 1:
        raise ValueError("need at least one point")
    if points == 1:
        return [float(lo)]
    if spacing == "log":
        if lo <= 0 or hi <= 0:
            raise ValueError("log spacing needs positive bounds")
        return [float(v) for v in np.geomspace(lo, hi, points)]
    if spacing == "linear":
        return [float(v) for v in np.linspace(lo, hi, points)]
    raise ValueError(f"unknown spacing {spacing!r}")


def fig2_rows(p: SystemParams, lambdas, phis_deg, sim: SimControls) -> list[dict]:
    """Radar range against density, one curve per beamwidth."""
    rows = []
    for phi in phis_deg:
        q = p.replace(phi=math.radians(phi))
        for lam in lambdas:
            rows.append(radar_row(q, lam, sim, curve=f"phi={phi:g}deg"))
    return rows


def fig3_rows(p: SystemParams, lambdas, eps_values, sim: SimControls) -> list[dict]:
    """Throughput density against density, one curve per radar fraction."""
    rows = []
    for eps in eps_values:
        q = p.with_eps(eps)
        for lam in lambdas:
            rows.append(comm_row(q, lam, sim, curve=f"eps={eps:g}", eps_requested=eps))
    return rows


def fig4_rows(p: SystemParams, lam: float, eps_values, qc_values, sim: SimControls) -> list[dict]:
    """Radar range against radar fraction, one curve per persistency."""
    rows = []
    for qc in qc_values:
        for eps in eps_values:
            q = p.with_eps(eps).replace(q_c=qc)
            rows.append(radar_row(q, lam, sim, curve=f"q_c={qc:g}", eps_requested=eps))
    return rows


def fig5_rows(p: SystemParams, lambdas, d_mins) -> list[dict]:
    """Maximum throughput against density, unconstrained and per range floor."""
    rows = [tradeoff_row(p, lam, None, curve="unconstrained") for lam in lambdas]
    for d in d_mins:
        crit = tradeoff.critical_density(p, d)
        rows += [tradeoff_row(p, lam, d, curve=f"d_min={d:g}m", crit=crit) for lam in lambdas]
    return rows
