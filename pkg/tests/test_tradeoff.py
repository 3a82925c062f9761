import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from jrcnet import analytic as an
from jrcnet import tradeoff as tr
from jrcnet.model import SystemParams


def throughput_oracle(p, lam, q):
    """Throughput density written out from the Levy success law, vectorized in q."""
    lam_a = (p.phi / (2 * math.pi)) ** 2 * lam
    active = lam_a * (p.eps / p.M_r + (1 - p.eps) * q)
    ps = erfc(active * math.pi**1.5 * math.sqrt(p.gamma) * p.d_c**2 / 2)
    return (1 - p.eps) * q * lam * ps


def grid_max(p, lam, q_max=1.0, step=1e-3):
    q = np.append(np.arange(0.0, q_max, step), q_max)
    t = throughput_oracle(p, lam, q)
    k = int(np.argmax(t))
    return q[k], t[k]


@pytest.mark.parametrize("d_min", [10.0, 15.0, 17.0])
def test_max_qc_matches_grid_scan(params, d_min):
    p = params.with_eps(0.5)
    q = np.minimum(np.arange(0.0, 1.0 + 1e-4, 1e-4), 1.0)
    ok = np.array([tr.range_at(p, 1e-4, float(v)) >= d_min for v in q])
    assert ok[0]
    scan = q[ok].max()
    assert tr.max_qc_for_range(p, 1e-4, d_min) == pytest.approx(scan, abs=1e-4)


def test_max_qc_is_a_boundary(params):
    q = tr.max_qc_for_range(params, 1e-4, 15.0)
    assert 0 < q < 1
    assert tr.range_at(params, 1e-4, q) >= 15.0
    assert tr.range_at(params, 1e-4, q + 2 * tr.BISECT_TOL) < 15.0


def test_max_qc_edge_cases(params):
    full = an.radar_range(params.replace(q_c=1.0), 1e-4)
    silent = an.radar_range(params.replace(q_c=0.0), 1e-4)
    assert tr.max_qc_for_range(params, 1e-4, full) == 1.0
    assert tr.max_qc_for_range(params, 1e-4, 0.5 * full) == 1.0
    assert tr.max_qc_for_range(params, 1e-4, 1.01 * silent) is None
    assert tr.max_qc_for_range(params, 0.0, 1e6) == 1.0
    with pytest.raises(ValueError):
        tr.max_qc_for_range(params, 1e-4, 0.0)


def test_range_at_unbounded_cases(params):
    assert tr.range_at(params, 0.0, 0.5) == math.inf
    # silence alone keeps the false-alarm rate under target
    p = params.replace(pf_target=0.6)
    assert tr.range_at(p, 1e-4, 0.0) == math.inf
    assert math.isfinite(tr.range_at(p, 1e-4, 1.0))


def test_unsupported_alpha(params):
    p = params.replace(alpha=3.5)
    with pytest.raises(an.UnsupportedAlpha):
        tr.optimize_throughput(p, 1e-3)
    with pytest.raises(an.UnsupportedAlpha):
        tr.max_qc_for_range(p, 1e-3, 5.0)
    with pytest.raises(an.UnsupportedAlpha):
        tr.critical_density(p, 5.0)


def test_golden_max_on_parabola():
    x, fx = tr.golden_max(lambda v: -(v - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lam", np.geomspace(1e-6, 1.0, 13))
def test_unconstrained_matches_grid_oracle(params, lam):
    p = params.with_eps(0.5)
    res = tr.optimize_throughput(p, lam)
    _, t_grid = grid_max(p, lam)
    _, t_fine = grid_max(p, lam, step=1e-6) if lam > 1e-2 else (None, t_grid)
    assert res.feasible
    assert res.T_star == pytest.approx(t_grid, rel=1e-4, abs=0)
    assert res.T_star >= t_grid * (1 - 1e-12)
    assert res.T_star <= t_fine * (1 + 1e-9)
    assert res.T_star == pytest.approx(an.throughput_density(p.replace(q_c=res.q_c_star), lam), rel=1e-15, abs=0)


def fine_max_near(p, lam, q0, half=2e-3):
    q = np.clip(np.linspace(q0 - half, q0 + half, 40_001), 0.0, 1.0)
    return throughput_oracle(p, lam, q).max()


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(1e-6, 1.0), eps=st.floats(0.05, 0.95), gamma=st.floats(0.5, 20),
       d_c=st.floats(1, 20))
def test_optimizer_between_grid_and_true_max(lam, eps, gamma, d_c):
    p = SystemParams(gamma=gamma, d_c=d_c).with_eps(eps)
    res = tr.optimize_throughput(p, lam)
    q_grid, t_grid = grid_max(p, lam)
    assert res.T_star >= t_grid * (1 - 1e-12)
    assert res.T_star <= fine_max_near(p, lam, q_grid) * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(1e-6, 1.0), eps=st.floats(0.05, 0.95))
def test_optimizer_within_grid_tolerance_at_default_link(lam, eps):
    p = SystemParams().with_eps(eps)
    _, t_grid = grid_max(p, lam)
    assert tr.optimize_throughput(p, lam).T_star == pytest.approx(t_grid, rel=1e-4, abs=0)


def test_grid_resolution_limits_narrow_peaks():
    """With a long, demanding link at high density the peak sits at q_c of a
    couple of percent and the 1e-3 grid itself undershoots by more than
    1e-4; the optimizer recovers the true maximum."""
    p = SystemParams(gamma=20.0, d_c=20.0).with_eps(0.2)
    res = tr.optimize_throughput(p, 1.0)
    q_grid, t_grid = grid_max(p, 1.0)
    assert res.q_c_star < 0.02
    assert res.T_star / t_grid - 1 > 1e-4
    assert res.T_star == pytest.approx(fine_max_near(p, 1.0, q_grid), rel=1e-9, abs=0)


def test_small_density_is_linear(params):
    p = params.with_eps(0.5)
    for lam in (1e-7, 1e-6):
        res = tr.optimize_throughput(p, lam)
        assert res.q_c_star == 1.0
        assert res.binding == "boundary"
        assert res.T_star == pytest.approx((1 - p.eps) * lam, rel=1e-3, abs=0)
    slope = (tr.optimize_throughput(p, 2e-7).T_star - tr.optimize_throughput(p, 1e-7).T_star) / 1e-7
    assert slope == pytest.approx(1 - p.eps, rel=1e-3, abs=0)


def test_interior_optimum_at_high_density(params):
    res = tr.optimize_throughput(params, 1.0)
    assert 0 < res.q_c_star < 1
    assert res.binding == "none"


@pytest.mark.parametrize("lam", np.geomspace(1e-6, 1.0, 7))
@pytest.mark.parametrize("d_min", [5.0, 10.0, 20.0])
def test_constrained_never_beats_unconstrained(params, lam, d_min):
    free = tr.optimize_throughput(params, lam)
    bound = tr.optimize_throughput(params, lam, d_min)
    assert bound.T_star <= free.T_star * (1 + 1e-12)
    if bound.feasible and bound.q_max == 1.0:
        assert bound.T_star == free.T_star
    if bound.feasible:
        assert bound.q_c_star <= bound.q_max
        assert tr.range_at(params, lam, bound.q_c_star) >= d_min


def test_binding_range_constraint(params):
    res = tr.optimize_throughput(params, 1e-4, 15.0)
    assert res.feasible and res.binding == "range_constraint"
    assert res.q_c_star == pytest.approx(res.q_max, abs=1e-6)


def test_infeasible_result(params):
    res = tr.optimize_throughput(params, 1.0, 10.0)
    assert not res.feasible
    assert res.T_star == 0.0 and res.q_c_star is None


@pytest.mark.parametrize("d_min", [5.0, 10.0, 30.0])
def test_critical_density_brackets_frontier(params, d_min):
    crit = tr.critical_density(params, d_min)
    assert crit.lower < crit.upper <= crit.lower * (1 + 1e-8)
    assert tr.range_at(params, crit.lower, 0.0) >= d_min
    assert tr.range_at(params, crit.upper, 0.0) < d_min
    # grid cross-check of the monotone frontier
    lams = np.geomspace(1e-8, 10.0, 200)
    ok = np.array([tr.range_at(params, float(l), 0.0) >= d_min for l in lams])
    assert np.all(ok[lams < crit.lower]) and not np.any(ok[lams > crit.upper])
    assert tr.optimize_throughput(params, crit.lower, d_min).feasible
    assert not tr.optimize_throughput(params, crit.upper, d_min).feasible
