"""Side-by-side analytic and Monte Carlo numbers at a few operating points.

    python3 scripts/validate_simulation.py --trials 10000 --comm-trials 100000
"""

import argparse

from jrcnet import analytic as an
from jrcnet import simulator as sim
from jrcnet.model import SystemParams

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--comm-trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()

    print(f"{'lambda':>8} {'eps':>4} {'q_c':>5} {'d_rm':>9} {'d_rm sim':>9} {'P_f@theta':>9}")
    for lam in (1e-5, 1e-4, 1e-3):
        for eps, q in ((0.5, 0.5), (0.2, 0.01), (0.8, 1.0)):
            p = SystemParams(q_c=q).with_eps(eps)
            ens = sim.run_ensemble(p, lam, a.trials, seed=a.seed, workers=a.workers, slot=False)
            theta = sim.threshold_from_maxima(ens.echo_maxima, p.pf_target)
            pf = (ens.echo_maxima > an.detection_threshold(p, lam)).mean()
            print(f"{lam:8.0e} {eps:4.1f} {q:5.2f} {an.radar_range(p, lam):9.4f} "
                  f"{sim.simulated_radar_range(p, theta):9.4f} {pf:9.4f}")

    print(f"\n{'lambda':>8} {'eps':>4} {'P_s':>8} {'P_s sim':>8} {'+-95%':>8}")
    for lam in (1e-3, 1e-2, 1e-1):
        for eps in (0.2, 0.5, 0.8):
            p = SystemParams().with_eps(eps)
            est = sim.estimate_throughput(p, lam, a.comm_trials, seed=a.seed, workers=a.workers)
            print(f"{lam:8.0e} {eps:4.1f} {an.success_probability(p, lam):8.5f} {est.P_s:8.5f} "
                  f"{est.P_s_half_width:8.5f}")
