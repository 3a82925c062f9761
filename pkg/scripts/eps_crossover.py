"""Where does the radar range stop decreasing in eps?

For q_c below 1/M_r a longer radar phase only adds pulses inside the echo
window, so the range falls with eps. Well above 1/M_r it rises. In between
the comm run that leaks into the window gets short at large eps and the range
is not monotone. This prints, for each q_c, the sign pattern of the range
differences along an eps grid.

    python3 scripts/eps_crossover.py --lam 1e-4
"""

import argparse

import numpy as np

from jrcnet.analytic import radar_range
from jrcnet.model import SystemParams


def sign_pattern(q_c: float, lam: float, eps_grid: np.ndarray, M_r: int) -> str:
    d = np.array([radar_range(SystemParams(M_r=M_r, q_c=q_c).with_eps(e), lam) for e in eps_grid])
    return "".join("+" if x > 0 else "-" for x in np.diff(d))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--lam", type=float, default=1e-4)
    ap.add_argument("--mr", type=int, default=100)
    a = ap.parse_args()
    eps_grid = np.round(np.arange(0.1, 0.91, 0.1), 2)
    print(f"eps grid {eps_grid.tolist()}, 1/M_r = {1 / a.mr:g}")
    for q in (0.001, 0.005, 0.009, 0.011, 0.02, 0.05, 0.1, 0.15, 0.17, 0.18, 0.2, 0.5, 1.0):
        print(f"q_c = {q:<6g} {sign_pattern(q, a.lam, eps_grid, a.mr)}")
