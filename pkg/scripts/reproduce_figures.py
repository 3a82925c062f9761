"""Regenerate the CSVs, manifests and plot scripts for all four figures.

    python3 scripts/reproduce_figures.py --out runs            # full trial counts
    python3 scripts/reproduce_figures.py --out runs --quick    # 1e3 trials per point

Each figure lands in its own subdirectory; run the ``plot_*.py`` file there to
draw it.
"""

import argparse
import sys
from pathlib import Path

from jrcnet.cli import main

FIGURES = {
    "fig2": ["--phi-deg", "15", "--phi-deg", "30", "--phi-deg", "60"],
    "fig3": [],
    "fig4": [],
    "fig5": ["--dmin", "5", "--dmin", "10", "--dmin", "20"],
}


def run(out: Path, quick: bool, seed: int, workers: int) -> int:
    worst = 0
    for name, extra in FIGURES.items():
        argv = [name, *extra, "--out", str(out / name), "--seed", str(seed), "--workers", str(workers)]
        if quick:
            argv += ["--trials", "1000", "--comm-trials", "1000"]
        print("jrcnet " + " ".join(argv), flush=True)
        worst = max(worst, main(argv))
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    sys.exit(run(Path(a.out), a.quick, a.seed, a.workers))
