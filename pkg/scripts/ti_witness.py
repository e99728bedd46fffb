"""Reproduce the strict time-inequality witness and cross-check its times against H^2 geodesic distances.

Usage: python3 scripts/ti_witness.py [seed]
"""
import sys

import numpy as np

from mds.harmonic import time_batch
from mds.hyperbolic import time_vs_h2_batch
from mds.moebius import Canonical
from mds.harness import ExperimentConfig, run_experiment


def main(seed=42):
    rep = run_experiment(ExperimentConfig("ti", "canonical", samples=10_000, seed=seed))
    print(f"ti: violations={rep.violations}/{rep.tested} worst={rep.worst_margin:.3e}")
    M = Canonical()
    for w in rep.witnesses:
        b1, a1, a2, b2, c1, c2 = w["row"]
        A, B, C = np.array([a1, a2]), np.array([b1, b2]), np.array([c1, c2])
        t = {k: float(time_batch(M, *X, *Y)[0]) for k, (X, Y) in {"ab": (A, B), "bc": (B, C), "ac": (A, C)}.items()}
        margin = t["ac"] - t["ab"] - t["bc"]
        err = max(float(time_vs_h2_batch(X, Y)[0]) for X, Y in ((A, B), (B, C), (A, C)))
        print(f"row={w['row']}")
        print(f"times={t} margin={margin:.4e} threshold={1e-9 * max(1.0, abs(t['ac'])):.4e} max |t - dist_H2|={err:.1e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 42)
