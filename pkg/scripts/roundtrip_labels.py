"""Reproduce the worst duality round-trip row and compare the generic and exact-line label paths.

Usage: python3 scripts/roundtrip_labels.py [structure] [seed]
"""
import sys

import numpy as np

from mds.duality import forward_map, roundtrip_batch, time_labels_batch
from mds.harness import ExperimentConfig, resolve_structure, run_experiment


def main(structure="canonical", seed=42):
    rep = run_experiment(ExperimentConfig("duality-roundtrip", structure, samples=10_000, seed=seed))
    print(f"{structure}: worst={rep.worst_margin:.3e} violations={rep.violations}/{rep.tested}")
    if not rep.witnesses:
        return
    M = resolve_structure(structure)
    q = np.array(rep.witnesses[0]["row"])
    print("tuple:", q.tolist())
    C = np.sort(q)[None, :]
    for exact in (False, True):
        T = forward_map(M, exact_lines=exact, check=None)
        print(f"exact_lines={exact}: labels={time_labels_batch(T, C)[0]}, "
              f"residual={roundtrip_batch(M, q[None, :], T, strict=False)[0]:.3e}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "canonical", int(sys.argv[2]) if len(sys.argv) > 2 else 42)
