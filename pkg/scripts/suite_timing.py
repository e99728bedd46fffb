"""Wall time and outcome of every check at a given sample count on the canonical structure.

Usage: python3 scripts/suite_timing.py [samples] [seed]
"""
import sys
import time

from mds.harness import CHECKS, ExperimentConfig, run_experiment


def main(samples=1000, seed=42):
    for check in CHECKS:
        n = 1 if check == "pentagon" else samples
        t0 = time.perf_counter()
        rep = run_experiment(ExperimentConfig(check, "canonical", samples=n, seed=seed))
        print(f"{check:20s} {'PASS' if rep.passed else 'FAIL'} tested={rep.tested:6d} "
              f"worst={rep.worst_margin:.2e} {time.perf_counter() - t0:7.1f}s")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
