"""Acceptance criteria 1-11. Each test records one PASS/FAIL line (printed in the terminal summary).

Seed 42 is the acceptance seed throughout. Tolerances are the criterion thresholds.
"""
import time

import numpy as np
import pytest

from mds.duality import PerturbedOracle, codifferential_residuals_batch, forward_map, oracle_submoebius
from mds.harmonic import Event
from mds.harness import ExperimentConfig, report_json, run_experiment
from mds.hyperbolic import UhpPoint, involution_distance, uhp_distance
from mds.moebius import Canonical

from .conftest import CRITERIA

SEED = 42
N = 10_000
FAMILIES = ["canonical", "snowflake(0.5)", "snowflake(2)", "perturbed(1e-5)"]

ROUNDTRIP_TOL = 1e-9      # criterion 1
RUNTIME_LIMIT = 30.0      # criterion 1, seconds per 10^4-tuple run
AB_TOL = 1e-9             # criterion 2
FAULT_MIN = 0.01          # criterion 2, injected 0.1 fault
DOUBLING_TOL = 1e-10      # criterion 4
H2_TOL = 1e-9             # criterion 5
PENTAGON_TOL = 1e-6       # criterion 10

_cache = {}


def run(check, structure="canonical", samples=N, seed=SEED, **kw):
    key = (check, structure, samples, seed, tuple(sorted(kw.items())))
    if key not in _cache:
        t0 = time.perf_counter()
        rep = run_experiment(ExperimentConfig(check, structure, samples=samples, seed=seed, **kw))
        _cache[key] = (rep, time.perf_counter() - t0)
    return _cache[key]


def record(k, ok, detail):
    CRITERIA[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(CRITERIA[k])
    assert ok, CRITERIA[k]


def test_criterion_01_duality_roundtrip():
    parts, ok = [], True
    for s in ("canonical", "snowflake(0.5)", "snowflake(2)"):
        rep, dt = run("duality-roundtrip", s)
        good = rep.passed and rep.tested >= N and rep.worst_margin < ROUNDTRIP_TOL and dt < RUNTIME_LIMIT
        ok &= good
        parts.append(f"{s}: max={rep.worst_margin:.2e} bad={rep.violations}/{rep.tested} {dt:.1f}s")
    record(1, ok, "; ".join(parts))


def test_criterion_02_conditions_ab():
    rep, _ = run("conditions-AB")
    q = np.array([[0.3, 1.4, 2.6, 3.9, 5.1]])
    bad = PerturbedOracle(forward_map(Canonical()), Event(0.3, 1.4), 0.1)
    A, B = codifferential_residuals_batch(oracle_submoebius(bad, strict=False), q)
    fault = float(max(abs(A[0]), abs(B[0])))
    ok = rep.passed and rep.tested >= N and rep.worst_margin < AB_TOL and fault > FAULT_MIN
    record(2, ok, f"max |A|,|B| = {rep.worst_margin:.2e} over {rep.tested}; injected fault residual = {fault:.3f}")


def test_criterion_03_axiom_suites():
    parts, ok = [], True
    for s in FAMILIES:
        rep, _ = run("axioms-ht", s)
        per = rep.details["axioms"]
        good = rep.passed and all(v["tested"] >= N and v["violations"] == 0 for v in per.values())
        ok &= good
        parts.append(f"{s}: min/axiom={min(v['tested'] for v in per.values())} "
                     f"bad={rep.violations} worst={rep.worst_margin:.1e}")
    record(3, ok, "; ".join(parts))


def test_criterion_04_doubled_speed():
    errs = []
    for t in (0.1, 1.0, 5.0):
        errs.append(abs(involution_distance(t) - 2 * t))
        errs.append(abs(uhp_distance(UhpPoint(0.0, 1.0), UhpPoint(0.0, float(np.exp(2 * t)))) - 2 * t))
    record(4, max(errs) < DOUBLING_TOL, f"max error {max(errs):.2e} for t in (0.1, 1, 5)")


def test_criterion_05_functional_vs_h2():
    rep, _ = run("h2-oracle", samples=1000)
    ok = rep.passed and rep.tested >= 1000 and rep.worst_margin < H2_TOL
    record(5, ok, f"max |F - dist| = {rep.worst_margin:.2e} over {rep.tested}")


def test_criterion_06_wti():
    parts, ok = [], True
    for s in FAMILIES:
        rep, _ = run("wti", s)
        ok &= rep.passed and rep.tested >= N
        parts.append(f"{s}: bad={rep.violations}/{rep.tested} min={rep.worst_margin:.1e}")
    record(6, ok, "; ".join(parts))


def test_criterion_07_ti_increment_convexity():
    parts, ok = [], True
    for check in ("ti", "axiom-I", "axiom-C"):
        rep, _ = run(check)
        ok &= rep.passed and rep.tested >= N and rep.worst_margin > 0
        extra = f" collinear max gap={rep.details['collinear_max_gap']:.1e}" if check == "ti" else ""
        parts.append(f"{check}: bad={rep.violations}/{rep.tested} min={rep.worst_margin:.2e}{extra}")
    record(7, ok, "; ".join(parts))


def test_criterion_08_perturbed_family():
    rep, _ = run("epsilon-nbhd", "perturbed(1e-5)")
    outside = rep.details["outside_tube"]
    ok = rep.passed and rep.tested >= N and outside == 0
    record(8, ok, f"perturbed(1e-5): outside tube={outside}, (I) violations={rep.violations}/{rep.tested}, "
                  f"min residual={rep.worst_margin:.2e}, max dev/eps={rep.details['max_dev_over_eps']:.2f}")


def test_criterion_09_ellipse():
    flat, _ = run("monotone", "ellipse(2,0.4)", samples=100_000)
    round_, _ = run("monotone", "ellipse(1,1)", samples=100_000)
    ok = (not flat.passed) and bool(flat.witnesses) and round_.passed
    w = flat.witnesses[0]["row"] if flat.witnesses else None
    record(9, ok, f"ellipse(2,0.4): {flat.violations} violations, witness {np.round(w, 4).tolist() if w else None}; "
                  f"ellipse(1,1): {round_.violations} violations")


def test_criterion_10_pentagon():
    parts, ok = [], True
    for s in ("canonical", "snowflake(1.5)"):
        for seed in (42, 43, 44):
            rep, _ = run("pentagon", s, samples=1, seed=seed)
            ok &= rep.passed and rep.details["converged"] and rep.worst_margin < PENTAGON_TOL
            parts.append(f"{s}/{seed}: {rep.worst_margin:.1e}")
    record(10, ok, "; ".join(parts))


def test_criterion_11_determinism():
    serial, _ = run("duality-roundtrip")
    parallel, _ = run("duality-roundtrip", workers=8)
    a, b = report_json(serial).encode(), report_json(parallel).encode()
    record(11, a == b, f"serial vs 8 workers: {len(a)} bytes, identical={a == b}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
