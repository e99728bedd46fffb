"""Experiment configuration, deterministic chunked sampling, dispatch and report emission."""
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import axioms, time_conditions as tc
from .duality import (
    codifferential_residuals_batch,
    forward_map,
    oracle_submoebius,
    pentagon_identity,
    roundtrip_batch,
)
from .errors import ConfigurationError, IngestionError, MdsError, NotMonotoneError
from .hyperbolic import functional_equals_h2_check, time_vs_h2_batch
from .moebius import Canonical, MoebiusStructure, Tabulated, make_structure, monotonicity_margins
from .sampling import ChunkResult, draw_cyclic, random_orientation, task_rng
from .tolerances import Tolerances

CHUNK_SIZE = 256
ROUNDTRIP_TOL = 1e-9
PENTAGON_TOL = 1e-6
H2_TOL = 1e-9


# ------------------------------------------------------------- ingestion

def load_tabulated_semimetric(path) -> Tabulated:
    """Read line 1 = n, line 2 = n ascending angles, then n rows of n distances.

    Blank lines and lines starting with '#' are ignored; errors name the
    physical line number.
    """
    try:
        with open(path) as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read table {path}: {exc}") from None
    lines = [(i + 1, ln.split()) for i, ln in enumerate(raw) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise IngestionError("empty table file", 1)

    def numbers(lineno, toks, kind=float):
        try:
            return [kind(t) for t in toks]
        except ValueError:
            raise IngestionError(f"expected numbers, got {' '.join(toks)!r}", lineno) from None

    n_line, n_toks = lines[0]
    if len(n_toks) != 1:
        raise IngestionError("first line must hold the grid size n", n_line)
    n = numbers(n_line, n_toks, int)[0]
    if n < 1:
        raise IngestionError("grid size must be positive", n_line)
    if len(lines) < 2:
        raise IngestionError("missing angle line", n_line + 1)
    a_line, a_toks = lines[1]
    angles = numbers(a_line, a_toks)
    if len(angles) != n:
        raise IngestionError(f"expected {n} angles, got {len(angles)}", a_line)
    if any(not math.isfinite(a) for a in angles) or any(b <= a for a, b in zip(angles, angles[1:])):
        raise IngestionError("angles must be finite and strictly ascending", a_line)
    rows = lines[2:]
    if len(rows) != n:
        last = rows[-1][0] + 1 if rows else a_line + 1
        raise IngestionError(f"expected {n} distance rows, got {len(rows)}", rows[n][0] if len(rows) > n else last)
    mat = np.zeros((n, n))
    for i, (lineno, toks) in enumerate(rows):
        vals = numbers(lineno, toks)
        if len(vals) != n:
            raise IngestionError(f"expected {n} distances, got {len(vals)}", lineno)
        if any(not math.isfinite(v) for v in vals):
            raise IngestionError("distances must be finite", lineno)
        mat[i] = vals
    for i, (lineno, _) in enumerate(rows):
        if mat[i, i] != 0:
            raise IngestionError(f"diagonal entry {i} must be zero", lineno)
        for j in range(i):
            if mat[i, j] != mat[j, i]:
                raise IngestionError(f"asymmetric entry ({i}, {j}): {float(mat[i, j])!r} vs {float(mat[j, i])!r}", lineno)
            if mat[i, j] <= 0:
                raise IngestionError(f"off-diagonal entry ({i}, {j}) must be positive", lineno)
    return Tabulated(np.asarray(angles), mat)


def resolve_structure(spec) -> MoebiusStructure:
    """Family descriptor, or 'table:<path>' / an existing file path for tabulated input."""
    if isinstance(spec, MoebiusStructure):
        return spec
    if isinstance(spec, str):
        if spec.startswith("table:"):
            return load_tabulated_semimetric(spec[len("table:"):])
        if os.path.isfile(spec):
            return load_tabulated_semimetric(spec)
    return make_structure(spec)


# ------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    check: str
    structure: object = "canonical"
    samples: int = 10_000
    seed: int = 0
    tol: Tolerances = Tolerances()
    out: Optional[str] = None
    format: str = "json"
    workers: int = 1
    chunk_size: Optional[int] = None
    min_gap: Optional[float] = None

    def __post_init__(self):
        if self.chunk_size is None:
            object.__setattr__(self, "chunk_size", CHECKS[self.check].chunk_size if self.check in CHECKS
                               else CHUNK_SIZE)
        if self.check not in CHECKS:
            raise ConfigurationError(f"unknown check {self.check!r}; choose from {', '.join(CHECKS)}")
        if int(self.samples) < 1:
            raise ConfigurationError("sample count must be at least 1")
        if self.format not in ("json", "csv"):
            raise ConfigurationError(f"unknown report format {self.format!r}")
        if int(self.workers) < 1 or int(self.chunk_size) < 1:
            raise ConfigurationError("workers and chunk size must be positive")
        if self.min_gap is not None and not self.min_gap > 0:
            raise ConfigurationError("min_gap must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


CONFIG_KEYS = {
    "check": str, "structure": str, "samples": int, "seed": int, "out": str, "format": str,
    "workers": int, "chunk_size": int, "min_gap": float,
    "tol_eps_pt": float, "tol_delta_min": float, "tol_tau_rel": float, "tol_tau_root": float,
    "tol_eps_root": float, "tol_max_iter": int,
}


def parse_config_file(path) -> dict:
    """Flat `key = value` lines; '#' starts a comment. Returns typed values."""
    out = {}
    try:
        with open(path) as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(raw, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or key not in CONFIG_KEYS:
            raise IngestionError(f"unknown or malformed entry {line!r}", lineno)
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise IngestionError(f"bad value for {key}: {value!r}", lineno) from None
    return out


def build_config(values: dict) -> ExperimentConfig:
    """ExperimentConfig from flat keys (tolerances as tol_<name>)."""
    values = dict(values)
    tol_kw = {k[4:]: values.pop(k) for k in list(values) if k.startswith("tol_")}
    try:
        tol = Tolerances(**tol_kw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
    if "check" not in values:
        raise ConfigurationError("no check given")
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(tol=tol, **values)


# ------------------------------------------------------------- samplers

def _draw(M, rng, n, k, min_gap):
    """Cyclically ordered k-tuples: continuous angles, or grid subsets for tables."""
    if isinstance(M, Tabulated):
        m = len(M.angles)
        idx = np.sort(np.argsort(rng.random((n, m)), axis=1)[:, :k], axis=1)
        return M.angles[idx], 0
    return draw_cyclic(rng, n, k, min_gap)


def _shuffle_rows(rng, Q):
    perm = np.argsort(rng.random(Q.shape), axis=1)
    return np.take_along_axis(Q, perm, axis=1)


def monotone_chunk(M, rng, n, tol, min_gap=None):
    Q, skipped = _draw(M, rng, n, 4, min_gap or tol.delta_min)
    Q = Q if isinstance(M, Tabulated) else random_orientation(rng, Q)
    m = monotonicity_margins(M, Q).min(axis=1) if len(Q) else np.zeros(0)
    return ChunkResult(m, m > tol.tau_rel, Q, skipped)


def _oracle(M, tol):
    return forward_map(M, exact_lines=isinstance(M, Tabulated), tol=tol)


def roundtrip_chunk(M, rng, n, tol, min_gap=None):
    Q, skipped = _draw(M, rng, n, 4, min_gap or tol.delta_min)
    Q = _shuffle_rows(rng, Q)
    # non-strict: inconsistent opposite labels show up as a per-row residual, not an abort
    r = roundtrip_batch(M, Q, _oracle(M, tol), strict=False) if len(Q) else np.zeros(0)
    return ChunkResult(r, r < ROUNDTRIP_TOL, Q, skipped)


def ab_chunk(M, rng, n, tol, min_gap=None):
    Q, skipped = _draw(M, rng, n, 5, min_gap or tol.delta_min)
    Q = Q if isinstance(M, Tabulated) else random_orientation(rng, Q)
    if not len(Q):
        return ChunkResult(np.zeros(0), np.zeros(0, bool), Q, skipped)
    A, B = codifferential_residuals_batch(oracle_submoebius(_oracle(M, tol), strict=False), Q)
    r = np.maximum(np.abs(A), np.abs(B))
    return ChunkResult(r, r < ROUNDTRIP_TOL, Q, skipped)


def h2_chunk(M, rng, n, tol, min_gap=None):
    """Prop.-style check F_ab(d) = dist(p, q) plus t(a, b) against the geodesic distance."""
    P, skipped = tc.sample_strong_pairs(rng, n, min_gap or tol.delta_min)
    o, o_, w_, w = P.T
    lam = rng.uniform(0.01, 0.99, size=(len(P), 2))
    res, rows = np.zeros(len(P)), []
    for i in range(len(P)):
        cfg = tc.StrongPairConfig(o[i], o_[i], w[i], w_[i])
        sa, la = cfg.arc_a()
        sb, lb = cfg.arc_b()
        d = tc.DabPoint(float(sa + lam[i, 0] * la), float(sb + lam[i, 1] * lb))
        res[i] = functional_equals_h2_check(cfg, d)
        rows.append((o[i], o_[i], w_[i], w[i], d.x, d.x_))
    if len(P):
        res = np.maximum(res, time_vs_h2_batch(P[:, :2], P[:, 2:], tol))
    return ChunkResult(res, res < H2_TOL, np.array(rows).reshape(-1, 6), skipped)


def _ht_chunk(M, rng, n, tol, min_gap=None):
    if min_gap is not None:
        tol = replace(tol, delta_min=min_gap)
    return axioms.ht_chunk(M, rng, n, tol)


@dataclass(frozen=True)
class Check:
    chunk: object
    width: int
    sense: str = "min"            # "min": margins should be large; "max": residuals should be small
    canonical_only: bool = False
    tabulated: bool = False
    default_min_gap: Optional[float] = None
    chunk_size: int = CHUNK_SIZE


CHECKS = {
    "monotone": Check(monotone_chunk, 4, "min", tabulated=True),
    "axioms-ht": Check(_ht_chunk, 6, "max"),
    "axiom-I": Check(tc.axiom_I_chunk, 7, "min"),
    "axiom-C": Check(tc.axiom_C_chunk, 6, "min"),
    "duality-roundtrip": Check(roundtrip_chunk, 4, "max", tabulated=True, chunk_size=2048),
    "conditions-AB": Check(ab_chunk, 5, "max", tabulated=True, chunk_size=2048),
    "ti": Check(tc.ti_chunk, 6, "min"),
    "wti": Check(tc.wti_chunk, 5, "min"),
    "lqi": Check(tc.lqi_chunk, 6, "min"),
    "vp": Check(tc.vp_chunk, 4, "max", default_min_gap=0.05, chunk_size=4),
    "pentagon": Check(None, 10, "max"),
    "h2-oracle": Check(h2_chunk, 6, "max", canonical_only=True),
    "epsilon-nbhd": Check(tc.epsilon_chunk, 7, "min", default_min_gap=0.05),
}
K_NEEDED = {"monotone": 4, "duality-roundtrip": 4, "conditions-AB": 5}


def _run_chunk(args):
    check, M, seed, index, count, tol, min_gap = args
    rng = task_rng(seed, index)
    return CHECKS[check].chunk(M, rng, count, tol, min_gap=min_gap)


# ------------------------------------------------------------- report

@dataclass
class Report:
    check: str
    structure: str
    passed: bool
    tested: int
    skipped: int
    violations: int
    worst_margin: Optional[float]
    witnesses: list
    seed: int
    samples: int
    chunks: int
    chunk_size: int
    tolerances: dict
    details: dict = field(default_factory=dict)
    wall_time: float = 0.0
    margins: np.ndarray = field(default=None, repr=False)
    ok: np.ndarray = field(default=None, repr=False)
    rows: np.ndarray = field(default=None, repr=False)
    chunk_index: np.ndarray = field(default=None, repr=False)
    labels: np.ndarray = field(default=None, repr=False)

    def to_dict(self, wall_time=True):
        out = {k: v for k, v in asdict(self).items() if k not in ("margins", "ok", "rows", "chunk_index", "labels")}
        if not wall_time:
            out.pop("wall_time")
        return _jsonable(out)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def _merge_extras(results):
    merged = {}
    for r in results:
        for k, v in r.extras.items():
            if isinstance(v, np.ndarray):
                continue
            if k not in merged:
                merged[k] = v
            elif isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                merged[k] += v
            elif isinstance(v, float) and not math.isnan(v):
                prev = merged[k]
                if prev is None or (isinstance(prev, float) and math.isnan(prev)):
                    merged[k] = v
                else:
                    merged[k] = min(prev, v) if "min" in k else max(prev, v)
    return merged


def _ht_details(labels, margins, ok):
    names = list(axioms.SUITE)
    out = {}
    for i, name in enumerate(names):
        sel = labels == i
        m = margins[sel]
        out[name] = {"tested": int(sel.sum()), "violations": int((~ok[sel]).sum()),
                     "worst": float(np.max(np.abs(m))) if m.size else None}
    return out


def _empty_report(config, M, reason, t0):
    return Report(config.check, M.descriptor(), True, 0, 0, 0, None, [], config.seed, config.samples, 0,
                  config.chunk_size, asdict(config.tol), {"empty_domain": True, "reason": reason},
                  time.perf_counter() - t0)


def _pentagon_report(config, M, t0):
    r = pentagon_identity(M, seed=config.seed, tol=config.tol)
    ok = bool(r.converged and r.residual < PENTAGON_TOL)
    details = {"converged": r.converged, "iterations": r.iterations, "chain": list(r.chain),
               "chain_spread": r.chain_spread, "closure": list(r.closure), "points": list(r.points),
               "message": r.message}
    witnesses = [] if ok else [{"index": 0, "chunk": 0, "row": list(r.points), "margin": r.residual}]
    rows = np.array([r.points], float)
    return Report(config.check, M.descriptor(), ok, 1, 0, int(not ok), r.residual, witnesses, config.seed,
                  config.samples, 1, config.chunk_size, asdict(config.tol), details,
                  time.perf_counter() - t0, np.array([r.residual]), np.array([ok]), rows, np.zeros(1, int))


def run_experiment(config: ExperimentConfig) -> Report:
    """Run a check. Chunks are drawn in index order until `samples` rows are tested.

    Chunk k always uses the seed stream task_seed(seed, k) and a fixed size, and
    the stopping chunk is decided in index order, so serial and parallel runs
    consume the same chunks and produce identical reports.
    """
    t0 = time.perf_counter()
    check = CHECKS[config.check]
    M = resolve_structure(config.structure)
    is_table = isinstance(M, Tabulated)
    if check.canonical_only and not isinstance(M, Canonical):
        raise ConfigurationError(f"{config.check} compares against H^2 and needs the canonical structure")
    if is_table and not check.tabulated:
        raise ConfigurationError(f"{config.check} needs points off the grid; tabulated structures "
                                 f"support only {', '.join(k for k, c in CHECKS.items() if c.tabulated)}")
    if is_table and len(M.angles) < K_NEEDED.get(config.check, 4):
        return _empty_report(config, M, "insufficient grid", t0)
    if config.check == "pentagon":
        return _pentagon_report(config, M, t0)
    min_gap = config.min_gap or check.default_min_gap

    try:
        results = _collect(config, M, min_gap)
    except NotMonotoneError as exc:
        w = [{"index": None, "chunk": None, "row": list(map(float, exc.witness)), "margin": None}]
        return Report(config.check, M.descriptor(), False, 0, 0, 1, None, w, config.seed, config.samples, 0,
                      config.chunk_size, asdict(config.tol), {"error": str(exc), "not_monotone": True},
                      time.perf_counter() - t0)

    margins = np.concatenate([r.margins for r in results])
    ok = np.concatenate([r.ok for r in results])
    width = max([check.width] + [r.rows.shape[1] for r in results if r.rows.ndim == 2 and r.rows.size])
    rows = np.concatenate([_pad(r.rows, len(r.margins), width) for r in results])
    chunk_index = np.concatenate([np.full(len(r.margins), k) for k, r in enumerate(results)])
    labels = None
    details = _merge_extras(results)
    if config.check == "axioms-ht":
        labels = np.concatenate([r.extras["axiom_index"] for r in results])
        details = {"axioms": _ht_details(labels, margins, ok)}
    bad = np.flatnonzero(~ok)
    if len(margins):
        worst = float(np.min(margins) if check.sense == "min" else np.max(margins))
        if config.check == "ti":
            worst = details.get("generic_min_margin", worst)
        if config.check == "axioms-ht":
            worst = max(v["worst"] or 0.0 for k, v in details["axioms"].items() if k not in ("h2", "h3", "h4", "t1", "t2"))
    else:
        worst = None
    picks = list(bad[:5])
    if len(bad):
        extreme = int(bad[np.argmin(margins[bad])] if check.sense == "min" else bad[np.argmax(margins[bad])])
        if extreme not in picks:
            picks.append(extreme)
    witnesses = [{"index": int(i), "chunk": int(chunk_index[i]), "row": [float(v) for v in rows[i] if not np.isnan(v)],
                  "margin": float(margins[i])} for i in picks]
    return Report(
        check=config.check, structure=M.descriptor(), passed=not len(bad), tested=int(len(margins)),
        skipped=int(sum(r.skipped for r in results)), violations=int(len(bad)), worst_margin=worst,
        witnesses=witnesses, seed=int(config.seed), samples=int(config.samples), chunks=len(results),
        chunk_size=int(config.chunk_size), tolerances=asdict(config.tol), details=details,
        wall_time=time.perf_counter() - t0, margins=margins, ok=ok, rows=rows, chunk_index=chunk_index,
        labels=labels,
    )


def _pad(rows, n, width):
    rows = np.asarray(rows, float).reshape(n, -1)
    return np.pad(rows, ((0, 0), (0, width - rows.shape[1])), constant_values=np.nan)


def _progress(check, results):
    """Rows tested so far; for the axiom suite, the smallest per-axiom count."""
    if check == "axioms-ht":
        return min(sum(r.extras[f"{name}_tested"] for r in results) for name in axioms.SUITE) if results else 0
    return sum(r.tested for r in results)


def _collect(config, M, min_gap):
    """Chunk results 0..k where k is the first index at which `samples` rows are reached.

    For the axiom suite every axiom must reach `samples` rows.
    """
    target, size, tol = int(config.samples), int(config.chunk_size), config.tol
    args = lambda k: (config.check, M, int(config.seed), k, size, tol, min_gap)
    results, k = [], 0
    max_chunks = 64 * (target // size + 1)
    pool = ProcessPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        while _progress(config.check, results) < target:
            if k >= max_chunks:
                raise ConfigurationError(f"sampler produced only {_progress(config.check, results)} "
                                         f"usable rows in {k} chunks")
            # a chunk yields at most `size` rows (per axiom), so this many more are certainly needed
            need = -(-(target - _progress(config.check, results)) // size)
            batch = range(k, k + (min(config.workers, need) if pool else 1))
            out = list(pool.map(_run_chunk, [args(j) for j in batch])) if pool else [_run_chunk(args(k))]
            for r in out:
                if _progress(config.check, results) >= target:
                    break
                results.append(r)
                k += 1
    finally:
        if pool:
            pool.shutdown()
    return results


def emit_report(report: Report, fmt: str = "json", path=None):
    """Write the report. JSON holds the summary; CSV holds one row per tested sample.

    Returns the written text. Floats use repr, which round-trips exactly.
    """
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"
    elif fmt == "csv":
        text = _csv_text(report)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r}")
    if path:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigurationError(f"cannot write report {path}: {exc}") from None
    return text


def _csv_text(report: Report):
    import io
    buf = io.StringIO()
    n = 0 if report.margins is None else len(report.margins)
    width = report.rows.shape[1] if n else 0
    header = ["index", "chunk", "ok", "margin"] + (["axiom"] if report.labels is not None else []) + \
        [f"p{i}" for i in range(width)]
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    names = list(axioms.SUITE)
    for i in range(n):
        row = [i, int(report.chunk_index[i]), int(bool(report.ok[i])), repr(float(report.margins[i]))]
        if report.labels is not None:
            row.append(names[int(report.labels[i])])
        row += ["" if np.isnan(v) else repr(float(v)) for v in report.rows[i]]
        wr.writerow(row)
    return buf.getvalue()


def report_json(report: Report, wall_time=False) -> str:
    """Canonical JSON text, by default without the wall-time field (for determinism checks)."""
    return json.dumps(report.to_dict(wall_time=wall_time), indent=2, sort_keys=True, allow_nan=False)


__all__ = ["ExperimentConfig", "Report", "run_experiment", "emit_report", "load_tabulated_semimetric",
           "parse_config_file", "build_config", "CHECKS", "MdsError"]
