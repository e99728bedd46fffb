import csv
import io
import json

import numpy as np
import pytest

from mds.cli import main
from mds.errors import ConfigurationError, IngestionError
from mds.harness import (
    CHECKS,
    ExperimentConfig,
    build_config,
    emit_report,
    load_tabulated_semimetric,
    parse_config_file,
    report_json,
    run_experiment,
)
from mds.moebius import canonical_table
from mds.sampling import splitmix64, task_seed


def write_table(path, T, angles=None, mat=None):
    angles = T.angles if angles is None else angles
    mat = T.matrix if mat is None else mat
    lines = [str(len(angles)), " ".join(repr(float(a)) for a in angles)]
    lines += [" ".join(repr(float(v)) for v in row) for row in mat]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def table8(tmp_path):
    return write_table(tmp_path / "c8.txt", canonical_table(8))


def test_splitmix_reference_values():
    # first outputs of the reference splitmix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert task_seed(42, 0) != task_seed(42, 1) != task_seed(43, 0)


def test_load_table(table8):
    T = load_tabulated_semimetric(table8)
    assert np.allclose(T.matrix, canonical_table(8).matrix)


@pytest.mark.parametrize("mutate,line", [
    (lambda m: m.__setitem__((2, 5), m[2, 5] * 1.01), 8),
    (lambda m: m.__setitem__((3, 3), 0.5), 6),
    (lambda m: (m.__setitem__((1, 4), -1.0), m.__setitem__((4, 1), -1.0)), 7),
])
def test_table_errors_name_line(tmp_path, mutate, line):
    T = canonical_table(8)
    m = T.matrix.copy()
    mutate(m)
    path = write_table(tmp_path / "bad.txt", T, mat=m)
    with pytest.raises(IngestionError) as exc:
        load_tabulated_semimetric(path)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_table_malformed(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# comment\n3\n0 1 x\n")
    with pytest.raises(IngestionError) as exc:
        load_tabulated_semimetric(str(p))
    assert exc.value.line == 3
    p.write_text("3\n0 1 2\n0 1 1\n1 0 1\n")
    with pytest.raises(IngestionError):
        load_tabulated_semimetric(str(p))
    with pytest.raises(ConfigurationError):
        load_tabulated_semimetric(str(tmp_path / "missing.txt"))


def test_small_table_is_empty_domain(tmp_path):
    path = write_table(tmp_path / "c3.txt", canonical_table(3))
    for check in ("monotone", "duality-roundtrip", "conditions-AB"):
        rep = run_experiment(ExperimentConfig(check, f"table:{path}", samples=100))
        assert rep.passed and rep.tested == 0 and rep.details == {"empty_domain": True, "reason": "insufficient grid"}


def test_table_roundtrip_passes(table8):
    rep = run_experiment(ExperimentConfig("duality-roundtrip", f"table:{table8}", samples=500, seed=1))
    assert rep.passed and rep.tested >= 500 and rep.worst_margin < 1e-9


def test_table_refuses_off_grid_checks(table8):
    with pytest.raises(ConfigurationError):
        run_experiment(ExperimentConfig("axiom-I", table8, samples=10))


def test_config_validation():
    for kw in ({"check": "nope"}, {"check": "wti", "samples": 0}, {"check": "wti", "format": "xml"},
               {"check": "wti", "workers": 0}, {"check": "wti", "seed": -1}):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**kw)
    with pytest.raises(ConfigurationError):
        build_config({"check": "wti", "bogus": 1})
    with pytest.raises(ConfigurationError):
        build_config({"check": "wti", "tol_tau_rel": -1.0})
    with pytest.raises(ConfigurationError):
        run_experiment(ExperimentConfig("h2-oracle", "snowflake(2)", samples=10))


def test_config_file_and_override(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("check = wti\nstructure = snowflake(0.5)  # comment\nsamples = 300\nseed = 7\ntol_tau_rel = 1e-10\n")
    vals = parse_config_file(str(p))
    assert vals == {"check": "wti", "structure": "snowflake(0.5)", "samples": 300, "seed": 7, "tol_tau_rel": 1e-10}
    cfg = build_config({**vals, "seed": 9})
    assert cfg.seed == 9 and cfg.tol.tau_rel == 1e-10
    p.write_text("samples = many\n")
    with pytest.raises(IngestionError):
        parse_config_file(str(p))


def test_json_and_csv_reports(tmp_path):
    rep = run_experiment(ExperimentConfig("monotone", "canonical", samples=300, seed=3))
    doc = json.loads(emit_report(rep, "json", str(tmp_path / "r.json")))
    assert doc["violations"] == 0 and doc["passed"] and doc["tested"] == rep.tested
    for key in ("check", "structure", "worst_margin", "witnesses", "seed", "samples", "chunks",
                "chunk_size", "tolerances", "details", "wall_time", "skipped"):
        assert key in doc
    rows = list(csv.reader(io.StringIO(emit_report(rep, "csv"))))
    assert rows[0] == ["index", "chunk", "ok", "margin", "p0", "p1", "p2", "p3"]
    assert len(rows) == rep.tested + 1
    assert float(rows[1][3]) == rep.margins[0]


def test_witness_reproducible():
    cfg = ExperimentConfig("monotone", "ellipse(2,0.4)", samples=2000, seed=42)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert not a.passed and a.witnesses == b.witnesses
    w = a.witnesses[0]
    assert np.array_equal(a.rows[w["index"]], w["row"])


def test_serial_equals_parallel():
    cfg = dict(check="wti", structure="canonical", samples=1500, seed=5, chunk_size=128)
    serial = run_experiment(ExperimentConfig(**cfg))
    parallel = run_experiment(ExperimentConfig(**cfg, workers=3))
    assert report_json(serial) == report_json(parallel)


def test_not_monotone_roundtrip_report():
    rep = run_experiment(ExperimentConfig("duality-roundtrip", "ellipse(2,0.4)", samples=100))
    assert not rep.passed and rep.details["not_monotone"] and len(rep.witnesses[0]["row"]) == 4


def test_pentagon_report():
    rep = run_experiment(ExperimentConfig("pentagon", "canonical", seed=42))
    assert rep.passed and rep.worst_margin < 1e-6


def test_every_check_runs_small():
    for name, check in CHECKS.items():
        n = 2 if name == "vp" else 40
        rep = run_experiment(ExperimentConfig(name, "canonical", samples=n, seed=1))
        assert rep.tested >= 1, name


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["wti", "--samples", "200", "--seed", "1", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]
    assert main(["monotone", "--structure", "ellipse(2,0.4)", "--samples", "5000"]) == 1
    assert json.loads(capsys.readouterr().out)["violations"] > 0
    assert main(["wti", "--structure", "nonsense"]) == 2
    with pytest.raises(SystemExit):
        main(["no-such-check"])
