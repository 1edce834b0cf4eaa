import json

import numpy as np
import pytest

from hybridmeta import acceptance, cli
from hybridmeta import experiments as ex
from hybridmeta.experiments import ExperimentSpec, Kind, Mode, ResultTable, SpecError, Sweep, emit_plotdata, run_experiment
from hybridmeta.model import db_to_lin

SCHEMAS = {
    (Kind.ASSOC, Mode.ANALYTIC): ("sweep_value", "a1_analytic", "a2_los_analytic", "a2_nlos_analytic", "error"),
    (Kind.COVERAGE, Mode.BOTH): ("sweep_value", "m1_analytic", "m1_empirical", "m1_stderr", "m1_absdiff",
                                 "variance_analytic", "variance_empirical", "variance_stderr", "variance_absdiff",
                                 "error"),
    (Kind.DELAY, Mode.MC): ("sweep_value", "theta", "m_minus1_empirical", "m_minus1_stderr", "jitter_empirical",
                            "jitter_stderr", "error"),
    (Kind.META, Mode.BOTH): ("theta", "x", "ccdf_analytic", "ccdf_empirical", "ccdf_stderr", "ccdf_absdiff",
                             "error"),
    (Kind.RATE, Mode.ANALYTIC): ("sweep_value", "x", "ccdf_analytic", "error"),
    (Kind.VALIDATE, Mode.ANALYTIC): ("criterion", "check", "passed", "detail"),
}


@pytest.mark.parametrize("key", list(SCHEMAS))
def test_schema_is_stable(key):
    assert ex.table_columns(*key) == SCHEMAS[key]


def test_spec_validation():
    with pytest.raises(SpecError, match="sweep"):
        ExperimentSpec(Kind.ASSOC, Sweep("small.density_lambda2", ()))
    with pytest.raises(SpecError, match="increasing"):
        ExperimentSpec(Kind.ASSOC, Sweep("small.density_lambda2", (2e-5, 1e-5)))
    with pytest.raises(SpecError, match="realizations"):
        ExperimentSpec(Kind.COVERAGE, mode=Mode.MC, n_realizations=50)


def test_assoc_sweep_monotone(cfg):
    t = run_experiment(ExperimentSpec(Kind.ASSOC, Sweep("small.density_lambda2", tuple(np.linspace(1, 100, 20) * 1e-6))), cfg)
    los = t.column("a2_los_analytic")
    assert np.all(np.diff(los) >= 0)
    assert not t.failed


def test_delay_sweep_flat(cfg):
    spec = ExperimentSpec(Kind.DELAY, Sweep("small.density_lambda2", tuple(np.arange(20, 101, 10) * 1e-6)),
                          thetas=(db_to_lin(-10.0),))
    vals = run_experiment(spec, cfg).column("m_minus1_analytic")
    assert np.all(np.abs(np.array(vals) - 1.11) <= 0.02)


def test_coverage_two_curves(cfg, tmp_path):
    spec = ExperimentSpec(Kind.COVERAGE, Sweep(ex.THETA, tuple(db_to_lin(d) for d in (-6.0, 0.0, 6.0))))
    table = run_experiment(spec, cfg)
    paths = emit_plotdata(table, tmp_path, cfg)
    names = sorted(p.name for p in paths)
    assert names == ["coverage_m1.csv", "coverage_table.csv", "coverage_variance.csv", "manifest.json"]
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert [c["name"] for c in man["curves"]] == ["m1", "variance"]
    assert man["units"]["sweep_value"] == "linear"


def test_both_mode_pairs(cfg, tmp_path):
    spec = ExperimentSpec(Kind.META, mode=Mode.BOTH, thetas=(1.0,), x_grid=(0.3, 0.6), n_realizations=500, seed=3)
    t = run_experiment(spec, cfg)
    for row in t.rows:
        r = dict(zip(t.columns, row))
        assert r["ccdf_absdiff"] == pytest.approx(abs(r["ccdf_analytic"] - r["ccdf_empirical"]), abs=1e-15)


def test_emit_is_bit_stable(cfg, tmp_path):
    spec = ExperimentSpec(Kind.META, thetas=(10.0, 1.0), x_grid=(0.2, 0.5))
    a, b = tmp_path / "a", tmp_path / "b"
    pa = emit_plotdata(run_experiment(spec, cfg), a, cfg)
    pb = emit_plotdata(run_experiment(spec, cfg), b, cfg)
    for x, y in zip(pa, pb):
        assert x.read_bytes() == y.read_bytes()


def test_empty_table_writes_nothing(tmp_path):
    out = tmp_path / "out"
    with pytest.raises(ValueError, match="empty"):
        emit_plotdata(ResultTable(Kind.ASSOC, ex.table_columns(Kind.ASSOC, Mode.ANALYTIC)), out)
    assert not out.exists()


def test_io_error_names_path(cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    table = run_experiment(ExperimentSpec(Kind.META, thetas=(1.0,), x_grid=(0.5,)), cfg)
    with pytest.raises(OSError, match="file"):
        emit_plotdata(table, blocker / "sub")


def test_point_failure_keeps_rows(cfg, monkeypatch):
    real = ex._coverage_point

    def flaky(c, spec, idx, theta):
        if idx == 1:
            raise ArithmeticError("boom")
        return real(c, spec, idx, theta)

    monkeypatch.setattr(ex, "_coverage_point", flaky)
    spec = ExperimentSpec(Kind.COVERAGE, Sweep(ex.THETA, (0.5, 1.0, 2.0)))
    t = run_experiment(spec, cfg)
    assert t.failed and len(t.rows) == 3
    assert t.column("error") == ["", "ArithmeticError: boom", ""]
    assert np.isnan(t.column("m1_analytic")[1])


# ------------------------------------------------------------------- CLI


def test_cli_meta(tmp_path, capsys):
    rc = cli.main(["meta", "--theta-db", "10,0,-10", "--x-grid", "0.3", "--output", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "meta_table.csv").read_text().splitlines()
    assert lines[0] == "theta,x,ccdf_analytic,error"
    assert float(lines[1].split(",")[0]) == pytest.approx(10.0)


def test_cli_sweep_converts_units(tmp_path):
    rc = cli.main(["assoc", "--sweep", "small.density_lambda2=10:30:3", "--output", str(tmp_path)])
    assert rc == 0
    t = (tmp_path / "assoc_table.csv").read_text().splitlines()
    assert [float(r.split(",")[0]) for r in t[1:]] == pytest.approx([1e-5, 2e-5, 3e-5])
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["units"]["sweep_value"] == "m^-2"


def test_parse_helpers():
    assert cli.parse_sweep("theta=-10:10:3").values == pytest.approx((0.1, 1.0, 10.0))
    assert cli._range("0.1,0.5", "x") == [0.1, 0.5]
    with pytest.raises(cli.UsageError):
        cli.parse_sweep("theta")
    with pytest.raises(cli.UsageError):
        cli._range("1:2", "x")


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["meta", "--mode", "sideways"],
    ["assoc", "--sweep", "nope.field=1:2:2"],
    ["meta", "--x-grid", "a:b:c"],
    ["coverage", "--mode", "mc", "--realizations", "10"],
    ["meta", "--config", "/nonexistent/cfg.json"],
    ["meta", "--seed", "-1"],
])
def test_cli_usage_errors(argv, tmp_path):
    assert cli.main(argv + ["--output", str(tmp_path)]) == 2


def test_cli_config_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"macro": {"ple_alpha1": 2.0}}))
    assert cli.main(["meta", "--config", str(p), "--output", str(tmp_path)]) == 2
    assert "macro.ple_alpha1" in capsys.readouterr().err


def _fake_runner(passed):
    class Fake:
        def __init__(self, *a, **k):
            pass

        def run_all(self):
            return [acceptance.CriterionResult(1, "stub", [acceptance.Check("c", passed, "d")])]

    return Fake


@pytest.mark.parametrize("passed, code", [(True, 0), (False, 1)])
def test_cli_validate_exit_status(monkeypatch, tmp_path, passed, code):
    monkeypatch.setattr(acceptance, "AcceptanceRunner", _fake_runner(passed))
    assert cli.main(["validate", "--mode", "analytic", "--output", str(tmp_path)]) == code
    assert (tmp_path / "validate_table.csv").exists()


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "hybridmeta", "meta", "--x-grid", "0.5", "--theta-db", "0",
                        "--output", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
