import csv
import io
import shutil
from contextlib import redirect_stdout
from pathlib import Path

import pytest

from boltzspec.cli import build_parser, main

REFERENCE = Path(__file__).resolve().parents[1] / "configs" / "reference.cfg"


def _write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    shutil.copy(REFERENCE, tmp_path / "ref.cfg")
    return tmp_path


def test_precompute_then_run(workdir, capsys):
    assert main(["precompute", "ref.cfg"]) == 0
    assert len(list((workdir / "cache").glob("*.bkmt"))) == 1
    assert main(["run", "ref.cfg"]) == 0
    rows = list(csv.DictReader((workdir / "out" / "diagnostics.csv").open()))
    assert len(rows) >= 1
    assert float(rows[-1]["t"]) == pytest.approx(0.05)
    assert (workdir / "out" / "snapshot_final.bspc").exists()


def test_run_is_reproducible(workdir):
    assert main(["run", "ref.cfg", "--out-dir", "a"]) == 0
    assert main(["run", "ref.cfg", "--out-dir", "b"]) == 0
    assert (workdir / "a" / "diagnostics.csv").read_bytes() == \
        (workdir / "b" / "diagnostics.csv").read_bytes()


def test_run_without_table_and_no_auto_precompute(workdir, capsys):
    cfg = _write(workdir / "c.cfg", "output.auto_precompute = false\n")
    assert main(["run", cfg]) == 5
    assert "precompute" in capsys.readouterr().err


def test_run_with_mismatched_table(workdir, capsys):
    small = _write(workdir / "n4.cfg", "discretization.N = 4\n")
    assert main(["precompute", small, "--out", "t4.bkmt"]) == 0
    assert main(["run", "ref.cfg", "--table", "t4.bkmt"]) == 5
    assert "does not match" in capsys.readouterr().err


def test_config_error_exit_code(workdir, capsys):
    bad = _write(workdir / "bad.cfg", "kernel.R = 1.0\n")
    assert main(["run", bad]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "violates dealiasing" in err[0]


def test_budget_exit_code(workdir, capsys):
    big = _write(workdir / "big.cfg", "discretization.N = 12\ndiscretization.method = classical\n")
    assert main(["precompute", big]) == 4
    assert "fast path" in capsys.readouterr().err


def test_fast_run(workdir):
    cfg = _write(workdir / "fast.cfg", "discretization.N = 12\ntime.t_end = 0.01\n"
                                       "diagnostics.entropy_every = 1\ndiagnostics.cadence = 5\n"
                                       "initial.bumps = [[1.0, [0.2, 0.0], 0.5]]\n")
    assert main(["precompute", cfg]) == 0
    assert main(["run", cfg]) == 0
    rows = list(csv.DictReader((workdir / "out" / "diagnostics.csv").open()))
    assert all(r["D"] != "" and float(r["D"]) >= 0 for r in rows)


def test_eigen_has_zero_row(workdir):
    cfg = _write(workdir / "e.cfg", "discretization.N = 4\n")
    buf = io.StringIO()
    with redirect_stdout(buf):
        assert main(["eigen", cfg]) == 0
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    assert list(rows[0]) == ["k1", "k2", "a_k"]
    zero = [r for r in rows if r["k1"] == "0" and r["k2"] == "0"]
    assert len(zero) == 1 and float(zero[0]["a_k"]) == 0.0
    assert len(rows) == 81


def test_oracle_reports_small_deviation(workdir, capsys):
    assert main(["oracle", "ref.cfg"]) == 0
    out = capsys.readouterr().out
    dev = float(out.split("max relative deviation")[1].split()[0])
    assert dev < 1e-6


def test_consistency_command(workdir, capsys):
    cfg = _write(workdir / "c.cfg", "consistency.N_ref = 16\nconsistency.Ns = [2, 4, 8]\n"
                                    "consistency.temperature = 0.3\ndiscretization.M = 32\n")
    assert main(["consistency", cfg, "--out", "sweep.csv"]) == 0
    assert (workdir / "sweep.csv").read_text().startswith("N,norm_p0,norm_p1,norm_p2")
    assert "slope p=0" in capsys.readouterr().err


def test_spreading_command_skip(workdir, capsys):
    cfg = _write(workdir / "s.cfg", "kernel.L = 1.0\nkernel.R = 1.4142135623730951\n"
                                    "spreading.radii = [1.5]\n")
    assert main(["spreading", cfg]) == 0
    assert "PASS" in capsys.readouterr().out


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    out = capsys.readouterr().out
    assert "kernel.R = 4.442882938158366" in out
    assert "Exit codes" in out
