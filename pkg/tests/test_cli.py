import json
import subprocess
import sys

import numpy as np
import pytest

from singcov.cli import run
from singcov.matio import matrix_from_json, write_matrix


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rng = np.random.default_rng(0)
    x = (rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))) / np.sqrt(2)
    write_matrix("K.json", x @ x.conj().T / 4)
    a = np.ones(8) / np.sqrt(8)
    write_matrix("a.json", a)
    write_matrix("X0.json", rng.standard_normal((6, 5)))
    write_matrix("X1.json", 2 * rng.standard_normal((6, 5)))
    write_matrix("X.json", rng.standard_normal((6, 3)))
    write_matrix("Xs.json", rng.standard_normal((2, 5)))
    write_matrix("y.json", rng.standard_normal(6))
    return tmp_path


def test_estimate_writes_matrix_and_diagnostics(workdir, capsys):
    assert run(["estimate", "--input", "K.json", "--L", "2", "--out", "est.json"]) == 0
    doc = json.loads((workdir / "est.json").read_text())
    diag = doc["diagnostics"]
    assert diag["method"] == "exact" and diag["rank"] == 4 and len(diag["lambda"]) == 4
    assert diag["mu"] > 0 and set(diag["timings"]) == {"engine_s", "reassembly_s"}
    assert doc["matrix"]["rows"] == 8
    assert "mu =" in capsys.readouterr().out


def test_estimate_inverse_is_matrix_inverse(workdir):
    run(["estimate", "--input", "K.json", "--L", "2", "--out", "a.out.json"])
    run(["estimate", "--input", "K.json", "--L", "2", "--out", "b.out.json", "--inverse"])
    a = matrix_from_json(json.loads((workdir / "a.out.json").read_text())["matrix"])
    b = matrix_from_json(json.loads((workdir / "b.out.json").read_text())["matrix"])
    np.testing.assert_allclose(a @ b, np.eye(8), atol=1e-10)


def test_estimate_monte_carlo_is_seeded(workdir):
    args = ["estimate", "--input", "K.json", "--L", "2", "--method", "mc", "--samples", "2000", "--seed", "5"]
    run(args + ["--out", "a.json"])
    run(args + ["--out", "b.json"])
    da = json.loads((workdir / "a.json").read_text())
    db = json.loads((workdir / "b.json").read_text())
    assert da["matrix"] == db["matrix"]
    assert "stderr" in da["diagnostics"]


def test_estimate_L_above_rank(workdir, capsys):
    assert run(["estimate", "--input", "K.json", "--L", "5"]) == 1
    err = capsys.readouterr().err
    assert "L=5" in err and "rank" in err and "4" in err


def test_estimate_L_equals_rank_is_degenerate(workdir, capsys):
    assert run(["estimate", "--input", "K.json", "--L", "4"]) == 2
    assert "choose L < 4" in capsys.readouterr().err


def test_missing_input_is_io_error(workdir, capsys):
    assert run(["estimate", "--input", "missing.json", "--L", "2"]) == 3


def test_bad_output_directory_checked_before_compute(workdir, capsys):
    assert run(["estimate", "--input", "K.json", "--L", "2", "--out", "nodir/est.json"]) == 3


def test_malformed_input_is_input_error(workdir):
    (workdir / "bad.json").write_text("{")
    assert run(["estimate", "--input", "bad.json", "--L", "1"]) == 1


@pytest.mark.parametrize("argv", [["estimate", "--L"], ["nosuch"], []])
def test_usage_error_exit_code(workdir, argv):
    with pytest.raises(SystemExit) as exc:
        run(argv)
    assert exc.value.code == 1


def test_inputs_not_mutated(workdir):
    before = (workdir / "K.json").read_bytes()
    run(["estimate", "--input", "K.json", "--L", "2", "--out", "K2.json"])
    assert (workdir / "K.json").read_bytes() == before


def test_capon(workdir, capsys):
    assert run(["capon", "--input", "K.json", "--steering", "a.json", "--L", "3"]) == 0
    out = capsys.readouterr().out
    assert "conventional" in out and "n/a (K is singular)" in out and "reduced (L=3)" in out


def test_classify_csv(workdir, capsys):
    assert run(["classify", "--train0", "X0.json", "--train1", "X1.json", "--test", "X.json", "--L", "3",
                "--out", "dec.csv"]) == 0
    lines = (workdir / "dec.csv").read_text().splitlines()
    assert lines[0] == "sample,decision,statistic"
    assert len(lines) == 4
    assert all(line.split(",")[1] in ("0", "1") for line in lines[1:])


def test_classify_summary_to_stdout(workdir, capsys):
    run(["classify", "--train0", "X0.json", "--train1", "X1.json", "--test", "X.json", "--L", "3", "--gamma", "1e9"])
    assert "0 of 3 samples classified H1" in capsys.readouterr().out


def test_linear(workdir, capsys):
    assert run(["linear", "--x", "Xs.json", "--y", "X0.json", "--obs", "y.json", "--L", "2", "--out", "lin.json"]) == 0
    doc = json.loads((workdir / "lin.json").read_text())
    assert doc["penalty"] == pytest.approx(1 + 2 / 3)
    assert doc["estimate"]["rows"] == 2
    assert "penalty factor" in capsys.readouterr().out


def test_bench_lw_byte_identical(workdir):
    args = ["bench-lw", "--M", "20", "--N", "10", "--beta", "10", "--L-sweep", "3:9:2", "--trials", "3", "--seed", "7"]
    assert run(args + ["--out", "a.csv"]) == 0
    assert run(["--threads", "3"] + args + ["--out", "b.csv"]) == 0
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()


def test_bench_lw_seed_matters(workdir):
    base = ["bench-lw", "--M", "20", "--N", "10", "--L-sweep", "3,5", "--trials", "2"]
    run(base + ["--seed", "1", "--out", "a.csv"])
    run(base + ["--seed", "2", "--out", "b.csv"])
    assert (workdir / "a.csv").read_bytes() != (workdir / "b.csv").read_bytes()


def test_bench_lw_bad_sweep(workdir):
    assert run(["bench-lw", "--M", "20", "--N", "10", "--L-sweep", "3:40:1", "--out", "x.csv"]) == 1


def test_bench_eig(workdir, capsys):
    assert run(["bench-eig", "--M", "20", "--N", "10", "--alpha", "2", "--L-sweep", "4,8", "--trials", "2",
                "--out", "eig.csv"]) == 0
    assert "zero eigenvalues" in capsys.readouterr().out
    assert (workdir / "eig.csv").read_text().startswith("L,trial,index,eigenvalue,estimator\n")


def test_threads_env_fallback(workdir, monkeypatch):
    monkeypatch.setenv("SINGCOV_THREADS", "2")
    assert run(["estimate", "--input", "K.json", "--L", "2", "--method", "mc", "--samples", "1000"]) == 0


def test_verify_quick(capsys):
    assert run(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 9


def test_console_script_entry_point(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "singcov.cli", "estimate", "--input", "K.json", "--L", "9"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "rank" in proc.stderr
