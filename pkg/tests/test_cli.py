import json
import subprocess
import sys

import numpy as np
import pytest

from nogaps.cli import run
from nogaps.linalg import eigen_decompose, read_matrix
from nogaps.randgen import MatrixEnsemble, derive_stream, sample_matrix


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_quantile_values(capsys):
    code, out, _ = call(capsys, "quantile", "--delta", "0.1")
    assert code == 0
    d = json.loads(out)
    assert d["limit_min"] == pytest.approx(0.0051755, abs=5e-8)
    assert d["limit_max"] == pytest.approx(0.3302585, abs=5e-8)


def test_zero_trials_is_usage_error(capsys):
    code, _, err = call(capsys, "smin-tail", "--rows", "10", "--cols", "10", "--trials", "0")
    assert code == 1
    assert "trials must be positive" in err


def test_bad_flag_names_the_flag(capsys):
    code, _, err = call(capsys, "smin-tail", "--trials", "ten")
    assert code == 1 and "--trials" in err
    code, _, err = call(capsys, "quantile", "--delta", "0.1", "--bogus", "1")
    assert code == 1 and "--bogus" in err


def test_domain_error_exit_one(capsys):
    code, _, err = call(capsys, "quantile", "--delta", "1.5")
    assert code == 1 and "delta" in err


def test_numerical_failure_exit_two(capsys, monkeypatch):
    import nogaps.experiments as ex
    from nogaps.linalg import ConvergenceError

    def boom(A):
        raise ConvergenceError("no convergence")
    monkeypatch.setattr(ex, "smallest_singular_value", boom)
    code, _, err = call(capsys, "smin-tail", "--rows", "4", "--cols", "4", "--trials", "3",
                        "--seed", "17")
    assert code == 2
    assert "trial 0" in err and "seed 17" in err


def test_byte_identical_outputs(tmp_path, capsys):
    outs = []
    for k in range(2):
        p = tmp_path / f"o{k}.csv"
        r = tmp_path / f"r{k}.json"
        assert run(["smin-tail", "--rows", "6", "--cols", "5", "--trials", "200", "--seed", "3",
                    "--out", str(p), "--report", str(r)]) == 0
        outs.append((p.read_bytes(), r.read_bytes()))
    assert outs[0] == outs[1]
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["deloc", "--n", "8", "--m", "1,2", "--trials", "6"],
    ["dist-tail", "--N", "10", "--m", "2", "--trials", "50"],
    ["normal-vector", "--n", "20", "--delta", "0.2", "--trials", "4"],
    ["opnorm", "--n", "10", "--trials", "8"],
    ["baseline", "--n", "50", "--trials", "5"],
])
def test_threads_never_change_output(tmp_path, capsys, argv):
    texts = []
    for t in ("1", "3"):
        p = tmp_path / f"t{t}"
        assert run(argv + ["--seed", "5", "--threads", t, "--out", str(p)]) == 0
        texts.append(p.read_bytes())
    assert texts[0] == texts[1]
    capsys.readouterr()


def test_gen_spectrum_round_trip(tmp_path, capsys):
    m = tmp_path / "A.txt"
    assert run(["gen", "--rows", "5", "--cols", "5", "--seed", "9", "--index", "2",
                "--out", str(m)]) == 0
    A, field = read_matrix(m.read_text())
    ref = sample_matrix(MatrixEnsemble(field="complex", rows=5, cols=5), derive_stream(9, 2))
    assert field == "complex" and A.tobytes() == ref.tobytes()
    code, out, _ = call(capsys, "spectrum", "--matrix", str(m))
    assert code == 0
    rows = [ln.split(",") for ln in out.splitlines()[1:]]
    vals = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    assert vals.tobytes() == eigen_decompose(ref).values.tobytes()


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("delta = 0.1\n")
    code, out, _ = call(capsys, "quantile", "--config", str(cfg))
    assert code == 0 and json.loads(out)["delta"] == 0.1
    code, out, _ = call(capsys, "quantile", "--config", str(cfg), "--delta", "0.3")
    assert json.loads(out)["delta"] == 0.3


def test_config_satisfies_exclusive_group(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("flat = 100\ndelta = 0.1\n")
    code, out, _ = call(capsys, "compress", "--config", str(cfg))
    assert code == 0 and json.loads(out)["n"] == 100


def test_config_missing_file(capsys):
    code, _, err = call(capsys, "quantile", "--config", "/nonexistent.ini")
    assert code == 1 and "no such file" in err


def test_config_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ndelta = 0.1\nwidth = 3\n")
    code, _, err = call(capsys, "quantile", "--config", str(cfg))
    assert code == 1 and "width" in err


def test_report_echoes_config(tmp_path, capsys):
    r = tmp_path / "r.json"
    assert run(["dist-tail", "--N", "8", "--m", "1", "--trials", "30", "--seed", "4",
                "--report", str(r)]) == 0
    d = json.loads(r.read_text())
    assert d["master_seed"] == 4 and d["config"]["N"] == 8 and "oracle" in d["metrics"]
    capsys.readouterr()


def test_lcd_and_compress_commands(capsys):
    code, out, _ = call(capsys, "lcd", "--vector", "1,0,0")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(2 / 3, abs=1e-3)
    code, out, _ = call(capsys, "compress", "--flat", "100", "--delta", "0.1", "--rho", "0.5")
    d = json.loads(out)
    assert d["class"] == "incompressible" and d["distance"] == pytest.approx(0.9**0.5, abs=1e-12)


def test_levy_command(capsys):
    code, out, _ = call(capsys, "levy", "--trials", "10000", "--seed", "1")
    assert code == 0 and json.loads(out)["estimate"] == pytest.approx(0.5, abs=0.02)


def test_floats_printed_with_17_digits(capsys):
    _, out, _ = call(capsys, "quantile", "--delta", "0.1")
    assert '"limit_max": 0.33025850929940459' in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nogaps", "quantile", "--delta", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "limit_min" in proc.stdout
