import csv
import json
import subprocess
import sys

import pytest

from staglab.cli import main


def test_solve_example(tmp_path, capsys):
    out = tmp_path / "out.json"
    assert main(["solve", "paper_example", "--max-iter", "3", "--report", str(out)]) == 0
    rep = json.loads(out.read_text())
    it = rep["iterations"][1]
    assert it["resnorm"] == pytest.approx(0.57735026918962576, abs=1e-15)
    assert sorted(round(h["sigma_re"], 7) for h in it["harmonic"]) == [-1.7320508, 1.7320508]
    assert len(rep["iterations"]) <= 3
    assert "status: converged" in capsys.readouterr().out


def test_generate_then_solve(tmp_path):
    inst = tmp_path / "inst"
    assert main(["generate", "cyclic-shift", "--n", "5", "-o", str(inst)]) == 0
    assert {p.name for p in inst.iterdir()} == {"matrix.mtx", "rhs.txt", "instance.json"}
    out = tmp_path / "r.csv"
    assert main(["solve", str(inst), "--report", str(out), "--format", "csv"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["resnorm"]) for r in rows] == [1, 1, 1, 1, 0]
    assert [r["stagnated"] for r in rows] == ["1"] * 4 + ["0"]


def test_generate_planted_and_verify(tmp_path):
    inst = tmp_path / "p"
    assert main(["generate", "planted", "--n", "8", "--steps", "3,4", "--seed", "2", "-o", str(inst)]) == 0
    meta = json.loads((inst / "instance.json").read_text())
    assert meta["expected_stagnation_steps"] == [3, 4]
    assert main(["verify", "--instance", str(inst)]) == 0


def test_verify_sweep(capsys):
    assert main(["verify", "--seed-sweep", "10", "--n", "10"]) == 0
    assert "10/10 instances passed" in capsys.readouterr().out


def test_verify_detects_violation(capsys):
    # an absurd stagnation tolerance flags every step as stagnated
    assert main(["verify", "--instance", "paper_example", "--eps-s", "10"]) == 1


def test_missing_file_is_input_error(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.mtx")]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_matrix_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n")
    assert main(["solve", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unknown_generator_and_rhs_length(tmp_path):
    assert main(["solve", "no-such-kind"]) == 2
    rhs = tmp_path / "b.txt"
    rhs.write_text("1 0\n")
    assert main(["solve", "paper_example", "--rhs", str(rhs)]) == 2


def test_unwritable_report(tmp_path):
    assert main(["solve", "paper_example", "--report", str(tmp_path / "no" / "dir" / "r.json")]) == 2


def test_numerical_failure_exit_code(tmp_path):
    m = tmp_path / "sing.mtx"
    m.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n")
    rhs = tmp_path / "b.txt"
    rhs.write_text("1 0\n1 0\n")
    assert main(["solve", str(m), "--rhs", str(rhs)]) == 1


def test_usage_errors():
    for argv in (["solve", "paper_example", "--bogus"], [], ["solve", "paper_example", "--max-iter", "0"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "staglab", "solve", "random", "--n", "4", "--rhs", "random:1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "status:" in proc.stdout


def test_env_thresholds(monkeypatch, tmp_path):
    monkeypatch.setenv("STAGLAB_EPS_S", "10")
    out = tmp_path / "r.json"
    main(["solve", "paper_example", "--report", str(out)])
    assert json.loads(out.read_text())["config"]["thresholds"]["eps_s"] == 10.0
