import csv
import json

import numpy as np
import pytest

from staglab import instances
from staglab.diagnostics import analyze_run
from staglab.gmres import run_gmres
from staglab.report import CSV_HEADER, SCHEMA, RunConfig, build_report, read_report, recompute_flags, write_report


def _report(inst, max_iter=None, **cfg):
    config = RunConfig(matrix_source="test", max_iter=max_iter, **cfg)
    state, _, status = run_gmres(inst.operator(), inst.rhs, max_iter=max_iter)
    return build_report(config, state, analyze_run(state, config.thresholds), status, inst.provenance)


def test_example_report_fields():
    rep = _report(instances.paper_example())
    assert rep["schema"] == SCHEMA and rep["status"] == "converged"
    it = rep["iterations"][1]
    assert it["m"] == 2
    assert f"{it['resnorm']:.15g}" == "0.577350269189626"
    sig = sorted(h["sigma_re"] for h in it["harmonic"])
    assert sig == pytest.approx([-np.sqrt(3), np.sqrt(3)], abs=1e-12)
    assert it["K"] == {"re": pytest.approx(0.5), "im": pytest.approx(0.0, abs=1e-15)}


def test_json_round_trip(tmp_path):
    rep = _report(instances.planted_singular_hessenberg(8, {3, 4}, 0), emit_vectors=True)
    write_report(rep, tmp_path / "r.json")
    assert read_report(tmp_path / "r.json") == json.loads(json.dumps(rep))
    assert read_report(tmp_path / "r.json") == rep


def test_csv_lines(tmp_path):
    rep = _report(instances.random_instance(5, 0), max_iter=2)
    assert len(rep["iterations"]) == 2
    write_report(rep, tmp_path / "r.csv", "csv")
    rows = list(csv.reader((tmp_path / "r.csv").open()))
    assert len(rows) == 3 and rows[0] == CSV_HEADER
    # same digits as the JSON document
    assert float(rows[1][1]) == rep["iterations"][0]["resnorm"]
    assert rows[1][1] == repr(rep["iterations"][0]["resnorm"])


def test_csv_marks_infinite_pairs(tmp_path):
    rep = _report(instances.cyclic_shift_instance(3))
    write_report(rep, tmp_path / "r.csv", "csv")
    rows = list(csv.DictReader((tmp_path / "r.csv").open()))
    assert rows[1]["sigmas"] == "inf;inf"
    assert [r["stagnated"] for r in rows] == ["1", "1", "0"]


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_report({"iterations": []}, tmp_path / "x", "xml")


def test_flags_recomputable(tmp_path):
    for inst in (instances.paper_example(), instances.planted_singular_hessenberg(8, {5}, 3),
                 instances.random_instance(6, 1)):
        rep = _report(inst)
        write_report(rep, tmp_path / "r.json")
        back = read_report(tmp_path / "r.json")
        for it in back["iterations"]:
            flags = recompute_flags(back, it)
            assert flags["stagnated"] == it["stagnated"]
            assert flags["predicates_consistent"] == it["predicates_consistent"]


def test_no_harmonic_option():
    rep = _report(instances.paper_example(), emit_harmonic=False)
    assert "harmonic" not in rep["iterations"][0]


@pytest.mark.parametrize("kw", [{"max_iter": 0}, {"conv_tol": 0.0}])
def test_run_config_validation(kw):
    with pytest.raises(ValueError):
        RunConfig(matrix_source="x", **kw)
