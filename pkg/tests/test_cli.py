import json
import os
import subprocess
import sys

import pytest

from qlslab.cli import RunConfig, load_run_document, main, parse_rational, run
from qlslab.experiments import ExperimentManifest
from qlslab.records import SchemaError
from qlslab.towerrec import sweep_rows


def test_parse_rational():
    from fractions import Fraction
    assert parse_rational("1/4") == Fraction(1, 4)
    assert parse_rational(" 3 ") == 3
    assert parse_rational("0.5") == Fraction(1, 2)


def test_bnorm_prints_value(capsys):
    assert main(["bnorm", "--M", "2", "--N", "4"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "2"


def test_recursion_csv_matches_library(capsys):
    assert main(["recursion", "--eps-list", "1/4,1/8", "--P", "10", "--Q", "10", "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "epsilon,r,depth,mantissa,y_times_eps"
    expected = sweep_rows([parse_rational("1/4"), parse_rational("1/8")], 10, 10)
    assert len(lines) == 1 + len(expected)
    assert lines[1].split(",")[:3] == ["1/4", str(expected[0]["r"]), str(expected[0]["depth"])]


@pytest.mark.parametrize("argv", [
    [],
    ["nosuch"],
    ["bnorm", "--bogus", "1"],
    ["bnorm", "--M", "x/y"],
    ["recursion", "--eps-list", "1/2"],
    ["bnorm", "--tol", "no_such_tol=1"],
    ["bnorm", "--tol", "power_rel_tol"],
    ["bnorm", "--json", "--csv"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_failed_record_exits_2(capsys):
    # a zero-width band makes the ratio check fail
    assert main(["recursion", "--eps-list", "1/4", "--tol", "prop_fe_band=[0.0,0.5]"]) == 2
    assert "FAILED" in capsys.readouterr().out


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["bnorm", "--out", str(blocker / "sub")]) == 1


def test_json_document_validates(capsys):
    assert main(["recursion", "--eps-list", "1/4,1/8", "--json"]) == 0
    doc = load_run_document(capsys.readouterr().out)
    assert doc["subcommand"] == "recursion" and doc["exit_code"] == 0
    assert doc["params"]["eps_list"] == ["1/4", "1/8"]
    with pytest.raises(SchemaError):
        load_run_document(json.dumps({**doc, "schema": "qlslab.run/0"}))
    bad = dict(doc, records=[{"claim_id": "x"}])
    with pytest.raises(SchemaError):
        load_run_document(json.dumps(bad))


def test_run_config_round_trip():
    rc = RunConfig("qls", {"Q_list": "50,100", "N": 300}, seed=4, tolerance_overrides={"prop_fe_band": [0.4, 2]},
                   output_dir="/tmp/x", cache_dir="/tmp/c", jobs=3)
    assert RunConfig.from_json(rc.to_json()) == rc
    assert rc.tolerances().prop_fe_band == (0.4, 2)
    assert rc.normalised_params()["Q_list"] == [50, 100]


def test_outputs_are_reproducible_and_replayable(tmp_path, capsys):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    argv = ["census", "--Q", "20", "--X", "5000", "--delta", "0.1"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert main(["replay", str(a / "manifest.json"), "--out", str(c)]) == 0
    for name in ("results.csv", "records.jsonl", "plot.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()
    ma, mc = ExperimentManifest.load(a / "manifest.json"), ExperimentManifest.load(c / "manifest.json")
    assert ma.to_dict(with_timestamp=False) == mc.to_dict(with_timestamp=False)
    assert ma.params == {"Q": 20, "X": 5000, "delta": 0.1}


def test_seed_changes_random_family(tmp_path):
    base = dict(subcommand="qls", params={"Q_list": "30", "N": 60, "families": "random_signs", "seeds": 1})
    r0 = run(RunConfig(**base, seed=0)).records[0]
    r1 = run(RunConfig(**base, seed=1)).records[0]
    assert r0.lhs != r1.lhs
    assert run(RunConfig(**base, seed=0)).records[0].lhs == r0.lhs


def test_lmoment_uses_cache_dir_and_detects_corruption(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QLSLAB_CACHE_DIR", str(tmp_path))
    argv = ["lmoment", "--Q-list", "10", "--t-list", "1", "--json"]
    main(argv)
    first = json.loads(capsys.readouterr().out)
    cache_file = tmp_path / "lvalues.jsonl"
    assert cache_file.exists() and cache_file.read_text().count("\n") > 0
    main(argv)
    assert json.loads(capsys.readouterr().out)["rows"] == first["rows"]
    with cache_file.open("a") as fh:
        fh.write('{"garbage": 1}\n')
    assert main(argv) == 1
    assert "cache-gc" in capsys.readouterr().err
    assert main(["cache-gc", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["quarantined"] == 1
    main(argv)
    assert json.loads(capsys.readouterr().out)["rows"] == first["rows"]


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAILED" not in out and out.count("\n") >= 10


@pytest.mark.parametrize("argv", [
    ["sieve-check", "--sizes", "2,4"],
    ["weights", "--j-max", "4"],
    ["poisson", "--q-max", "11", "--multipliers", "1,2"],
    ["mellin", "--sigma-list", "0.2,0.1"],
    ["vs", "--t-list", "5", "--a-list", "1"],
    ["qls", "--Q-list", "100,200", "--N", "1000", "--seeds", "3"],
])
def test_subcommands_pass_on_small_inputs(argv, capsys):
    assert main(argv) == 0, capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qlslab", "bnorm", "--M", "2", "--N", "4"],
                         capture_output=True, text=True, env={**os.environ}, check=False)
    assert out.returncode == 0 and out.stdout.splitlines()[0] == "2"
