import argparse
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from lonely_runner.cli import (
    ReportRecord,
    certificate_from_json,
    main,
    parse_range,
    rat,
    unrat,
)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, _ = run(*argv)
    assert code == 0, out
    return json.loads(out)


def test_classify_tight():
    d = run_json("classify", "1", "2", "3", "4", "5", "7", "12")
    assert d["outcome"]["class"] == "tight"
    assert run_json("classify", "1", "2", "3")["outcome"]["class"] == "tight"


def test_classify_csv():
    code, out, _ = run("classify", "1", "3", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["speeds,class,witness,witness_points", "1 3,loose,1/2,"]


def test_classify_invalid_input():
    assert run("classify", "3", "2")[0] == 2
    assert run("classify")[0] == 2
    assert run("nonsense")[0] == 2


def test_witness_and_reverify(tmp_path):
    speeds = [str(v) for v in range(1, 41) if v != 20] + ["45"]
    path = tmp_path / "w.json"
    code, out, _ = run("witness", *speeds, "--script-m", "2", "--out", str(path))
    assert code == 0
    d = json.loads(out)
    cert = d["outcome"]["certificate"]
    assert d["outcome"]["verified"] is True
    assert cert["kind"] == "coprime_pair"
    assert unrat(cert["t"]) == Fraction(cert["q"], cert["modulus"])
    assert certificate_from_json(cert).verify()
    assert run_json("verify-witness", str(path))["outcome"]["verified"] is True

    tampered = json.loads(path.read_text())
    tampered["outcome"]["certificate"]["q"] += 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(tampered))
    assert run_json("verify-witness", str(bad))["outcome"]["verified"] is False


def test_witness_inapplicable_exit_code():
    assert run("witness", "1", "2", "3")[0] == 2


def test_witness_batch_seeded():
    a = run("witness-batch", "--count", "5", "--seed", "3")
    b = run("witness-batch", "--count", "5", "--seed", "3")
    c = run("witness-batch", "--count", "5", "--seed", "4")
    assert a == b and a[1] != c[1]
    assert json.loads(a[1])["outcome"]["summary"] == {"verified": 5}


def test_f_report_and_checkpoint(tmp_path):
    d = run_json("f", "2..12")
    assert [r["f"] for r in d["outcome"]["results"]] == [2, 2, 2, 2, 4, 4, 4, 4, 4, 4, 4]
    ck = tmp_path / "ck.jsonl"
    code, out, err = run("f", "2..12", "--checkpoint", str(ck), "--max-pairs", "30")
    assert code == 3
    assert json.loads(out)["partial"] is True
    code, out2, _ = run("f", "2..12", "--checkpoint", str(ck))
    assert code == 0
    assert json.loads(out2) == d


def test_f_overlapping_flag():
    d = run_json("f", "8", "--include-overlapping")
    assert d["inputs"]["include_overlapping"] is True


def test_f_time_budget_exit_code():
    assert run("f", "30..40", "--budget-secs", "0")[0] == 3


def test_central():
    d = run_json("central", "8", "2")
    assert d["outcome"]["violations"] == 1
    assert d["outcome"]["list"][0] == {"I": [1, 4], "J": [5, 8], "S": [2, 3, 4], "T": [6]}
    assert run("central", "3", "2")[0] == 2


def test_adjacent():
    d = run_json("adjacent", "4..10")
    assert d["outcome"] == {"cases": 49, "failures": []}
    assert run("adjacent", "3")[0] == 2
    d = run_json("adjacent", "3", "--allow-small")
    assert d["outcome"]["failures"][0]["violator"] == {"S": [2, 3, 4], "T": [6]}


def test_tables():
    d = run_json("tables")
    assert [r["value_display"] for r in d["outcome"]["chi"]] == ["12.0", "82.8", "318.1", "1155.5", "4403.6", "28689.1"]
    assert d["outcome"]["kappa"][-1]["value_display"] == "87210.9"
    assert run("tables", "--chi", "7")[0] == 2
    code, out, _ = run("tables", "--kappa", "3", "--format", "human")
    assert "325.1" in out


def test_coprime_gap():
    d = run_json("coprime-gap", "30", "--scan-limit", "1000")
    assert d["outcome"]["rows"] == [{"max_run": 5, "omega": 3, "x": 30}]
    assert run("coprime-gap", "1")[0] == 2


def test_timing_flag_only_when_asked():
    assert "timing" not in run_json("tables", "--chi", "1")
    assert "timing" in run_json("tables", "--chi", "1", "--timing")


def test_report_round_trip():
    _, out, _ = run("classify", "1", "2", "4")
    rec = ReportRecord.from_json(out)
    assert rec.to_json() + "\n" == out


def test_rat_round_trip():
    q = Fraction(-7, 3)
    assert rat(q) == {"num": "-7", "den": "3"}
    assert unrat(rat(q)) == q


def test_parse_range():
    assert parse_range("7") == (7, 7)
    assert parse_range("2..24") == (2, 24)
    with pytest.raises(argparse.ArgumentTypeError):
        parse_range("5..2")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_range("x")


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "lonely_runner", "classify", "1", "3"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0
    assert json.loads(r.stdout)["outcome"]["class"] == "loose"
