import io
import json
import subprocess
import sys

import pytest

from fgqmf.cli import run
from fgqmf.modelfile import shipped_model_path


def model(name):
    return str(shipped_model_path(name))


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


@pytest.mark.parametrize(
    "argv, code",
    [
        (["check", model("elementary")], 0),
        (["check", model("broken")], 1),
        (["pmf", model("elementary"), "--pairs", "X3"], 0),
        (["configs", model("minimal")], 0),
        (["marginalize", model("classicable-uniform"), "--keep", "X1"], 0),
        (["kappa", model("kappa-one-shot")], 0),
        (["converge", model("kappa-random")], 0),
        (["converge", model("kappa-random"), "--max-n", "3"], 1),
        (["undo-check", model("cnot-undo")], 0),
        (["separation-check", model("separation")], 0),
        (["separation-check", model("separation-violated")], 1),
        (["fr", "--report"], 0),
        (["fr"], 0),
        (["check", "/nonexistent.model.json"], 2),
        (["kappa", model("minimal")], 2),
        (["nosuch"], 2),
        ([], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert call(*argv)[0] == code


def test_bad_model_file_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.model.json"
    p.write_text("{\n  \"format\": 1,\n")
    assert call("check", str(p))[0] == 2
    assert "line" in capsys.readouterr().err


def test_check_reports_failed_invariant():
    code, text = call("check", model("broken"))
    assert code == 1
    assert text.startswith("FAILED invariant: hermitian")


def test_fr_text():
    code, text = call("fr")
    assert code == 0
    assert text.splitlines()[0] == "Pr = 1/12"


def test_fr_report_json_agrees_with_text():
    _, text = call("fr", "--report")
    _, js = call("fr", "--report", "--json")
    d = json.loads(js)
    assert d["stop_probability"]["fraction"] == "1/12"
    assert f"Pr = {d['stop_probability']['fraction']}" in text
    assert d["pr_Rb_1"]["text"] in text
    assert all(i["holds"] for i in d["implications"])
    assert d["joint_classicability"]["jointly_classicable"] is False


@pytest.mark.parametrize("cmd", ["check", "kappa", "converge", "undo-check", "separation-check"])
def test_json_output_parses(cmd):
    name = {"check": "elementary", "kappa": "kappa-random", "converge": "kappa-random",
            "undo-check": "cnot-undo", "separation-check": "separation"}[cmd]
    code, js = call(cmd, model(name), "--json")
    assert code == 0
    assert isinstance(json.loads(js), dict)


def test_pmf_json_matches_text():
    _, text = call("pmf", model("elementary"), "--pairs", "X3")
    _, js = call("pmf", model("elementary"), "--pairs", "X3", "--json")
    for row in json.loads(js)["rows"]:
        assert row["text"] in text
    assert sum(r["probability"] for r in json.loads(js)["rows"]) == pytest.approx(1, abs=1e-12)


def test_tolerance_from_environment(monkeypatch):
    monkeypatch.setenv("QMF_TOL", "1e-3")
    code, text = call("check", model("broken"))
    assert code == 1 and "> 0.001" in text
    monkeypatch.setenv("QMF_TOL", "abc")
    assert call("check", model("elementary"))[0] == 2


def test_report_is_byte_identical_across_processes():
    cmd = [sys.executable, "-m", "fgqmf.cli", "fr", "--report"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and b"Pr = 1/12" in a
