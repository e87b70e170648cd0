import json
import os
import subprocess
import sys

import pytest

from dillproc.cli import run

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def call_json(capsys, *argv):
    code, out, err = call(capsys, *argv, "--json")
    return code, json.loads(out)


def test_prove_identity(capsys):
    code, out, _ = call(capsys, "prove", ". ; . |- a -o a")
    assert code == 0
    assert out.splitlines()[0] == "proved"
    assert "[-oR]" in out and "[init]" in out


@pytest.mark.parametrize("sequent,code", [
    (". ; a * b |- b * a", 0), (". ; a |- b", 1), (". ; . |- !a", 1), ("b ; a |- a", 0)])
def test_prove_exit_codes(capsys, sequent, code):
    assert call(capsys, "prove", sequent)[0] == code


def test_prove_unknown(capsys):
    code, obj = call_json(capsys, "prove", "a * a ; . |- top * !a", "--budget-clones", "1")
    assert code in (1, 2)
    if code == 2:
        assert obj["status"] == "unknown" and obj["truncated"]


def test_check_deriv_roundtrip(capsys, tmp_path):
    code, out, _ = call(capsys, "prove", ". ; a * b |- b * a", "--json")
    f = tmp_path / "proof.json"
    f.write_text(out)
    assert call(capsys, "check-deriv", str(f))[0] == 0
    obj = json.loads(out)
    obj["derivation"]["rule"] = "1L"
    f.write_text(json.dumps(obj))
    code, out, _ = call(capsys, "check-deriv", str(f))
    assert code == 1 and out.startswith("invalid")


def test_check_deriv_bad_file(capsys, tmp_path):
    f = tmp_path / "junk.json"
    f.write_text("{}")
    assert call(capsys, "check-deriv", str(f))[0] == 64
    assert call(capsys, "check-deriv", str(tmp_path / "missing.json"))[0] == 64


def test_step(capsys):
    code, obj = call_json(capsys, "step", ". ; a & b, 1")
    assert code == 0
    assert sorted(r["to"] for r in obj["reductions"]) == [". ; a & b", ". ; a, 1", ". ; b, 1"]
    code, out, _ = call(capsys, "step", ". ; top")
    assert "(no reductions)" in out


def test_lts(capsys, tmp_path):
    code, obj = call_json(capsys, "lts", ". ; a, a -o b")
    assert code == 0
    assert {(e["label"], e["to"]) for e in obj["edges"]} == {
        ("tau", ". ; b"), ("!a", ". ; a -o b"), ("?a", ". ; a, b")}
    dot = tmp_path / "g.dot"
    call(capsys, "lts", "a ; .", "--dot", str(dot), "--budget-clones", "1")
    with open(os.path.join(GOLDEN, "clone.dot"), encoding="utf-8") as fh:
        assert dot.read_text(encoding="utf-8") == fh.read()
    code, obj = call_json(capsys, "lts", "a ; .", "--all", "--budget-clones", "1")
    assert obj["truncated"] and len(obj["states"]) == 2


def test_barbs(capsys):
    code, obj = call_json(capsys, "barbs", ". ; a, a -o b")
    assert (obj["strong"], obj["weak"]) == (["a"], ["a", "b"])
    code, obj = call_json(capsys, "barbs", "a ; .")
    assert (obj["strong"], obj["weak"]) == ([], ["a"])


def test_sim_fails_with_trace(capsys):
    code, out, _ = call(capsys, "sim", ". ; a & b", ". ; a")
    assert code == 1
    assert "refutation" in out and "!b" in out


@pytest.mark.parametrize("left,right,code", [
    (". ; a", ". ; a & b", 0), (". ; a", ". ; !a", 0), (". ; !a", ". ; a", 1),
    (". ; 1", ". ; .", 0), (". ; .", ". ; 1", 0), (". ; a * b", ". ; b * a", 0)])
def test_sim_and_logical_exit_codes(capsys, left, right, code):
    assert call(capsys, "sim", left, right, "--certify")[0] == code
    assert call(capsys, "logical", left, right)[0] == code
    assert call(capsys, "ctx", left, right)[0] == code


def test_sim_certify_json(capsys):
    code, obj = call_json(capsys, "sim", ". ; a & b", ". ; a", "--certify")
    assert code == 1 and obj["certificate"]["ok"]
    assert obj["version"] == 1 and obj["verdict"] == "fails"


def test_ctx_with_explicit_contexts(capsys):
    code, obj = call_json(capsys, "ctx", ". ; a -o b", ". ; top", "--context", ". ; a")
    assert code == 1 and obj["trace"]["context"] == ". ; a"
    code, obj = call_json(capsys, "ctx", ". ; a", ". ; a", "--context", ". ; .")
    assert code == 2


def test_crosscheck_tiny(capsys, tmp_path):
    code, obj = call_json(capsys, "crosscheck", "--preset", "tiny",
                          "--write-replays", str(tmp_path / "r"))
    assert code == 0
    assert obj["disagreements"] == [] and obj["ok"]
    assert not list((tmp_path / "r").iterdir())


def test_crosscheck_replay(capsys, tmp_path):
    rec = tmp_path / "pair.json"
    rec.write_text(json.dumps({
        "left_json": {"t": "state", "gamma": [], "delta": [{"t": "atom", "n": "a"}]},
        "right_json": {"t": "state", "gamma": [], "delta": [
            {"t": "with", "l": {"t": "atom", "n": "a"}, "r": {"t": "atom", "n": "b"}}]},
        "budgets": {}}))
    code, obj = call_json(capsys, "crosscheck", "--replay", str(rec))
    assert code == 0
    assert (obj["logical"], obj["simulation"]) == ("holds", "holds")


def test_suite_lemmas(capsys):
    code, out, _ = call(capsys, "suite", "--check", "lemmas")
    assert code == 0 and "all checks passed" in out


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["prove"], ["prove", ". ; a |-"], ["sim", ". ; a"],
    ["sim", "a ;; b", ". ; a"], ["crosscheck"], ["crosscheck", "--preset", "nope"],
    ["prove", ". ; a |- a", "--budget-depth", "0"], ["prove", ". ; a |- a", "--budget-depth", "x"],
    ["step", ". ; a", "--bogus"],
])
def test_usage_errors(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 64
    assert err


def test_usage_error_names_flag(capsys):
    _, _, err = call(capsys, "step", ". ; a", "--bogus")
    assert "--bogus" in err
    _, _, err = call(capsys, "prove", ". ; a |- a", "--budget-depth", "0")
    assert "--budget-depth" in err
    _, _, err = call(capsys, "prove", ". ; a |-")
    assert "1:" in err


def test_global_flags_before_command(capsys):
    code, out, _ = call(capsys, "--json", "--budget-depth", "5", "prove", ". ; a |- a")
    obj = json.loads(out)
    assert code == 0 and obj["budget"]["max_depth"] == 5


@pytest.mark.parametrize("argv", [
    ["prove", ". ; a -o b, a |- b"], ["sim", ". ; a & b", ". ; a"], ["lts", "a ; .", "--all"],
    ["ctx", ". ; !a", ". ; a"], ["crosscheck", "--preset", "tiny"],
])
def test_json_is_byte_identical(capsys, argv):
    _, first, _ = call(capsys, *argv, "--json")
    _, second, _ = call(capsys, *argv, "--json")
    assert first == second


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dillproc", "prove", ". ; . |- a -o a"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("proved")
