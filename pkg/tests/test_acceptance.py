"""Acceptance criteria, one test each.

Every test prints a single ``[criterion N] PASS|FAIL ...`` line (visible
even under output capture) before asserting. Run directly with
``python tests/test_acceptance.py`` for the summary alone.
"""

import json
import subprocess
import sys
import time


from dillproc.harness import (crosscheck, enumerate_states, harmony_check, load_preset,
                              metamorphic_suite, tau_reduction_coincidence)
from dillproc.preorders import SimConfig, simulate
from dillproc.prover import SearchBudget, logical_preorder
from dillproc.semantics import ExploreBudget
from dillproc.syntax import parse_state

_tiny = {}


def tiny_report():
    if "report" not in _tiny:
        spec, budgets, thresholds = load_preset("tiny")
        t0 = time.perf_counter()
        rep = crosscheck(spec, budgets, validate=True)
        _tiny.update(report=rep, seconds=time.perf_counter() - t0, thresholds=thresholds)
    return _tiny["report"], _tiny["seconds"], _tiny["thresholds"]


def announce(request, n, ok, detail):
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}  {detail}"
    capman = request.config.pluginmanager.getplugin("capturemanager") if request else None
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


def test_criterion_1_coincidence(request):
    rep, secs, _ = tiny_report()
    ok = not rep.disagreements and rep.unknown_rate <= 0.2 and secs < 300
    announce(request, 1, ok, f"tiny preset: {rep.pairs} pairs, {len(rep.disagreements)} "
             f"disagreements, unknown rate {rep.unknown_rate:.1%}, {secs:.1f}s")
    assert ok


def test_criterion_2_harmony(request):
    t0 = time.perf_counter()
    res = harmony_check(atoms=("a", "b"), max_size=6)
    secs = time.perf_counter() - t0
    ok = res["ok"] and not res["contradictions"] and secs < 120
    announce(request, 2, ok, f"harmony, 2 atoms, size <= 6: {res['checked']} sequents, "
             f"{len(res['contradictions'])} contradictions, {res['unknown']} unknown, {secs:.1f}s")
    assert ok


def test_criterion_3_tau_reduction(request):
    t0 = time.perf_counter()
    res = tau_reduction_coincidence(atoms=("a", "b"), max_size=6, max_clones=2)
    secs = time.perf_counter() - t0
    bad = len(res["step_mismatches"]) + len(res["layer_mismatches"])
    ok = res["ok"] and bad == 0 and secs < 60
    announce(request, 3, ok, f"tau vs reduction, 2 atoms, size <= 6: {res['states']} states, "
             f"{bad} mismatches, {secs:.1f}s")
    assert ok


def test_criterion_4_lemma_suite(request):
    spec, budgets, _ = load_preset("tiny")
    t0 = time.perf_counter()
    res = metamorphic_suite(spec, budgets)
    secs = time.perf_counter() - t0
    fails = {c["name"]: len(c["violations"]) for c in res["checks"] if c["violations"]}
    names = {c["name"] for c in res["checks"]}
    needed = {"weakening/simulation", "tau-steps-go-down/simulation", "promote-gamma/logical",
              "promote-gamma/simulation", "identity", "cut"}
    ok = res["ok"] and needed <= names and secs < 300
    checked = sum(c["checked"] for c in res["checks"])
    announce(request, 4, ok, f"lemma suite on tiny: {len(res['checks'])} checks, {checked} "
             f"instances, violations {fails or 0}, {secs:.1f}s")
    assert ok


KNOWN = [
    (". ; a", ". ; a & b", "holds"),
    (". ; a & b", ". ; a", "fails"),
    (". ; a", ". ; !a", "holds"),
    (". ; !a", ". ; a", "fails"),
    (". ; 1", ". ; .", "holds"),
    (". ; .", ". ; 1", "holds"),
]


def test_criterion_5_known_verdicts(request):
    search = SearchBudget(max_depth=8)
    sim = SimConfig(explore=ExploreBudget(max_tau_depth=8))
    spec, _, _ = load_preset("tiny")
    rows = [(parse_state(l), parse_state(r), want) for l, r, want in KNOWN]
    top = parse_state(". ; top")
    rows += [(top, s, "holds") for s in enumerate_states(spec)]
    wrong = []
    for s1, s2, want in rows:
        got = (logical_preorder(s1, s2, search).status, simulate(s1, s2, sim).status)
        if got != (want, want):
            wrong.append((str(s1), str(s2), got))
    ok = not wrong
    announce(request, 5, ok, f"known verdict table: {len(rows)} rows, both checkers agree "
             f"with the table on {len(rows) - len(wrong)}" + (f"; first miss {wrong[0]}" if wrong else ""))
    assert ok


def test_criterion_6_certificates(request):
    rep, _, _ = tiny_report()
    v = rep.validation
    ok = v["witnesses"] == v["witnesses_ok"] and v["refutations"] == v["refutations_ok"] \
        and v["witnesses"] + v["refutations"] > 0
    announce(request, 6, ok, f"witnesses valid {v['witnesses_ok']}/{v['witnesses']}, "
             f"refutations replayed {v['refutations_ok']}/{v['refutations']}")
    assert ok


COMMANDS = [
    ["prove", ". ; a * b |- b * a"],
    ["prove", ". ; . |- !a"],
    ["step", ". ; a & b, 1"],
    ["lts", "a ; .", "--all"],
    ["barbs", ". ; a, a -o b"],
    ["sim", ". ; a & b", ". ; a", "--certify"],
    ["sim", ". ; a", ". ; !a"],
    ["ctx", ". ; !a", ". ; a"],
    ["logical", ". ; a", ". ; a & b"],
    ["crosscheck", "--preset", "tiny"],
    ["suite", "--check", "lemmas"],
]


def _cli(argv):
    # separate processes, so hash randomization differs between the runs
    res = subprocess.run([sys.executable, "-m", "dillproc", *argv, "--json"],
                         capture_output=True)
    return res.returncode, res.stdout


def test_criterion_7_determinism(request):
    differing = []
    for argv in COMMANDS:
        first, second = _cli(argv), _cli(argv)
        if first != second or not json.loads(first[1]):
            differing.append(" ".join(argv))
    ok = not differing
    announce(request, 7, ok, f"{len(COMMANDS)} commands run twice in fresh processes, "
             f"{len(differing)} with differing JSON" + (f": {differing}" if differing else ""))
    assert ok


if __name__ == "__main__":
    results = []
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn(None)
                results.append(True)
            except AssertionError:
                results.append(False)
    sys.exit(0 if all(results) else 1)
