import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dillproc.harness import EnumSpec, enumerate_formulas, enumerate_states
from dillproc.prover import (Derivation, SearchBudget, admissibility_suite, check_derivation,
                             logical_preorder, prove)
from dillproc.semantics import reductions
from dillproc.syntax import (Atom, Bang, One, Sequent, State, Tensor, Top, With, parse_sequent,
                             parse_state, render)
from oracles import bang_free, naive_provable
from strategies import small_formulas

a, b = Atom("a"), Atom("b")


def proved(text, budget=None):
    res = prove(parse_sequent(text), budget)
    if res.proved:
        assert check_derivation(res.derivation), text
    return res


@pytest.mark.parametrize("text", [
    ". ; a |- a", "b ; a |- a", "a, b * 1 ; a |- a",
    ". ; . |- a -o a",
    ". ; a * b |- b * a",
    ". ; a & b |- a",
    ". ; a, a -o b |- b",
    ". ; !a |- a * a",
    "a ; . |- !a",
    ". ; a |- top",
    ". ; 1 |- 1",
    ". ; a, b |- a * b * top",
    ". ; a -o b |- a -o b",
])
def test_proved(text):
    assert proved(text).proved


@pytest.mark.parametrize("text", [
    ". ; a |- b", ". ; . |- !a", ". ; a |- !a", ". ; a, a |- a", ". ; . |- a",
    ". ; a & b |- a * b", ". ; top |- a",
])
def test_refuted(text):
    assert proved(text).refuted


def test_unknown_only_with_truncation():
    # an unrestricted a*a keeps producing pairs; the clone cap runs out
    res = prove(parse_sequent("a * a ; . |- top * !a"), SearchBudget(max_clones_per_branch=1))
    assert not res.proved
    if res.unknown:
        assert res.truncated


def test_derivation_json_roundtrip():
    res = proved(". ; a * b |- b * a")
    blob = json.dumps(res.derivation.to_json())
    back = Derivation.from_json(json.loads(blob))
    assert back == res.derivation
    assert check_derivation(back)


def test_determinism():
    s = parse_sequent("a -o b ; a, a |- b * b")
    r1, r2 = prove(s), prove(s)
    assert r1.status == r2.status == "proved"
    assert r1.derivation == r2.derivation


def _seq(text):
    return parse_sequent(text)


def test_check_init():
    assert check_derivation(Derivation("init", _seq("a ; a |- a")))
    bad = check_derivation(Derivation("init", _seq(". ; a, b |- a")))
    assert not bad and "exactly" in bad.reason


def test_check_tensor_right():
    d = Derivation("*R", _seq(". ; a, b |- a * b"),
                   (Derivation("init", _seq(". ; a |- a")), Derivation("init", _seq(". ; b |- b"))))
    assert check_derivation(d)
    wrong = Derivation("*R", _seq(". ; a, b |- a * b"),
                       (Derivation("init", _seq(". ; a |- a")), Derivation("init", _seq(". ; a |- a"))))
    assert not check_derivation(wrong)


def test_check_one_left_rejects_kept_one():
    d = Derivation("1L", _seq(". ; 1, a |- a"), (Derivation("init", _seq(". ; a |- a")),))
    assert check_derivation(d)
    kept = Derivation("1L", _seq(". ; 1, a |- a"), (Derivation("init", _seq(". ; 1, a |- a")),))
    res = check_derivation(kept)
    assert not res
    assert res.path == ()


def test_check_reports_path():
    d = Derivation("*R", _seq(". ; a, b |- a * b"),
                   (Derivation("init", _seq(". ; a |- a")), Derivation("1R", _seq(". ; b |- b"))))
    res = check_derivation(d)
    assert not res and res.path == (1,)


def test_check_rejects_unknown_rule_and_bad_clone():
    assert not check_derivation(Derivation("cut", _seq(". ; a |- a")))
    clone = Derivation("clone", _seq("a ; . |- a"), (Derivation("init", _seq("a ; a |- a")),))
    assert check_derivation(clone)
    fake = Derivation("clone", _seq("b ; . |- a"), (Derivation("init", _seq("b ; a |- a")),))
    assert not check_derivation(fake)


def test_logical_examples():
    A = parse_state
    assert logical_preorder(A(". ; a"), A(". ; a & b")).holds
    assert logical_preorder(A(". ; a & b"), A(". ; a")).fails
    assert logical_preorder(A(". ; a"), A(". ; !a")).holds
    assert logical_preorder(A(". ; !a"), A(". ; a")).fails
    for s in enumerate_states(EnumSpec(atoms=["a"], max_formula_size=3, max_gamma=1, max_delta=2)):
        assert logical_preorder(State([], [Top()]), s).holds


def test_logical_is_harmony():
    s = parse_state("b ; a, a -o b")
    for goal in [b, a, Tensor(b, b), With(b, One())]:
        assert logical_preorder(State([], [goal]), s).status == {
            "proved": "holds", "refuted": "fails", "unknown": "unknown"}[prove(Sequent(s.gamma, s.delta, goal)).status]


# the naive prover decides the bang-free, gamma-free fragment exactly, since
# every rule there shrinks the sequent


def _bang_free_corpus():
    spec = EnumSpec(atoms=["a", "b"], max_formula_size=3, max_gamma=0, max_delta=2,
                    max_state_size=4)
    states = [s for s in enumerate_states(spec) if all(bang_free(f) for f in s.delta)]
    goals = [f for f in enumerate_formulas(EnumSpec(atoms=["a", "b"], max_formula_size=3,
                                                    max_gamma=0, max_delta=0)) if bang_free(f)]
    return states, goals


def test_agrees_with_naive_prover_bang_free():
    states, goals = _bang_free_corpus()
    checked = 0
    for s in states:
        for g in goals:
            expect = naive_provable((), s.delta, g, 20)
            res = prove(Sequent((), s.delta, g))
            assert res.status == ("proved" if expect else "refuted"), render(Sequent((), s.delta, g))
            checked += 1
    assert checked > 1000


@settings(max_examples=60, deadline=None)
@given(st.lists(small_formulas, max_size=1), st.lists(small_formulas, max_size=2), small_formulas)
def test_never_refutes_what_naive_search_proves(gamma, delta, goal):
    s = Sequent(gamma, delta, goal)
    res = prove(s)
    if res.proved:
        assert check_derivation(res.derivation)
    if naive_provable(gamma, delta, goal, 7):
        assert not res.refuted, render(s)
    elif not gamma and all(bang_free(f) for f in delta) and bang_free(goal):
        assert not res.proved, render(s)


def test_silent_steps_keep_provability():
    spec = EnumSpec(atoms=["a", "b"], max_formula_size=3, max_gamma=1, max_delta=2,
                    max_state_size=4)
    goals = list(enumerate_formulas(EnumSpec(atoms=["a", "b"], max_formula_size=2,
                                             max_gamma=0, max_delta=0)))
    for s1 in enumerate_states(spec):
        for s2 in reductions(s1):
            for g in goals:
                if prove(Sequent(s2.gamma, s2.delta, g)).proved:
                    assert not prove(Sequent(s1.gamma, s1.delta, g)).refuted


def test_promoting_gamma_is_equivalent():
    spec = EnumSpec(atoms=["a"], max_formula_size=3, max_gamma=1, max_delta=2, max_state_size=5)
    for s in enumerate_states(spec):
        flat = State([], [Bang(g) for g in s.gamma] + list(s.delta))
        assert not logical_preorder(s, flat).fails
        assert not logical_preorder(flat, s).fails


def test_admissibility_examples():
    assert proved(". ; a & b |- a & b").proved
    for c in ["a", "1", "a * 1", "top"]:
        direct = proved(f". ; . |- {c}").status
        assert proved(f". ; 1 |- {c}").status == direct


def test_identity_exhaustive_size_4():
    rep = admissibility_suite(4, atoms=("a", "b"), context_size=0)
    assert rep["identity"]["checked"] > 100
    assert rep["identity"]["proved"] == rep["identity"]["checked"]


def test_cut_never_refuted():
    rep = admissibility_suite(2, atoms=("a", "b"), context_size=2)
    assert rep["ok"], rep["cut"]["failures"][:3]
    assert rep["cut"]["checked"] > 100


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(max_depth=0)
