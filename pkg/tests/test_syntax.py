import itertools
import json

import pytest
from hypothesis import given, settings

from dillproc.syntax import (Atom, Bang, Lolli, One, ParseError, Sequent, State, Tensor, Top,
                             With, canonicalize, compose, from_json, parse_formula,
                             parse_sequent, parse_state, partitions, render, size, state_size,
                             tensor_of, to_json)
from oracles import brute_partitions
from strategies import formulas, states

a, b, c = Atom("a"), Atom("b"), Atom("c")


def test_parse_examples():
    assert parse_formula("a") == a
    assert parse_formula("a -o (b & 1)") == Lolli(a, With(b, One()))
    assert parse_formula("!a * top") == Tensor(Bang(a), Top())


@pytest.mark.parametrize("text,tree", [
    ("a * b & c", With(Tensor(a, b), c)),
    ("a & b * c", With(a, Tensor(b, c))),
    ("a * b * c", Tensor(a, Tensor(b, c))),
    ("a & b & c", With(a, With(b, c))),
    ("a -o b -o c", Lolli(a, Lolli(b, c))),
    ("a -o b * c", Lolli(a, Tensor(b, c))),
    ("!a * b", Tensor(Bang(a), b)),
    ("!(a * b)", Bang(Tensor(a, b))),
    ("!!a", Bang(Bang(a))),
    ("(a * b) * c", Tensor(Tensor(a, b), c)),
])
def test_precedence(text, tree):
    assert parse_formula(text) == tree
    assert parse_formula(render(tree)) == tree


def test_parse_state_examples():
    assert parse_state(". ; a, a") == State([], [a, a])
    assert parse_state("a ; .") == State([a], [])
    assert parse_state("a, a ; b") == State([a], [b])


def test_parse_sequent():
    s = parse_sequent("a ; b, a -o c |- c")
    assert s == Sequent([a], [b, Lolli(a, c)], c)
    assert parse_sequent(". ; . |- 1").goal == One()


@pytest.mark.parametrize("text", ["a -o", "(a", "a b", "a * * b", "(a * b) -o c", "A", "a ;",
                                  "; a", "a ; b |-"])
def test_parse_errors(text):
    with pytest.raises(ParseError) as err:
        if ";" in text:
            if "|-" in text:
                parse_sequent(text)
            else:
                parse_state(text)
        else:
            parse_formula(text)
    assert err.value.line == 1
    assert err.value.column >= 1


def test_error_position_and_expected():
    with pytest.raises(ParseError) as err:
        parse_formula("a *\n  )")
    assert (err.value.line, err.value.column) == (2, 3)
    assert "'('" in err.value.expected


def test_lolli_needs_atom():
    with pytest.raises(ParseError, match="atom"):
        parse_formula("1 -o a")


def test_render_examples():
    assert render(a) == "a"
    assert render(Tensor(a, Tensor(b, c))) == "a * b * c"
    assert render(Tensor(Tensor(a, b), c)) == "(a * b) * c"
    assert render(State([a], [b, b])) == "a ; b, b"
    assert render(State()) == ". ; ."


@given(formulas)
def test_formula_roundtrip(f):
    assert parse_formula(render(f)) == f
    assert from_json(json.loads(json.dumps(to_json(f)))) == f


@given(states())
def test_state_roundtrip(s):
    assert parse_state(render(s)) == s
    assert from_json(to_json(s)) == s


def test_json_shape():
    assert to_json(Tensor(a, b)) == {"t": "tensor", "l": {"t": "atom", "n": "a"},
                                     "r": {"t": "atom", "n": "b"}}


def test_size():
    assert size(a) == 1
    assert size(Lolli(a, Tensor(b, One()))) == 5
    assert state_size(State([a], [b, Top()])) == 4


def test_canonicalize_examples():
    assert canonicalize(([a, a], [b])) == State([a], [b])
    assert canonicalize(([], [b, a])).delta == (a, b)


@given(states(), states())
def test_canonicalize_congruences(s, t):
    assert canonicalize(canonicalize(s)) == canonicalize(s)
    # commutativity of both zones and idempotence of gamma
    swapped = (list(reversed(s.gamma)) + list(s.gamma), list(reversed(s.delta)))
    assert canonicalize(swapped) == s
    assert compose(s, t) == compose(t, s)
    assert compose(s, State()) == s
    assert compose(s, compose(t, s)) == compose(compose(s, t), s)


def test_compose_example():
    assert compose(State([a], [b]), State([a], [c])) == State([a], [b, c])


def test_partitions_examples():
    assert set(partitions(State([], [a]))) == {(State([], [a]), State()), (State(), State([], [a]))}
    assert set(partitions(State([a], []))) == {
        (State(), State([a], [])), (State([a], []), State()), (State([a], []), State([a], []))}
    assert len(partitions(State([], [a, b]))) == 4


def _small_states():
    pool = [a, b, Bang(a), Tensor(a, b)]
    for ng in range(3):
        for gamma in itertools.combinations(pool, ng):
            for nd in range(5 - ng):
                for delta in itertools.combinations_with_replacement(pool, nd):
                    yield State(gamma, delta)


def test_partitions_match_brute_force():
    for s in _small_states():
        got = partitions(s)
        assert len(got) == len(set(got))
        assert set(got) == brute_partitions(s), render(s)


@settings(max_examples=50)
@given(states(max_gamma=2, max_delta=3))
def test_partitions_compose_back(s):
    for p, q in partitions(s):
        assert compose(p, q) == s


def test_tensor_of():
    assert tensor_of(State()) == One()
    assert tensor_of(State([a], [b])) == Tensor(Bang(a), b)
    assert tensor_of(State([], [a, a])) == Tensor(a, a)


def test_states_immutable():
    s = State([], [a])
    with pytest.raises(AttributeError):
        s.delta = ()
