"""Formulas, process states and sequents.

Formulas follow the grammar ``a | 1 | A * B | top | A & B | a -o B | !A``.
A :class:`State` pairs an unrestricted context (a set) with a linear context
(a multiset); both are kept in canonical sorted form so that states which are
structurally congruent compare equal.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter
from typing import Iterable, Iterator, Union

__all__ = [
    "Formula", "Atom", "One", "Tensor", "Top", "With", "Lolli", "Bang",
    "ONE", "TOP", "State", "Sequent", "ParseError",
    "parse_formula", "parse_state", "parse_sequent", "render",
    "canonicalize", "compose", "partitions", "bag_splits", "atoms_of", "tensor_of", "size", "state_size",
    "to_json", "from_json",
]


class Formula:
    """Immutable formula node.

    Equality, hashing and ordering all go through ``key``: a nested tuple
    whose first component is the constructor tag (grammar order) so that
    sorting gives a fixed total order on formulas.
    """

    __slots__ = ("key", "_hash")
    tag = -1

    def _init_key(self, key: tuple) -> None:
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("formulas are immutable")

    def __eq__(self, other):
        return isinstance(other, Formula) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"<{type(self).__name__} {render(self)}>"

    def __str__(self):
        return render(self)


class Atom(Formula):
    __slots__ = ("name",)
    tag = 0

    def __init__(self, name: str):
        if not isinstance(name, str) or not _IDENT.fullmatch(name) or name == "top":
            raise ValueError(f"invalid atom name {name!r}")
        object.__setattr__(self, "name", name)
        self._init_key((0, name))


class One(Formula):
    __slots__ = ()
    tag = 1

    def __init__(self):
        self._init_key((1,))


class Tensor(Formula):
    __slots__ = ("left", "right")
    tag = 2

    def __init__(self, left: Formula, right: Formula):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        self._init_key((2, left.key, right.key))


class Top(Formula):
    __slots__ = ()
    tag = 3

    def __init__(self):
        self._init_key((3,))


class With(Formula):
    __slots__ = ("left", "right")
    tag = 4

    def __init__(self, left: Formula, right: Formula):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        self._init_key((4, left.key, right.key))


class Lolli(Formula):
    """``a -o B``; the antecedent is restricted to an atom."""

    __slots__ = ("atom", "body")
    tag = 5

    def __init__(self, atom: Atom, body: Formula):
        if not isinstance(atom, Atom):
            raise TypeError("the antecedent of -o must be an atom")
        object.__setattr__(self, "atom", atom)
        object.__setattr__(self, "body", body)
        self._init_key((5, atom.key, body.key))


class Bang(Formula):
    __slots__ = ("body",)
    tag = 6

    def __init__(self, body: Formula):
        object.__setattr__(self, "body", body)
        self._init_key((6, body.key))


ONE = One()
TOP = Top()


def size(f: Formula) -> int:
    """Node count; the atom under ``-o`` counts as a node."""
    if isinstance(f, (Tensor, With)):
        return 1 + size(f.left) + size(f.right)
    if isinstance(f, Lolli):
        return 2 + size(f.body)
    if isinstance(f, Bang):
        return 1 + size(f.body)
    return 1


def atoms_of(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, (Tensor, With)):
        return atoms_of(f.left) | atoms_of(f.right)
    if isinstance(f, Lolli):
        return {f.atom.name} | atoms_of(f.body)
    if isinstance(f, Bang):
        return atoms_of(f.body)
    return set()


# --------------------------------------------------------------------------
# states and sequents


def _sorted_set(items: Iterable[Formula]) -> tuple:
    return tuple(sorted(set(items), key=_fkey))


def _sorted_bag(items: Iterable[Formula]) -> tuple:
    return tuple(sorted(items, key=_fkey))


def _fkey(f: Formula) -> tuple:
    return f.key


class State:
    """A process state ``(gamma ; delta)``, always in canonical form."""

    __slots__ = ("gamma", "delta", "key", "_hash")

    def __init__(self, gamma: Iterable[Formula] = (), delta: Iterable[Formula] = ()):
        g = _sorted_set(gamma)
        d = _sorted_bag(delta)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "delta", d)
        key = (tuple(f.key for f in g), tuple(f.key for f in d))
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("states are immutable")

    def __eq__(self, other):
        return isinstance(other, State) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"State({render(self)!r})"

    def __str__(self):
        return render(self)

    def add(self, *delta: Formula) -> "State":
        return State(self.gamma, self.delta + delta)


class Sequent:
    __slots__ = ("gamma", "delta", "goal", "key", "_hash")

    def __init__(self, gamma: Iterable[Formula], delta: Iterable[Formula], goal: Formula):
        g = _sorted_set(gamma)
        d = _sorted_bag(delta)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "goal", goal)
        key = (tuple(f.key for f in g), tuple(f.key for f in d), goal.key)
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("sequents are immutable")

    def __eq__(self, other):
        return isinstance(other, Sequent) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Sequent({render(self)!r})"

    def __str__(self):
        return render(self)

    @property
    def state(self) -> State:
        return State(self.gamma, self.delta)


def state_size(s: State) -> int:
    """Size of ``s`` read as the formula ``!G1 * ... * D1 * ...`` minus the
    tensor nodes: every unrestricted formula costs one extra node for its bang."""
    return sum(size(g) + 1 for g in s.gamma) + sum(size(d) for d in s.delta)


def canonicalize(s: Union[State, tuple]) -> State:
    """Canonical representative of a state, or of a raw ``(gamma, delta)`` pair
    given as arbitrary iterables (duplicates in gamma are merged)."""
    if isinstance(s, State):
        return State(s.gamma, s.delta)
    gamma, delta = s
    return State(gamma, delta)


def compose(s1: State, s2: State) -> State:
    return State(s1.gamma + s2.gamma, s1.delta + s2.delta)


def bag_splits(bag: tuple) -> Iterator[tuple[tuple, tuple]]:
    """Every split of a multiset into (left, right), one per distinct left part."""
    counts = Counter(bag)
    elems = sorted(counts, key=_fkey)
    for picks in itertools.product(*(range(counts[e] + 1) for e in elems)):
        left, right = [], []
        for e, k in zip(elems, picks):
            left.extend([e] * k)
            right.extend([e] * (counts[e] - k))
        yield tuple(left), tuple(right)


def partitions(s: State) -> list[tuple[State, State]]:
    """All pairs ``(p, q)`` with ``compose(p, q) == s``.

    Each unrestricted formula goes left, right or to both halves; each
    linear occurrence goes to exactly one half.
    """
    seen = set()
    out = []
    for where in itertools.product((0, 1, 2), repeat=len(s.gamma)):
        gl = [g for g, w in zip(s.gamma, where) if w != 1]
        gr = [g for g, w in zip(s.gamma, where) if w != 0]
        for dl, dr in bag_splits(s.delta):
            pair = (State(gl, dl), State(gr, dr))
            if pair not in seen:
                seen.add(pair)
                out.append(pair)
    return out


def tensor_of(s: State) -> Formula:
    """``!G1 * ... * !Gn * D1 * ... * Dm`` associated to the right; ``1`` if empty."""
    items = [Bang(g) for g in s.gamma] + list(s.delta)
    if not items:
        return ONE
    out = items[-1]
    for f in reversed(items[:-1]):
        out = Tensor(f, out)
    return out


# --------------------------------------------------------------------------
# concrete syntax

_IDENT = re.compile(r"[a-z][A-Za-z0-9_']*")
_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<turnstile>\|-)
  | (?P<lolli>-o\b)
  | (?P<ident>[a-z][A-Za-z0-9_']*)
  | (?P<one>1)
  | (?P<punct>[()*&!,;.])
""", re.VERBOSE)

_PUNCT_NAMES = {"(": "'('", ")": "')'", "*": "'*'", "&": "'&'", "!": "'!'",
                ",": "','", ";": "';'", ".": "'.'"}


class ParseError(ValueError):
    """Syntax error; carries 1-based ``line``/``column`` and the expected tokens."""

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{column}: {message}{exp}")


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        val = m.group()
        if kind == "ws":
            for i, ch in enumerate(val):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            if kind == "ident" and val == "top":
                kind = "top"
            elif kind == "punct":
                kind = val
            toks.append((kind, val, line, pos - line_start + 1))
        pos = m.end()
    toks.append(("eof", "", line, pos - line_start + 1))
    return toks


_FORMULA_START = ("identifier", "'1'", "'top'", "'!'", "'('")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, val, line, col = self.toks[self.i]
        found = "end of input" if kind == "eof" else repr(val)
        raise ParseError(f"unexpected {found}", line, col, expected)

    def expect(self, kind: str, label: str):
        if self.peek() != kind:
            self.fail([label])
        return self.next()

    def formula(self) -> Formula:
        start = self.toks[self.i]
        left = self.with_()
        if self.peek() == "lolli":
            if not isinstance(left, Atom):
                raise ParseError("the left side of -o must be an atom", start[2], start[3])
            self.next()
            return Lolli(left, self.formula())
        return left

    def with_(self) -> Formula:
        left = self.tensor()
        if self.peek() == "&":
            self.next()
            return With(left, self.with_())
        return left

    def tensor(self) -> Formula:
        left = self.unary()
        if self.peek() == "*":
            self.next()
            return Tensor(left, self.tensor())
        return left

    def unary(self) -> Formula:
        if self.peek() == "!":
            self.next()
            return Bang(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind, val, _, _ = self.toks[self.i]
        if kind == "ident":
            self.next()
            return Atom(val)
        if kind == "one":
            self.next()
            return ONE
        if kind == "top":
            self.next()
            return TOP
        if kind == "(":
            self.next()
            f = self.formula()
            self.expect(")", "')'")
            return f
        self.fail(_FORMULA_START)

    def context(self) -> list[Formula]:
        if self.peek() == ".":
            self.next()
            return []
        items = [self.formula()]
        while self.peek() == ",":
            self.next()
            items.append(self.formula())
        return items

    def end(self):
        if self.peek() != "eof":
            self.fail(["end of input"])


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.peek() not in ("eof",):
        p.fail(["end of input", "'*'", "'&'", "'-o'"])
    return f


def _parse_contexts(p: _Parser):
    if p.peek() not in ("ident", "one", "top", "!", "(", "."):
        p.fail(_FORMULA_START + ("'.'",))
    gamma = p.context()
    if p.peek() != ";":
        p.fail(["';'", "','"])
    p.next()
    if p.peek() not in ("ident", "one", "top", "!", "(", "."):
        p.fail(_FORMULA_START + ("'.'",))
    delta = p.context()
    return gamma, delta


def parse_state(text: str) -> State:
    """Parse ``"G1, G2 ; D1, D2"``; ``.`` stands for an empty context."""
    p = _Parser(text)
    gamma, delta = _parse_contexts(p)
    if p.peek() != "eof":
        p.fail(["end of input", "','"])
    return State(gamma, delta)


def parse_sequent(text: str) -> Sequent:
    """Parse ``"G ; D |- C"``."""
    p = _Parser(text)
    gamma, delta = _parse_contexts(p)
    if p.peek() != "turnstile":
        p.fail(["'|-'", "','"])
    p.next()
    goal = p.formula()
    p.end()
    return Sequent(gamma, delta, goal)


def _render_formula(f: Formula, ctx: int = 0) -> str:
    # precedence: -o 1, & 2, * 3, ! 4, atoms 5
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, One):
        return "1"
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bang):
        s, prec = "!" + _render_formula(f.body, 4), 4
    elif isinstance(f, Tensor):
        s, prec = f"{_render_formula(f.left, 4)} * {_render_formula(f.right, 3)}", 3
    elif isinstance(f, With):
        s, prec = f"{_render_formula(f.left, 3)} & {_render_formula(f.right, 2)}", 2
    elif isinstance(f, Lolli):
        s, prec = f"{f.atom.name} -o {_render_formula(f.body, 1)}", 1
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({s})" if ctx > prec else s


def _render_context(items) -> str:
    return ", ".join(_render_formula(f) for f in items) if items else "."


def render(x) -> str:
    """Concrete syntax for a formula, state or sequent (minimal parentheses)."""
    if isinstance(x, Formula):
        return _render_formula(x)
    if isinstance(x, State):
        return f"{_render_context(x.gamma)} ; {_render_context(x.delta)}"
    if isinstance(x, Sequent):
        return f"{_render_context(x.gamma)} ; {_render_context(x.delta)} |- {_render_formula(x.goal)}"
    raise TypeError(f"cannot render {type(x).__name__}")


# --------------------------------------------------------------------------
# JSON trees

_BINARY = {"tensor": Tensor, "with": With}


def to_json(x):
    """Tagged-tree JSON value for a formula, state or sequent."""
    if isinstance(x, Atom):
        return {"t": "atom", "n": x.name}
    if isinstance(x, One):
        return {"t": "one"}
    if isinstance(x, Top):
        return {"t": "top"}
    if isinstance(x, Tensor):
        return {"t": "tensor", "l": to_json(x.left), "r": to_json(x.right)}
    if isinstance(x, With):
        return {"t": "with", "l": to_json(x.left), "r": to_json(x.right)}
    if isinstance(x, Lolli):
        return {"t": "lolli", "l": to_json(x.atom), "r": to_json(x.body)}
    if isinstance(x, Bang):
        return {"t": "bang", "a": to_json(x.body)}
    if isinstance(x, State):
        return {"t": "state", "gamma": [to_json(f) for f in x.gamma],
                "delta": [to_json(f) for f in x.delta]}
    if isinstance(x, Sequent):
        return {"t": "sequent", "gamma": [to_json(f) for f in x.gamma],
                "delta": [to_json(f) for f in x.delta], "goal": to_json(x.goal)}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def from_json(obj):
    t = obj["t"]
    if t == "atom":
        return Atom(obj["n"])
    if t == "one":
        return ONE
    if t == "top":
        return TOP
    if t in _BINARY:
        return _BINARY[t](from_json(obj["l"]), from_json(obj["r"]))
    if t == "lolli":
        return Lolli(from_json(obj["l"]), from_json(obj["r"]))
    if t == "bang":
        return Bang(from_json(obj["a"]))
    if t == "state":
        return State([from_json(f) for f in obj["gamma"]], [from_json(f) for f in obj["delta"]])
    if t == "sequent":
        return Sequent([from_json(f) for f in obj["gamma"]], [from_json(f) for f in obj["delta"]],
                       from_json(obj["goal"]))
    raise ValueError(f"unknown tag {t!r}")
