"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports the search code of the package; only the immutable
syntax classes are shared so results can be compared directly.
"""

import itertools
from collections import Counter
from functools import lru_cache

from dillproc.syntax import Atom, Bang, Lolli, One, State, Tensor, Top, With


def sub_bags(bag):
    """Every sub-multiset of ``bag`` (with repeats when elements repeat)."""
    bag = list(bag)
    for mask in itertools.product((0, 1), repeat=len(bag)):
        yield [f for f, m in zip(bag, mask) if m]


def brute_partitions(s):
    """All (p, q) whose composition is ``s``, found by trying every candidate."""
    out = set()
    gammas = [list(c) for n in range(len(s.gamma) + 1)
              for c in itertools.combinations(s.gamma, n)]
    for gl in gammas:
        for gr in gammas:
            if set(gl) | set(gr) != set(s.gamma):
                continue
            for dl in sub_bags(s.delta):
                rest = Counter(s.delta)
                rest.subtract(dl)
                p = State(gl, dl)
                q = State(gr, list(rest.elements()))
                if State(p.gamma + q.gamma, p.delta + q.delta) == s:
                    out.add((p, q))
    return out


# --------------------------------------------------------------------------
# a naive prover: every rule of the calculus, eager splitting, depth bound


def _remove(delta, i):
    return delta[:i] + delta[i + 1:]


def naive_provable(gamma, delta, goal, depth):
    """True when a derivation of height at most ``depth`` exists."""
    return _naive(frozenset(gamma), tuple(sorted(delta, key=lambda f: f.key)), goal, depth)


@lru_cache(maxsize=None)
def _naive(gamma, delta, goal, depth):
    if depth == 0:
        return False
    d = depth - 1

    def seq(g, dl, c):
        return _naive(frozenset(g), tuple(sorted(dl, key=lambda f: f.key)), c, d)

    # right rules
    if isinstance(goal, Top):
        return True
    if isinstance(goal, One) and not delta:
        return True
    if isinstance(goal, Atom) and delta == (goal,):
        return True
    if isinstance(goal, With) and seq(gamma, delta, goal.left) and seq(gamma, delta, goal.right):
        return True
    if isinstance(goal, Lolli) and seq(gamma, delta + (goal.atom,), goal.body):
        return True
    if isinstance(goal, Bang) and not delta and seq(gamma, (), goal.body):
        return True
    if isinstance(goal, Tensor):
        for left in set(map(tuple, sub_bags(delta))):
            rest = Counter(delta)
            rest.subtract(left)
            if seq(gamma, left, goal.left) and seq(gamma, list(rest.elements()), goal.right):
                return True
    # left rules
    for i, f in enumerate(delta):
        rest = _remove(delta, i)
        if isinstance(f, Tensor) and seq(gamma, rest + (f.left, f.right), goal):
            return True
        if isinstance(f, One) and seq(gamma, rest, goal):
            return True
        if isinstance(f, With) and (seq(gamma, rest + (f.left,), goal)
                                    or seq(gamma, rest + (f.right,), goal)):
            return True
        if isinstance(f, Bang) and seq(gamma | {f.body}, rest, goal):
            return True
        if isinstance(f, Lolli):
            for d1 in set(map(tuple, sub_bags(rest))):
                d2 = Counter(rest)
                d2.subtract(d1)
                if seq(gamma, d1, f.atom) and seq(gamma, list(d2.elements()) + [f.body], goal):
                    return True
    for g in gamma:
        if seq(gamma, delta + (g,), goal):
            return True
    return False


def bang_free(f):
    if isinstance(f, Bang):
        return False
    return all(bang_free(c) for c in children(f))


def children(f):
    if isinstance(f, (Tensor, With)):
        return (f.left, f.right)
    if isinstance(f, Lolli):
        return (f.atom, f.body)
    if isinstance(f, Bang):
        return (f.body,)
    return ()


def formula_size(f):
    return 1 + sum(formula_size(c) for c in children(f))


# --------------------------------------------------------------------------
# a naive simulation for states without unrestricted formulas or bangs
#
# Without ! and Gamma the transition system is finite, so the largest
# simulation can be computed by discovering every pair the clauses can
# mention and then deleting failing pairs until nothing changes.


def naive_moves(s):
    """Strong moves (label, target) of a bang-free, gamma-free state."""
    assert not s.gamma
    out = set()
    delta = list(s.delta)
    for i, f in enumerate(delta):
        rest = delta[:i] + delta[i + 1:]
        if isinstance(f, Atom):
            out.add((("send", f.name), State((), rest)))
            for j, h in enumerate(rest):
                if isinstance(h, Lolli) and h.atom == f:
                    out.add((("tau",), State((), rest[:j] + rest[j + 1:] + [h.body])))
        elif isinstance(f, Lolli):
            out.add((("recv", f.atom.name), State((), rest + [f.body])))
        elif isinstance(f, Tensor):
            out.add((("tau",), State((), rest + [f.left, f.right])))
        elif isinstance(f, One):
            out.add((("tau",), State((), rest)))
        elif isinstance(f, With):
            out.add((("tau",), State((), rest + [f.left])))
            out.add((("tau",), State((), rest + [f.right])))
        elif isinstance(f, Bang):
            raise ValueError("bang-free states only")
    return out


def tau_closure(s):
    seen = {s}
    todo = [s]
    while todo:
        u = todo.pop()
        for lab, v in naive_moves(u):
            if lab == ("tau",) and v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def weak(s, lab):
    out = set()
    for u in tau_closure(s):
        for l2, v in naive_moves(u):
            if l2 == lab:
                out |= tau_closure(v)
    return out


def naive_simulates(s1, s2):
    """Membership of (s1, s2) in the largest simulation."""
    demands = {}

    def needs(x, y):
        empty = [z for z in tau_closure(y) if not z.delta] if not x.delta else None
        moves = []
        for lab, x2 in naive_moves(x):
            if lab == ("tau",):
                cands = tau_closure(y)
            elif lab[0] == "send":
                cands = weak(y, lab)
            else:
                cands = tau_closure(y.add(Atom(lab[1])))
            moves.append([(x2, y2) for y2 in cands])
        parts = []
        for p, q in brute_partitions(x):
            opts = []
            for y2 in tau_closure(y):
                for p2, q2 in brute_partitions(y2):
                    opts.append(((p, p2), (q, q2)))
            parts.append(opts)
        return empty, moves, parts

    todo = [(s1, s2)]
    while todo:
        pair = todo.pop()
        if pair in demands:
            continue
        demands[pair] = needs(*pair)
        _, moves, parts = demands[pair]
        for opts in moves:
            todo.extend(opts)
        for opts in parts:
            for a, b in opts:
                todo.extend((a, b))

    rel = set(demands)
    changed = True
    while changed:
        changed = False
        for pair in list(rel):
            empty, moves, parts = demands[pair]
            ok = empty is None or bool(empty)
            ok = ok and all(any(c in rel for c in opts) for opts in moves)
            ok = ok and all(any(a in rel and b in rel for a, b in opts) for opts in parts)
            if not ok:
                rel.discard(pair)
                changed = True
    return (s1, s2) in rel
