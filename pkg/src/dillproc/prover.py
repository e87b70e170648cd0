"""Backward proof search for the sequent calculus, plus an independent checker.

Search applies invertible rules eagerly (``*L``, ``1L``, ``!L`` on the linear
context, then ``topR``, ``&R``, ``-oR``, ``1R``, ``!R`` on the goal) and only
then branches on ``init``, ``*R``, ``&Li``, ``-oL`` and clone.  Clone is fused
with the left rule that decomposes the copied formula; copies of atoms are
folded into ``init``.  Linear contexts are split eagerly (every distinct
sub-multiset) and results are memoized per query.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .syntax import (
    TOP, Atom, Bang, Formula, Lolli, One, Sequent, State, Tensor, Top, With,
    bag_splits, from_json, render, tensor_of, to_json,
)
from .verdict import FAILS, HOLDS, UNKNOWN, Verdict

RULES = ("init", "clone", "*R", "*L", "1R", "1L", "&R", "&L1", "&L2",
         "topR", "-oR", "-oL", "!R", "!L")

PROVED = "proved"
REFUTED = "refuted"

_INF = float("inf")


@dataclass(frozen=True)
class SearchBudget:
    max_depth: int = 64
    max_nodes: int = 200_000
    max_clones_per_branch: int = 3

    def __post_init__(self):
        for name in ("max_depth", "max_nodes", "max_clones_per_branch"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        return {"max_depth": self.max_depth, "max_nodes": self.max_nodes,
                "max_clones_per_branch": self.max_clones_per_branch}


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Sequent
    premises: tuple = ()

    def to_json(self) -> dict:
        return {"rule": self.rule, "conclusion": to_json(self.conclusion),
                "premises": [p.to_json() for p in self.premises]}

    @classmethod
    def from_json(cls, obj) -> "Derivation":
        return cls(obj["rule"], from_json(obj["conclusion"]),
                   tuple(cls.from_json(p) for p in obj.get("premises", [])))

    def height(self) -> int:
        return 1 + max((p.height() for p in self.premises), default=0)

    def count(self) -> int:
        return 1 + sum(p.count() for p in self.premises)

    def render_tree(self, indent: str = "  ") -> str:
        """Indented proof tree: conclusion first, premises nested below."""
        lines = []

        def walk(d, level):
            lines.append(f"{indent * level}{render(d.conclusion)}   [{d.rule}]")
            for p in d.premises:
                walk(p, level + 1)

        walk(self, 0)
        return "\n".join(lines)


@dataclass
class ProofResult:
    status: str
    sequent: Sequent
    derivation: Optional[Derivation] = None
    nodes: int = 0
    truncated: bool = False
    reason: str = ""
    budget: SearchBudget = field(default_factory=SearchBudget)

    @property
    def proved(self) -> bool:
        return self.status == PROVED

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    @property
    def unknown(self) -> bool:
        return self.status == UNKNOWN

    def to_json(self) -> dict:
        out = {"version": 1, "status": self.status, "sequent": render(self.sequent),
               "nodes": self.nodes, "truncated": self.truncated,
               "budget": self.budget.to_json()}
        if self.derivation is not None:
            out["derivation"] = self.derivation.to_json()
        if self.reason:
            out["reason"] = self.reason
        return out


class _OutOfNodes(Exception):
    pass


def _key(f: Formula):
    return f.key


def _bag(*parts) -> tuple:
    out = []
    for p in parts:
        out.extend(p)
    return tuple(sorted(out, key=_key))


def _without(delta: tuple, i: int) -> tuple:
    return delta[:i] + delta[i + 1:]


def _gadd(gamma: tuple, f: Formula) -> tuple:
    if f in gamma:
        return gamma
    return tuple(sorted(gamma + (f,), key=_key))


@lru_cache(maxsize=None)
def _goal_parts(f: Formula) -> tuple:
    """(atoms and tops of ``f`` outside any ``!``, antecedents of implications in ``f``)."""
    if isinstance(f, (Atom, Top)):
        return frozenset((f,)), frozenset()
    if isinstance(f, One):
        return frozenset(), frozenset()
    if isinstance(f, (Tensor, With)):
        l, r = _goal_parts(f.left), _goal_parts(f.right)
        return l[0] | r[0], l[1] | r[1]
    if isinstance(f, Lolli):
        b = _goal_parts(f.body)
        return b[0], b[1] | {f.atom}
    # under ! the goal is proved from an empty linear context
    return frozenset(), _goal_parts(f.body)[1]


@lru_cache(maxsize=None)
def _capacity(c: Formula, a: Atom) -> float:
    """How many linear copies of ``a`` a goal ``c`` can use up by ``init``."""
    if isinstance(c, Top):
        return math.inf
    if isinstance(c, Atom):
        return 1 if c == a else 0
    if isinstance(c, Tensor):
        return _capacity(c.left, a) + _capacity(c.right, a)
    if isinstance(c, With):
        return max(_capacity(c.left, a), _capacity(c.right, a))
    if isinstance(c, Lolli):
        return _capacity(c.body, a)
    return 0  # 1 and !B leave no room for linear leftovers


def _stuck(g, d, c) -> bool:
    """True when some linear atom or top can never be used up.

    Top has no left rule and an atom only leaves the linear context through
    ``init``, against the current goal's atoms or against the antecedent of
    an implication.  Without implications waiting for ``a``, the goal caps
    how many copies of ``a`` can go.
    """
    if not any(isinstance(f, (Atom, Top)) for f in d):
        return False
    here, ante = _goal_parts(c)
    if TOP in here:
        return False
    eaters = set(ante)
    for f in g + d:
        eaters |= _goal_parts(f)[1]
    counts = Counter(d)
    for f, n in counts.items():
        if isinstance(f, Top):
            return True
        if isinstance(f, Atom) and f not in eaters and n > _capacity(c, f):
            return True
    return False


def _loop_key(g, d, c):
    # extra copies of top in the linear context change nothing: each one
    # ends in a topR leaf, which can take any number of them
    if d.count(TOP) > 1:
        i = d.index(TOP)
        d = d[:i + 1] + tuple(f for f in d[i + 1:] if f != TOP)
    return g, d, c


class _Search:
    def __init__(self, budget: SearchBudget):
        self.b = budget
        self.nodes = 0
        self.truncated = False
        self.proved: dict = {}
        self.failed: set = set()
        self.on_path: dict = {}

    # each call returns (derivation | None, truncated, lowest ancestor depth hit by the loop check)
    def search(self, g, d, c, depth, clones):
        hit = self.proved.get((g, d, c))
        if hit is not None:
            return hit, False, _INF
        key = _loop_key(g, d, c)
        if key in self.failed:
            return None, False, _INF
        if key in self.on_path:
            return None, False, self.on_path[key]
        if _stuck(g, d, c):
            self.failed.add(key)
            return None, False, _INF
        if depth >= self.b.max_depth:
            self.truncated = True
            return None, True, _INF
        self.nodes += 1
        if self.nodes > self.b.max_nodes:
            raise _OutOfNodes
        self.on_path[key] = depth
        try:
            der, trunc, low = self.expand(g, d, c, depth, clones)
        finally:
            del self.on_path[key]
        if der is not None:
            self.proved[(g, d, c)] = der
            return der, False, _INF
        if low >= depth:
            low = _INF
        if not trunc and low == _INF:
            self.failed.add(key)
        return None, trunc, low

    def expand(self, g, d, c, depth, clones):
        concl = Sequent(g, d, c)
        nd = depth + 1

        def one(rule, g2, d2, c2, cl=clones):
            der, t, lo = self.search(g2, d2, c2, nd, cl)
            if der is None:
                return None, t, lo
            return Derivation(rule, concl, (der,)), False, _INF

        # invertible left rules
        for i, f in enumerate(d):
            if isinstance(f, Tensor):
                return one("*L", g, _bag(_without(d, i), (f.left, f.right)), c)
            if isinstance(f, One):
                return one("1L", g, _without(d, i), c)
            if isinstance(f, Bang):
                return one("!L", _gadd(g, f.body), _without(d, i), c)

        # invertible right rules
        if isinstance(c, Top):
            return Derivation("topR", concl), False, _INF
        if isinstance(c, With):
            l, t, lo = self.search(g, d, c.left, nd, clones)
            if l is None:
                return None, t, lo
            r, t, lo = self.search(g, d, c.right, nd, clones)
            if r is None:
                return None, t, lo
            return Derivation("&R", concl, (l, r)), False, _INF
        if isinstance(c, Lolli):
            return one("-oR", g, _bag(d, (c.atom,)), c.body)
        if not d and isinstance(c, One):
            return Derivation("1R", concl), False, _INF
        if not d and isinstance(c, Bang):
            return one("!R", g, (), c.body)

        trunc = False
        low = _INF

        def note(t, lo):
            nonlocal trunc, low
            trunc = trunc or t
            low = min(low, lo)

        if isinstance(c, Atom):
            if d == (c,):
                return Derivation("init", concl), False, _INF
            if not d and c in g:
                leaf = Derivation("init", Sequent(g, (c,), c))
                return Derivation("clone", concl, (leaf,)), False, _INF

        if isinstance(c, Tensor):
            for d1, d2 in bag_splits(d):
                l, t, lo = self.search(g, d1, c.left, nd, clones)
                if l is None:
                    note(t, lo)
                    continue
                r, t, lo = self.search(g, d2, c.right, nd, clones)
                if r is None:
                    note(t, lo)
                    continue
                return Derivation("*R", concl, (l, r)), False, _INF

        prev = None
        for i, f in enumerate(d):
            if f == prev:
                continue
            prev = f
            rest = _without(d, i)
            if isinstance(f, With):
                for rule, part in (("&L1", f.left), ("&L2", f.right)):
                    der, t, lo = one(rule, g, _bag(rest, (part,)), c)
                    if der is not None:
                        return der, False, _INF
                    note(t, lo)
            elif isinstance(f, Lolli):
                der = self._lolli_left(g, rest, f, c, concl, nd, clones, note)
                if der is not None:
                    return der, False, _INF

        for f in g:
            if isinstance(f, (Atom, One, Top)):
                continue
            if isinstance(f, Bang):
                if f.body in g:
                    continue
                inner = Sequent(g, _bag(d, (f,)), c)
                sub, t, lo = self.search(_gadd(g, f.body), d, c, nd, clones)
                if sub is not None:
                    return Derivation("clone", concl, (Derivation("!L", inner, (sub,)),)), False, _INF
                note(t, lo)
                continue
            if clones >= self.b.max_clones_per_branch:
                self.truncated = True
                trunc = True
                continue
            inner = Sequent(g, _bag(d, (f,)), c)
            cl = clones + 1
            if isinstance(f, Tensor):
                sub, t, lo = self.search(g, _bag(d, (f.left, f.right)), c, nd, cl)
                if sub is not None:
                    return Derivation("clone", concl, (Derivation("*L", inner, (sub,)),)), False, _INF
                note(t, lo)
            elif isinstance(f, With):
                for rule, part in (("&L1", f.left), ("&L2", f.right)):
                    sub, t, lo = self.search(g, _bag(d, (part,)), c, nd, cl)
                    if sub is not None:
                        return Derivation("clone", concl, (Derivation(rule, inner, (sub,)),)), False, _INF
                    note(t, lo)
            elif isinstance(f, Lolli):
                der = self._lolli_left(g, d, f, c, inner, nd, cl, note)
                if der is not None:
                    return Derivation("clone", concl, (der,)), False, _INF
        return None, trunc, low

    def _lolli_left(self, g, rest, f, c, concl, nd, clones, note):
        for d1, d2 in bag_splits(rest):
            l, t, lo = self.search(g, d1, f.atom, nd, clones)
            if l is None:
                note(t, lo)
                continue
            r, t, lo = self.search(g, _bag(d2, (f.body,)), c, nd, clones)
            if r is None:
                note(t, lo)
                continue
            return Derivation("-oL", concl, (l, r))
        return None


def prove(s: Sequent, b: Optional[SearchBudget] = None) -> ProofResult:
    """Search for a derivation of ``s`` within budget ``b``.

    Refuted is returned only when the search space was exhausted with no
    depth, node or clone cap cutting anything off.
    """
    b = b or SearchBudget()
    srch = _Search(b)
    try:
        der, trunc, _ = srch.search(s.gamma, s.delta, s.goal, 0, 0)
    except _OutOfNodes:
        return ProofResult(UNKNOWN, s, None, srch.nodes, True, "node budget exhausted", b)
    if der is not None:
        return ProofResult(PROVED, s, der, srch.nodes, False, "", b)
    if trunc or srch.truncated:
        return ProofResult(UNKNOWN, s, None, srch.nodes, True,
                           "depth or clone budget cut the search", b)
    return ProofResult(REFUTED, s, None, srch.nodes, False, "", b)


# --------------------------------------------------------------------------
# independent checking


@dataclass
class CheckResult:
    ok: bool
    path: tuple = ()
    reason: str = ""

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "path": list(self.path), "reason": self.reason}


def _schema_error(d: Derivation) -> str:
    """Empty string when ``d``'s root step instantiates its rule, else a reason."""
    concl, rule = d.conclusion, d.rule
    ps = [p.conclusion for p in d.premises]
    gamma, delta, goal = set(concl.gamma), Counter(concl.delta), concl.goal

    def arity(n):
        return "" if len(ps) == n else f"{rule} needs {n} premise(s), got {len(ps)}"

    def same_gamma(*idx):
        for i in idx:
            if set(ps[i].gamma) != gamma:
                return f"premise {i} changes the unrestricted context"
        return ""

    if rule not in RULES:
        return f"unknown rule {rule!r}"
    if rule in ("init", "1R", "topR"):
        if ps:
            return f"{rule} takes no premises"
        if rule == "init":
            if not isinstance(goal, Atom):
                return "init needs an atomic goal"
            if delta != Counter([goal]):
                return "init needs the linear context to be exactly the goal atom"
        elif rule == "1R":
            if not isinstance(goal, One) or delta:
                return "1R needs goal 1 and an empty linear context"
        elif not isinstance(goal, Top):
            return "topR needs goal top"
        return ""
    if rule in ("*R", "&R", "-oL"):
        err = arity(2) or same_gamma(0, 1)
    else:
        err = arity(1)
    if err:
        return err
    p = ps[0]
    pd = Counter(p.delta)
    if rule == "clone":
        if set(p.gamma) != gamma or p.goal != goal:
            return "clone keeps the unrestricted context and the goal"
        extra = pd - delta
        if delta - pd or sum(extra.values()) != 1:
            return "clone adds exactly one formula to the linear context"
        (f,) = extra
        if f not in gamma:
            return "cloned formula is not in the unrestricted context"
        return ""
    if rule == "*R":
        if not isinstance(goal, Tensor):
            return "*R needs a tensor goal"
        if ps[0].goal != goal.left or ps[1].goal != goal.right:
            return "*R premises must prove the two components"
        if pd + Counter(ps[1].delta) != delta:
            return "*R premises must split the linear context"
        return ""
    if rule == "&R":
        if not isinstance(goal, With):
            return "&R needs a with goal"
        if ps[0].goal != goal.left or ps[1].goal != goal.right:
            return "&R premises must prove the two components"
        if pd != delta or Counter(ps[1].delta) != delta:
            return "&R premises keep the whole linear context"
        return ""
    if rule == "-oR":
        if err := same_gamma(0):
            return err
        if not isinstance(goal, Lolli) or p.goal != goal.body:
            return "-oR needs goal a -o B and premise goal B"
        if pd != delta + Counter([goal.atom]):
            return "-oR premise adds the antecedent atom to the linear context"
        return ""
    if rule == "!R":
        if err := same_gamma(0):
            return err
        if not isinstance(goal, Bang) or p.goal != goal.body or delta or pd:
            return "!R needs goal !A, empty linear contexts and premise goal A"
        return ""
    if rule == "-oL":
        q = ps[1]
        qd = Counter(q.delta)
        if q.goal != goal:
            return "-oL right premise keeps the goal"
        a = ps[0].goal
        if not isinstance(a, Atom):
            return "-oL left premise must prove an atom"
        for f in delta:
            if isinstance(f, Lolli) and f.atom == a and qd[f.body] > 0:
                if pd + qd - Counter([f.body]) + Counter([f]) == delta:
                    return ""
        return "-oL does not split the linear context around a matching a -o B"
    # remaining one-premise left rules: same goal, a principal formula in delta
    if p.goal != goal:
        return f"{rule} keeps the goal"
    for f in delta:
        rest = delta - Counter([f])
        if rule == "*L" and isinstance(f, Tensor):
            ok = set(p.gamma) == gamma and pd == rest + Counter([f.left, f.right])
        elif rule == "1L" and isinstance(f, One):
            ok = set(p.gamma) == gamma and pd == rest
        elif rule in ("&L1", "&L2") and isinstance(f, With):
            part = f.left if rule == "&L1" else f.right
            ok = set(p.gamma) == gamma and pd == rest + Counter([part])
        elif rule == "!L" and isinstance(f, Bang):
            ok = set(p.gamma) == gamma | {f.body} and pd == rest
        else:
            ok = False
        if ok:
            return ""
    return f"no principal formula in the linear context fits {rule}"


def check_derivation(d: Derivation) -> CheckResult:
    """Check every node of ``d`` against the rule schemas.

    On failure ``path`` lists premise indices from the root to the first
    offending node.
    """
    stack = [(d, ())]
    while stack:
        node, path = stack.pop()
        err = _schema_error(node)
        if err:
            return CheckResult(False, path, err)
        for i in reversed(range(len(node.premises))):
            stack.append((node.premises[i], path + (i,)))
    return CheckResult(True)


# --------------------------------------------------------------------------
# logical preorder


def logical_preorder(s1: State, s2: State, b: Optional[SearchBudget] = None) -> Verdict:
    """Decide ``s1`` below ``s2`` by proving ``G2 ; D2 |- tensor_of(s1)``."""
    b = b or SearchBudget()
    goal = Sequent(s2.gamma, s2.delta, tensor_of(s1))
    res = prove(goal, b)
    common = dict(method="logical", left=s1, right=s2, budgets=b.to_json(),
                  stats={"nodes": res.nodes})
    if res.proved:
        return Verdict(HOLDS, witness={"sequent": render(goal), "derivation": res.derivation.to_json()},
                       **common)
    if res.refuted:
        return Verdict(FAILS, trace={"sequent": render(goal), "refuted": True}, **common)
    return Verdict(UNKNOWN, reason=res.reason, truncated=True, **common)


def admissibility_suite(max_size: int, b: Optional[SearchBudget] = None, atoms=("a", "b"),
                        context_size: int = 2, max_cut_pairs: Optional[int] = None) -> dict:
    """Identity and cut checks over enumerated formulas.

    Identity: ``. ; A |- A`` must be proved for every formula ``A`` of size
    at most ``max_size``.  Cut: whenever ``G ; D |- A`` and ``G' ; D', A |- C``
    are both proved (contexts of state size at most ``context_size``), the
    composed ``G, G' ; D, D' |- C`` must never be refuted. A ``context_size``
    of 0 uses empty contexts only.
    """
    from .harness import EnumSpec, enumerate_formulas, enumerate_states

    b = b or SearchBudget()
    fspec = EnumSpec(atoms=list(atoms), max_formula_size=max_size, max_gamma=0, max_delta=0)
    formulas = list(enumerate_formulas(fspec))
    if context_size < 1:
        contexts = [State()]
    else:
        cspec = EnumSpec(atoms=list(atoms), max_formula_size=context_size, max_gamma=1,
                         max_delta=2, max_state_size=context_size)
        contexts = list(enumerate_states(cspec))

    identity = {"checked": 0, "proved": 0, "unknown": 0, "failures": []}
    for a in formulas:
        res = prove(Sequent((), (a,), a), b)
        identity["checked"] += 1
        if res.proved:
            identity["proved"] += 1
        elif res.unknown:
            identity["unknown"] += 1
        else:
            identity["failures"].append(render(Sequent((), (a,), a)))

    cut = {"checked": 0, "proved": 0, "unknown": 0, "failures": []}
    left_ok = {}
    seen = set()
    for a in formulas:
        left_ok[a] = [s for s in contexts if prove(Sequent(s.gamma, s.delta, a), b).proved]
    done = False
    for a in formulas:
        if not left_ok[a]:
            continue
        for s2 in contexts:
            for c in formulas:
                if not prove(Sequent(s2.gamma, s2.delta + (a,), c), b).proved:
                    continue
                for s1 in left_ok[a]:
                    seq = Sequent(s1.gamma + s2.gamma, s1.delta + s2.delta, c)
                    if (seq.state, c) in seen:
                        continue
                    seen.add((seq.state, c))
                    res = prove(seq, b)
                    cut["checked"] += 1
                    if res.proved:
                        cut["proved"] += 1
                    elif res.unknown:
                        cut["unknown"] += 1
                    else:
                        cut["failures"].append({
                            "left": render(Sequent(s1.gamma, s1.delta, a)),
                            "right": render(Sequent(s2.gamma, s2.delta + (a,), c)),
                            "cut": render(seq)})
                    if max_cut_pairs is not None and cut["checked"] >= max_cut_pairs:
                        done = True
                        break
                if done:
                    break
            if done:
                break
        if done:
            break
    return {"identity": identity, "cut": cut,
            "ok": not identity["failures"] and not cut["failures"]}
