"""Independent checking of simulation verdicts.

Nothing here calls into the simulation search or the transition-system
module: moves, settled forms, partitions, closures and the up-to-context
rule are all re-derived from the formula syntax alone.  A Holds witness is
accepted when every pair in it answers every challenge of its left state
with a legal weak transition landing in the relation (up to context,
weakening and ``top`` padding).  A Fails refutation is accepted when every
node's challenge is real and every candidate response of the right state is
shown to lead to an already-accepted failing node.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import product

from .syntax import Atom, Bang, Lolli, One, State, Tensor, Top, With, parse_state, render

TOP = Top()
ONE = One()


@dataclass
class Report:
    ok: bool = True
    errors: list = field(default_factory=list)
    checked: int = 0

    def __bool__(self):
        return self.ok

    def fail(self, msg: str):
        self.ok = False
        self.errors.append(msg)

    def to_json(self) -> dict:
        return {"ok": self.ok, "errors": self.errors[:20], "checked": self.checked}


# --------------------------------------------------------------------------
# re-derived semantics


def _state(gamma, delta_counter) -> State:
    return State(gamma, list(delta_counter.elements()))


def moves(s: State) -> list:
    """(label text, target) for every one-step transition of ``s``."""
    out = set()
    bag = Counter(s.delta)
    for f in list(bag):
        rest = bag.copy()
        rest[f] -= 1
        if isinstance(f, Atom):
            out.add(("!" + f.name, _state(s.gamma, rest)))
        elif isinstance(f, Lolli):
            out.add(("?" + f.atom.name, _state(s.gamma, rest + Counter([f.body]))))
            if rest[f.atom] > 0:
                r2 = rest.copy()
                r2[f.atom] -= 1
                out.add(("tau", _state(s.gamma, r2 + Counter([f.body]))))
        elif isinstance(f, Tensor):
            out.add(("tau", _state(s.gamma, rest + Counter([f.left, f.right]))))
        elif isinstance(f, One):
            out.add(("tau", _state(s.gamma, rest)))
        elif isinstance(f, With):
            out.add(("tau", _state(s.gamma, rest + Counter([f.left]))))
            out.add(("tau", _state(s.gamma, rest + Counter([f.right]))))
        elif isinstance(f, Bang):
            out.add(("tau", _state(set(s.gamma) | {f.body}, rest)))
    for g in s.gamma:
        out.add(("tau", _state(s.gamma, bag + Counter([g]))))
    return sorted(out, key=lambda m: (m[0], m[1].key))


def settled(s: State) -> State:
    """Flatten tensors, drop units and move banged bodies to gamma."""
    gamma = set(s.gamma)
    linear = []
    todo = list(s.delta)
    while todo:
        f = todo.pop()
        if isinstance(f, Tensor):
            todo += [f.left, f.right]
        elif isinstance(f, Bang):
            gamma.add(f.body)
        elif not isinstance(f, One):
            linear.append(f)
    return State(gamma, linear)


def splits(s: State) -> set:
    """Every (p, q) whose composition is ``s``."""
    bag = Counter(s.delta)
    items = sorted(bag, key=lambda f: f.key)
    out = set()
    for gsides in product("LRB", repeat=len(s.gamma)):
        gl = [g for g, side in zip(s.gamma, gsides) if side in "LB"]
        gr = [g for g, side in zip(s.gamma, gsides) if side in "RB"]
        for ks in product(*[range(bag[f] + 1) for f in items]):
            left = Counter({f: k for f, k in zip(items, ks) if k})
            out.add((_state(gl, left), _state(gr, bag - left)))
    return out


def _walk(f, subs):
    subs.append(f)
    if isinstance(f, (Tensor, With)):
        _walk(f.left, subs)
        _walk(f.right, subs)
    elif isinstance(f, (Lolli, Bang)):
        _walk(f.body, subs)


def _subs(s: State) -> list:
    subs = []
    for f in s.gamma + s.delta:
        _walk(f, subs)
    return subs


def _hopeless(s: State) -> bool:
    subs = _subs(s)
    eaters = {f.atom for f in subs if isinstance(f, Lolli)}
    makers = {f for f in subs if isinstance(f, Atom)}
    for f in s.delta:
        if f == TOP or (isinstance(f, Atom) and f not in eaters):
            return True
        if isinstance(f, Lolli) and f.atom not in makers:
            return True
    return False


def _reachable_atoms(s: State) -> set:
    # least fixpoint: atoms of s not guarded by an implication, plus atoms
    # behind a -o B once a is in
    found = set()
    changed = True
    while changed:
        changed = False
        for f in s.gamma + s.delta:
            for atom in _free_atoms(f, found):
                if atom not in found:
                    found.add(atom)
                    changed = True
    return found


def _free_atoms(f, found):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (Tensor, With)):
        yield from _free_atoms(f.left, found)
        yield from _free_atoms(f.right, found)
    elif isinstance(f, Bang):
        yield from _free_atoms(f.body, found)
    elif isinstance(f, Lolli) and f.atom in found:
        yield from _free_atoms(f.body, found)


def _hopeless_after_send(s: State, a: Atom) -> bool:
    # like _hopeless, but one copy of a may still leave by being sent
    subs = _subs(s)
    eaters = {f.atom for f in subs if isinstance(f, Lolli)}
    makers = {f for f in subs if isinstance(f, Atom)}
    bag = Counter(s.delta)
    if bag[TOP]:
        return True
    for f, n in bag.items():
        if isinstance(f, Atom) and f not in eaters and n > (1 if f == a else 0):
            return True
        if isinstance(f, Lolli) and f.atom not in makers:
            return True
    return False


def _can_empty(s: State, budget: dict) -> bool:
    reach, _ = closure(s, budget, drop_hopeless=True)
    return any(not z.delta for z in reach)


def closure(root: State, budget: dict, drop_hopeless: bool = False, stop=None):
    """Settled states silently reachable from ``root`` (skipping copies that
    cannot matter); returns (set of states, complete?).  States other than
    the root that satisfy ``stop`` are not expanded."""
    max_states = budget["max_states"]
    max_clones = budget["max_clones"]
    max_depth = budget["max_tau_depth"]
    seen = {root: 0}
    queue = deque([(root, 0, 0)])
    complete = True
    while queue:
        s, used, depth = queue.popleft()
        if seen[s] < used:
            continue
        if drop_hopeless and s != root and _hopeless(s):
            continue
        if stop is not None and s != root and stop(s):
            continue
        eaters = {f.atom for f in _subs(s) if isinstance(f, Lolli)}
        nexts = []
        bag = Counter(s.delta)
        for f in bag:
            rest = bag.copy()
            rest[f] -= 1
            if isinstance(f, With):
                nexts += [(_state(s.gamma, rest + Counter([f.left])), 0),
                          (_state(s.gamma, rest + Counter([f.right])), 0)]
            elif isinstance(f, Lolli) and rest[f.atom] > 0:
                rest[f.atom] -= 1
                nexts.append((_state(s.gamma, rest + Counter([f.body])), 0))
        for g in s.gamma:
            if g == TOP or g == ONE:
                continue
            if isinstance(g, Bang):
                if g.body not in s.gamma:
                    nexts.append((_state(s.gamma, bag + Counter([g])), 0))
                continue
            if isinstance(g, Atom) and g not in eaters:
                continue
            nexts.append((_state(s.gamma, bag + Counter([g])), 1))
        for t, cost in nexts:
            t = settled(t)
            u = used + cost
            if t in seen and seen[t] <= u:
                continue
            if u > max_clones or depth + 1 > max_depth or (t not in seen and len(seen) >= max_states):
                complete = False
                continue
            seen[t] = u
            queue.append((t, u, depth + 1))
    return set(seen), complete


# --------------------------------------------------------------------------
# the up-to rule


def _contained(small: Counter, big: Counter) -> bool:
    return all(big[k] >= n for k, n in small.items())


def related(x: State, y: State, rel: list) -> bool:
    """(x, y) is (u, v) from ``rel`` (or the empty pair) in a shared context,
    with extra unrestricted formulas allowed on the right and idle ``top``
    or ``1`` allowed on the left; a leftover ``top`` on the left absorbs any
    leftover on the right."""
    xg, yg = set(x.gamma), set(y.gamma)
    xd, yd = Counter(x.delta), Counter(y.delta)
    for u, v in [(State(), State())] + rel:
        ug, vg = set(u.gamma), set(v.gamma)
        if not (ug <= xg and vg <= yg):
            continue
        if not (xg - ug - yg) <= {TOP, ONE}:
            continue
        ud, vd = Counter(u.delta), Counter(v.delta)
        if not (_contained(ud, xd) and _contained(vd, yd)):
            continue
        left_extra = xd - ud
        right_extra = yd - vd
        shared = left_extra & right_extra
        left_rest = left_extra - shared
        right_rest = right_extra - shared
        if set(left_rest) - {TOP}:
            continue
        if right_rest and not left_rest:
            continue
        return True
    return False


# --------------------------------------------------------------------------
# challenges


def challenges(x: State) -> dict:
    """Challenge key -> (clause, data), for every obligation of ``x``."""
    out = {}
    for lab, t in moves(x):
        out[f"{lab} {render(t)}"] = (4 if lab.startswith("?") else 3, (lab, t))
    if not x.delta:
        out["empty"] = (1, None)
    for p, q in splits(x):
        if p == State() or q == State():
            continue
        out[f"{render(p)} | {render(q)}"] = (2, (p, q))
    return out


def _compose(p: State, q: State) -> State:
    return State(p.gamma + q.gamma, p.delta + q.delta)


def _follow(start: State, path: list, report: Report, where: str):
    """Replay a path of [label, state] steps; returns (end, labels) or None."""
    cur = start
    labels = []
    for lab, text in path:
        nxt = parse_state(text)
        if (lab, nxt) not in set(moves(cur)):
            report.fail(f"{where}: {render(cur)} has no {lab} step to {text}")
            return None
        labels.append(lab)
        cur = nxt
    return cur, labels


def validate_witness(s1: State, s2: State, witness: dict) -> Report:
    """Check a Holds witness clause by clause."""
    rep = Report()
    rel = [(parse_state(p["left"]), parse_state(p["right"])) for p in witness["pairs"]]
    if not related(settled(s1), settled(s2), rel):
        rep.fail("the queried pair is not covered by the relation")
    for entry, (x, y) in zip(witness["pairs"], rel):
        answers = entry["responses"]
        for key, (clause, data) in challenges(x).items():
            rep.checked += 1
            where = f"({entry['left']}) vs ({entry['right']}) / {key}"
            ans = answers.get(key)
            if ans is None:
                rep.fail(f"{where}: no response")
                continue
            if clause == 4:
                lab, t = data
                start = State(y.gamma, y.delta + (Atom(lab[1:]),))
            else:
                start = y
            walked = _follow(start, ans["path"], rep, where)
            if walked is None:
                continue
            end, labels = walked
            if clause == 3 and data[0] != "tau":
                if labels.count(data[0]) != 1 or any(l not in ("tau", data[0]) for l in labels):
                    rep.fail(f"{where}: path is not a weak {data[0]} transition")
                    continue
            elif any(l != "tau" for l in labels):
                rep.fail(f"{where}: path must be silent")
                continue
            if clause in (3, 4):
                if not related(settled(data[1]), settled(end), rel):
                    rep.fail(f"{where}: landing not in the relation")
            elif clause == 1:
                if end.delta or not related(x, settled(end), rel):
                    rep.fail(f"{where}: no empty linear context reached in relation")
            else:
                p, q = data
                (lp, rp), (lq, rq) = [(parse_state(a), parse_state(b)) for a, b in ans["landing"]]
                if (lp, lq) != (p, q) or _compose(rp, rq) != end:
                    rep.fail(f"{where}: landing is not a partition of the reached state")
                elif not (related(settled(p), settled(rp), rel) and related(settled(q), settled(rq), rel)):
                    rep.fail(f"{where}: partition halves not in the relation")
    return rep


def _candidates(x: State, y: State, clause: int, data, budget: dict):
    """Every landing (tuple of pairs) the right state could answer with, and
    whether that set is complete."""
    if clause == 3:
        lab, t = data
        tx = settled(t)
        if lab == "tau":
            return {((tx, y),)}, True
        a = Atom(lab[1:])
        if a not in _reachable_atoms(y):
            return set(), True
        # when tx can empty its linear context, so must any answer: states
        # that can no longer do so after the send are left out
        pick = _can_empty(tx, budget)
        if pick:
            reach, complete = closure(y, budget, stop=lambda w: _hopeless_after_send(w, a))
        else:
            reach, complete = closure(y, budget)
        out = set()
        for w in reach:
            if a in w.delta:
                rest = Counter(w.delta)
                rest[a] -= 1
                out.add(((tx, settled(_state(w.gamma, rest))),))
            if a in w.gamma:
                out.add(((tx, w),))
        if pick:
            out = {land for land in out if not _hopeless(land[0][1])}
        return out, complete
    if clause == 4:
        lab, t = data
        return {((settled(t), settled(State(y.gamma, y.delta + (Atom(lab[1:]),)))),)}, True
    if clause == 1:
        reach, complete = closure(y, budget, drop_hopeless=True)
        return {((x, z),) for z in reach if not z.delta}, complete
    p, q = data
    reach, complete = closure(y, budget)
    out = set()
    for z in reach:
        for p2, q2 in splits(z):
            out.add(((p, p2), (q, q2)))
    return out, complete


def validate_refutation(s1: State, s2: State, trace: dict, budget: dict) -> Report:
    """Replay a Fails refutation against re-derived candidate sets."""
    rep = Report()
    nodes = trace["nodes"]
    good = {}
    for n in sorted(nodes, key=lambda n: n["id"]):
        rep.checked += 1
        x, y = parse_state(n["left"]), parse_state(n["right"])
        where = f"node {n['id']} ({n['left']}) vs ({n['right']})"
        chal = challenges(x).get(n["challenge"])
        if chal is None:
            rep.fail(f"{where}: {n['challenge']!r} is not a challenge of the left state")
            continue
        clause, data = chal
        if clause != n["clause"]:
            rep.fail(f"{where}: clause mismatch")
            continue
        cands, complete = _candidates(x, y, clause, data, budget)
        if not complete:
            rep.fail(f"{where}: candidate responses could not be enumerated within budget")
            continue
        answered = {}
        for r in n["responses"]:
            landing = tuple((parse_state(a), parse_state(b)) for a, b in r["landing"])
            sub = r["sub"]
            if sub >= n["id"] or sub not in good:
                continue
            if good[sub] in landing:
                answered[landing] = True
        missing = [c for c in cands if c not in answered]
        if missing:
            a, b = missing[0][0]
            rep.fail(f"{where}: candidate landing ({render(a)}) vs ({render(b)}) is not refuted")
            continue
        good[n["id"]] = (x, y)
    root = trace["root"]
    if root not in good:
        rep.fail("the root node did not replay")
    elif good[root] != (settled(s1), settled(s2)):
        rep.fail("the root node is not the queried pair")
    return rep


def validate(verdict) -> Report:
    """Validate a simulation verdict's witness or refutation."""
    if verdict.status == "holds":
        return validate_witness(verdict.left, verdict.right, verdict.witness)
    if verdict.status == "fails":
        return validate_refutation(verdict.left, verdict.right, verdict.trace, verdict.budgets)
    return Report(True, [], 0)
