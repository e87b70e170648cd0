"""Simulation checking and contextual refutation.

The simulation checker works on pairs of *settled* states: states whose
linear context has no tensor, no ``1`` and no ``!A`` left (those steps are
inert and confluent, so a state is interchangeable with its settled form).
It explores the greatest fixpoint on the fly: a pair is assumed while its
four clauses are being discharged, and if an assumed pair later turns out
not to hold the whole query is re-run with that knowledge kept.

Two closure techniques keep the relation finite:

* up to context: if ``u R v`` then ``u`` and ``v`` put in the same context
  are related; the unrestricted side of the right state may be larger
  (weakening);
* ``top`` padding: a state carrying an idle ``top`` is below any extension
  of a related state, and idle ``top``/``1`` in the left unrestricted context
  cost nothing.

Fails is reported only when no closure used for the decision was cut off by
the exploration budget; otherwise the answer is Unknown.
"""

from __future__ import annotations

import functools
import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

from .semantics import (
    RECV, SEND, TAU, TAU_LABEL, ExploreBudget, Label, lts_successors,
)
from .syntax import (
    Atom, Bang, Formula, Lolli, One, State, Tensor, Top, With,
    atoms_of, compose, partitions, render,
)
from .verdict import FAILS, HOLDS, UNKNOWN, Verdict

_TOP = Top()
_ONE = One()


@dataclass(frozen=True)
class SimConfig:
    explore: ExploreBudget = field(default_factory=ExploreBudget)
    max_pairs: int = 2_000
    max_depth: int = 60

    def __post_init__(self):
        if self.max_pairs <= 0 or self.max_depth <= 0:
            raise ValueError("max_pairs and max_depth must be positive")

    def to_json(self) -> dict:
        out = self.explore.to_json()
        out.update({"max_pairs": self.max_pairs, "max_depth": self.max_depth})
        return out


# --------------------------------------------------------------------------
# settled forms


def settle_path(s: State) -> list[tuple[Label, State]]:
    """Tau steps (fork, drop ``1``, promote ``!A``) leading to the settled form."""
    path = []
    cur = s
    while True:
        for i, f in enumerate(cur.delta):
            if isinstance(f, (Tensor, One, Bang)):
                rest = cur.delta[:i] + cur.delta[i + 1:]
                if isinstance(f, Tensor):
                    cur = State(cur.gamma, rest + (f.left, f.right))
                elif isinstance(f, One):
                    cur = State(cur.gamma, rest)
                else:
                    cur = State(cur.gamma + (f.body,), rest)
                path.append((TAU_LABEL, cur))
                break
        else:
            return path


def settle(s: State) -> State:
    path = settle_path(s)
    return path[-1][1] if path else s


def _subformulas(f: Formula, out: set):
    out.add(f)
    if isinstance(f, (Tensor, With)):
        _subformulas(f.left, out)
        _subformulas(f.right, out)
    elif isinstance(f, Lolli):
        _subformulas(f.body, out)
    elif isinstance(f, Bang):
        _subformulas(f.body, out)


def _consumed_atoms(s: State) -> set:
    subs = set()
    for f in s.gamma + s.delta:
        _subformulas(f, subs)
    return {f.atom for f in subs if isinstance(f, Lolli)}


def _produced_atoms(s: State) -> set:
    subs = set()
    for f in s.gamma + s.delta:
        _subformulas(f, subs)
    return {f for f in subs if isinstance(f, Atom)}


def _producible(s: State) -> set:
    """Atoms that can ever show up in the linear context by silent steps.

    An atom under ``a -o`` only counts once ``a`` itself is producible.
    """
    todo = list(s.gamma + s.delta)
    out = set()
    waiting: dict = {}
    while todo:
        f = todo.pop()
        if isinstance(f, Atom):
            if f not in out:
                out.add(f)
                todo.extend(waiting.pop(f, []))
        elif isinstance(f, (Tensor, With)):
            todo += [f.left, f.right]
        elif isinstance(f, Bang):
            todo.append(f.body)
        elif isinstance(f, Lolli):
            if f.atom in out:
                todo.append(f.body)
            else:
                waiting.setdefault(f.atom, []).append(f.body)
    return out


def _dead(s: State) -> bool:
    """True when ``s`` can never reach an empty linear context."""
    cons = None
    prod = None
    for f in s.delta:
        if isinstance(f, Top):
            return True
        if isinstance(f, Atom):
            cons = _consumed_atoms(s) if cons is None else cons
            if f not in cons:
                return True
        elif isinstance(f, Lolli):
            prod = _produced_atoms(s) if prod is None else prod
            if f.atom not in prod:
                return True
    return False


def _doomed(s: State, a: Atom) -> bool:
    """True when nothing silently reachable from ``s``, with one ``a`` sent,
    can reach an empty linear context."""
    cons = None
    prod = None
    counts = Counter(s.delta)
    for f, n in counts.items():
        if isinstance(f, Top):
            return True
        if isinstance(f, Atom):
            cons = _consumed_atoms(s) if cons is None else cons
            if f not in cons and (f != a or n >= 2):
                return True
        elif isinstance(f, Lolli):
            prod = _produced_atoms(s) if prod is None else prod
            if f.atom not in prod:
                return True
    return False


# --------------------------------------------------------------------------
# bounded tau closures over settled states


class Closure:
    """Settled states tau-reachable from a root, each with a witnessing path.

    Copies from the unrestricted context that can never matter are skipped:
    ``1``, ``top``, ``!B`` when ``B`` is already unrestricted, and atoms that
    nothing can consume (sending such a copy is handled by the caller).
    States satisfying ``stop`` (other than the root) are kept but not
    expanded; callers use it for states whose successors cannot matter.
    """

    def __init__(self, root: State, b: ExploreBudget, stop=None):
        self.root = root
        self.paths = {root: []}
        self.order = [root]
        self.truncated = False
        best = {root: 0}
        queue = deque([(root, 0, 0)])
        while queue:
            u, clones, depth = queue.popleft()
            if best[u] < clones:
                continue
            if stop is not None and u is not root and stop(u):
                continue
            for raw, counted in self._steps(u):
                c = clones + counted
                nd = depth + 1
                settle_steps = settle_path(raw)
                t = settle_steps[-1][1] if settle_steps else raw
                prev = best.get(t)
                if prev is not None and prev <= c:
                    continue
                if c > b.max_clones or nd > b.max_tau_depth:
                    self.truncated = True
                    continue
                if prev is None:
                    if len(best) >= b.max_states:
                        self.truncated = True
                        continue
                    self.order.append(t)
                    self.paths[t] = self.paths[u] + [(TAU_LABEL, raw)] + settle_steps
                best[t] = c
                queue.append((t, c, nd))

    @staticmethod
    def _steps(u: State):
        g, d = u.gamma, u.delta
        cons = None
        counts = Counter(d)
        out = []
        for f in counts:
            if isinstance(f, With):
                i = d.index(f)
                rest = d[:i] + d[i + 1:]
                out.append((State(g, rest + (f.left,)), 0))
                out.append((State(g, rest + (f.right,)), 0))
            elif isinstance(f, Lolli) and counts[f.atom] > 0:
                c = counts.copy()
                c.subtract((f, f.atom))
                out.append((State(g, tuple(c.elements()) + (f.body,)), 0))
        for f in g:
            if isinstance(f, (One, Top)):
                continue
            if isinstance(f, Bang):
                if f.body not in g:
                    out.append((State(g, d + (f,)), 0))
                continue
            if isinstance(f, Atom):
                if cons is None:
                    cons = _consumed_atoms(u)
                if f not in cons:
                    continue
            out.append((State(g, d + (f,)), 1))
        return out


# --------------------------------------------------------------------------
# relation with up-to closure


class _Pair:
    __slots__ = ("u", "v", "ug", "vg", "ud", "vd")

    def __init__(self, u: State, v: State):
        self.u, self.v = u, v
        self.ug, self.vg = set(u.gamma), set(v.gamma)
        self.ud, self.vd = Counter(u.delta), Counter(v.delta)


_EMPTY_PAIR = _Pair(State(), State())


def covers(p: _Pair, xg: set, xd: Counter, yg: set, yd: Counter) -> bool:
    """Whether (x, y) follows from (u, v) by context, weakening and padding.

    With lx = Dx - Du and ry = Dy - Dv: what only lx has must be ``top``, and
    what only ry has is allowed only if some such ``top`` soaks it up.
    """
    if not p.ug <= xg or not p.vg <= yg:
        return False
    for g in xg:
        if g not in p.ug and g not in yg and g != _TOP and g != _ONE:
            return False
    ud, vd = p.ud, p.vd
    for k, n in ud.items():
        if xd.get(k, 0) < n:
            return False
    for k, n in vd.items():
        if yd.get(k, 0) < n:
            return False
    left_top = False
    for k, n in xd.items():
        lx = n - ud.get(k, 0)
        if lx and lx > yd.get(k, 0) - vd.get(k, 0):
            if k != _TOP:
                return False
            left_top = True
    if left_top:
        return True
    for k, n in yd.items():
        ry = n - vd.get(k, 0)
        if ry and ry > xd.get(k, 0) - ud.get(k, 0):
            return False
    return True


# --------------------------------------------------------------------------
# the checker


def _is_copy(src: State, dst: State) -> bool:
    """Whether the silent step ``src -> dst`` copies an unrestricted formula."""
    if src.gamma != dst.gamma or len(dst.delta) != len(src.delta) + 1:
        return False
    extra = Counter(dst.delta)
    extra.subtract(src.delta)
    if any(n < 0 for n in extra.values()):
        return False
    return next(iter(+extra)) in src.gamma


class _Restart(Exception):
    pass


class _OutOfPairs(Exception):
    pass


T, F, U = "T", "F", "U"


def _label_str(lab: Label) -> str:
    return str(lab)


def _path_json(path) -> list:
    return [[_label_str(lab), render(s)] for lab, s in path]


def _response_json(r: dict) -> dict:
    return {"path": _path_json(r["path"]),
            "landing": [[render(a), render(b)] for a, b in r["landing"]]}


def _challenge_text(key) -> str:
    """Stable name of a challenge, as used in witnesses and refutations."""
    if key == "empty":
        return key
    a, b = key
    if isinstance(a, Label):
        return f"{a} {render(b)}"
    return f"{render(a)} | {render(b)}"


class _Checker:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.b = cfg.explore
        self.failed: dict = {}     # pair -> refutation node id
        self.unknown: dict = {}    # pair -> reason
        self.nodes: list = []      # refutation nodes, in creation order
        self.closures: dict = {}
        self.empties: dict = {}
        self.splits: dict = {}
        self.any_truncated = False
        self.visits = 0            # pairs examined, restarts included
        self.reset()

    def reset(self):
        self.rel: dict = {}        # pair -> _Pair (assumed or established)
        self.certs: dict = {}      # pair -> certificate
        self.users: dict = {}      # pair -> set of pairs that leaned on it
        self.stack: list = []

    # closures are cached per query; they do not depend on the relation
    def closure(self, y: State, prune=None) -> Closure:
        """``prune`` is None, "dead" or an atom (doomed for sending it)."""
        key = (y, prune)
        c = self.closures.get(key)
        if c is None:
            if prune is None:
                stop = None
            elif prune == "dead":
                stop = _dead
            else:
                stop = functools.partial(_doomed, a=prune)
            c = self.closures[key] = Closure(y, self.b, stop)
        return c

    def covered(self, x: State, y: State) -> bool:
        xg, xd, yg, yd = set(x.gamma), Counter(x.delta), set(y.gamma), Counter(y.delta)
        if covers(_EMPTY_PAIR, xg, xd, yg, yd):
            return True
        me = self.stack[-1] if self.stack else None
        for key, p in self.rel.items():
            if covers(p, xg, xd, yg, yd):
                if me is not None:
                    self.users.setdefault(key, set()).add(me)
                return True
        return False

    def check(self, x: State, y: State):
        key = (x, y)
        if key in self.failed:
            return F
        if key in self.unknown:
            return U
        if self.covered(x, y):
            return T
        if len(self.stack) >= self.cfg.max_depth:
            self.unknown[key] = "recursion depth budget"
            self.any_truncated = True
            return U
        self.visits += 1
        if self.visits > self.cfg.max_pairs:
            raise _OutOfPairs
        self.rel[key] = _Pair(x, y)
        self.stack.append(key)
        try:
            status, payload = self.clauses(x, y)
        finally:
            self.stack.pop()
        if status == T:
            self.certs[key] = payload
            return T
        del self.rel[key]
        self.certs.pop(key, None)
        if status == F:
            self.nodes.append(dict(payload, left=x, right=y))
            self.failed[key] = len(self.nodes) - 1
        else:
            self.unknown[key] = payload
        leaners = self.users.pop(key, set()) - {key}
        if any(k in self.rel for k in leaners):
            raise _Restart
        return status

    # -- challenges ---------------------------------------------------------

    def challenges(self, x: State):
        """Yield (clause, challenge key, data) for every obligation of ``x``.

        Cheap and usually decisive challenges come first: sends, receives,
        silent steps other than copies, the empty-context clause, copies from
        the unrestricted context, and partitions last.
        """
        sends, recvs, taus, copies = [], [], [], []
        for e in lts_successors(x):
            item = (4 if e.label.kind == RECV else 3, (e.label, e.dst), e)
            if e.label.kind == SEND:
                sends.append(item)
            elif e.label.kind == RECV:
                recvs.append(item)
            elif _is_copy(x, e.dst):
                copies.append(item)
            else:
                taus.append(item)
        yield from sends
        yield from recvs
        yield from taus
        if not x.delta:
            yield 1, "empty", None
        yield from copies
        empty = State()
        for p, q in partitions(x):
            if p == empty or q == empty:
                continue
            yield 2, (p, q), (p, q)

    def clauses(self, x: State, y: State):
        cert = {}
        undecided = None
        for clause, ckey, data in self.challenges(x):
            if clause == 3:
                res = self.answer_move(x, y, data)
            elif clause == 4:
                res = self.answer_receive(y, data)
            elif clause == 1:
                res = self.answer_empty(x, y)
            else:
                res = self.answer_partition(y, data)
            status, info = res
            if status == T:
                cert[ckey] = info
            elif status == F:
                return F, {"clause": clause, "challenge": ckey, "responses": info}
            elif undecided is None:
                undecided = f"clause {clause} challenge {_challenge_text(ckey)}: {info}"
        if undecided is not None:
            return U, undecided
        return T, cert

    def _try(self, candidates, truncated, landings):
        """Generic exists-loop over candidate responses.

        ``candidates`` yields (path, [(left, right), ...]); a candidate
        succeeds when every landing pair checks out.
        """
        refuted = []
        unknown = False
        for path, pairs in candidates:
            res = []
            ok = True
            for lx, ly in pairs:
                r = self.check(lx, ly)
                res.append(r)
                if r != T:
                    ok = False
                    if r == F:
                        break
            if ok:
                return T, {"path": path, "landing": pairs}
            if F in res:
                bad = pairs[res.index(F)]
                refuted.append({"path": path, "landing": pairs,
                                "sub": self.failed[bad]})
            else:
                unknown = True
        if unknown:
            return U, "a candidate response is undecided"
        if truncated:
            self.any_truncated = True
            return U, f"no response found within the exploration budget ({landings})"
        return F, refuted

    def _scan_then(self, x2: State, y: State, fallback):
        """Prefer a closure state that is already covered; else ``fallback``."""
        cl = self.closure(y)
        for z in cl.order:
            if self.covered(x2, z):
                return T, {"path": cl.paths[z], "landing": [(x2, z)]}
        return fallback()

    def answer_move(self, x: State, y: State, e):
        x2 = e.dst
        sp = settle_path(x2)
        x2n = sp[-1][1] if sp else x2
        if e.label.kind == TAU:
            if _is_copy(x, x2):
                # answer a copy with the same copy made somewhere along y's closure
                (g,) = Counter(x2.delta) - Counter(x.delta)
                cl = self.closure(y)
                for z in cl.order:
                    if g not in z.gamma:
                        continue
                    zc = State(z.gamma, z.delta + (g,))
                    zsp = settle_path(zc)
                    zn = zsp[-1][1] if zsp else zc
                    if self.check(x2n, zn) == T:
                        path = cl.paths[z] + [(TAU_LABEL, zc)] + zsp
                        return T, {"path": path, "landing": [(x2n, zn)]}
            # y itself dominates every state it reaches silently, so it is the
            # only candidate that needs a full check
            return self._scan_then(x2n, y, lambda: self._try([([], [(x2n, y)])], False, "tau"))
        a = Atom(e.label.atom)
        if a not in _producible(y):
            # nothing y can ever reach contains a, budget or not
            return F, []
        if self.can_empty(x2n):
            # every answer must itself be able to empty its linear context
            # later on, so doomed states need not be explored
            cl = self.closure(y, a)
            return self._try(self._send_candidates(cl, a, x2n, skip_dead=True), cl.truncated, "send")
        cl = self.closure(y)
        return self._try(self._send_candidates(cl, a, x2n), cl.truncated, "send")

    def partitions(self, z: State) -> list:
        out = self.splits.get(z)
        if out is None:
            out = self.splits[z] = list(partitions(z))
        return out

    def can_empty(self, x: State) -> bool:
        """Whether ``x`` is seen to reach an empty linear context silently."""
        hit = self.empties.get(x)
        if hit is None:
            hit = self.empties[x] = any(not z.delta for z in self.closure(x, "dead").order)
        return hit

    def _send_candidates(self, cl: Closure, a: Atom, x2n: State, skip_dead: bool = False):
        seen = set()
        lab = Label(SEND, a.name)
        for w in cl.order:
            if a in w.delta:
                i = w.delta.index(a)
                w2 = State(w.gamma, w.delta[:i] + w.delta[i + 1:])
                sp = settle_path(w2)
                t = sp[-1][1] if sp else w2
                if t not in seen:
                    seen.add(t)
                    if not (skip_dead and _dead(t)):
                        yield cl.paths[w] + [(lab, w2)] + sp, [(x2n, t)]
            if a in w.gamma and w not in seen:
                seen.add(w)
                if skip_dead and _dead(w):
                    continue
                yield cl.paths[w] + [(TAU_LABEL, State(w.gamma, w.delta + (a,))), (lab, w)], [(x2n, w)]

    def answer_receive(self, y: State, e):
        x2 = e.dst
        sp = settle_path(x2)
        x2n = sp[-1][1] if sp else x2
        ya = State(y.gamma, y.delta + (Atom(e.label.atom),))
        ysp = settle_path(ya)
        yan = ysp[-1][1] if ysp else ya

        def only():
            return self._try([(ysp, [(x2n, yan)])], False, "receive")

        cl = self.closure(yan)
        for z in cl.order:
            if self.covered(x2n, z):
                return T, {"path": ysp + cl.paths[z], "landing": [(x2n, z)]}
        return only()

    def answer_empty(self, x: State, y: State):
        cl = self.closure(y, "dead")
        cands = ((cl.paths[z], [(x, z)]) for z in cl.order if not z.delta)
        return self._try(cands, cl.truncated, "empty")

    def answer_partition(self, y: State, pq):
        p, q = pq
        cl = self.closure(y)

        def cands():
            for z in cl.order:
                for p2, q2 in self.partitions(z):
                    yield cl.paths[z], [(p, p2), (q, q2)]

        return self._try(cands(), cl.truncated, "partition")

    # -- output ---------------------------------------------------------------

    def witness(self) -> dict:
        pairs = []
        for (x, y) in sorted(self.rel, key=lambda k: (k[0].key, k[1].key)):
            cert = self.certs.get((x, y), {})
            responses = {_challenge_text(k): _response_json(r) for k, r in cert.items()}
            pairs.append({"left": render(x), "right": render(y),
                          "responses": dict(sorted(responses.items()))})
        return {"pairs": pairs}

    def refutation(self, root_id: int) -> tuple[list, list]:
        """Nodes reachable from ``root_id`` (renumbered) and the main spine."""
        keep = set()
        todo = [root_id]
        while todo:
            i = todo.pop()
            if i in keep:
                continue
            keep.add(i)
            for r in self.nodes[i]["responses"]:
                todo.append(r["sub"])
        order = sorted(keep)
        renum = {old: new for new, old in enumerate(order)}
        out = []
        for old in order:
            n = self.nodes[old]
            out.append({"id": renum[old], "left": render(n["left"]), "right": render(n["right"]),
                        "clause": n["clause"], "challenge": _challenge_text(n["challenge"]),
                        "responses": [dict(_response_json(r), sub=renum[r["sub"]])
                                      for r in n["responses"]]})
        spine = []
        i = renum[root_id]
        while True:
            n = out[i]
            spine.append({"left": n["left"], "right": n["right"], "clause": n["clause"],
                          "challenge": n["challenge"], "responses": len(n["responses"])})
            if not n["responses"]:
                break
            i = n["responses"][0]["sub"]
        return out, spine


def simulate(s1: State, s2: State, cfg: Optional[SimConfig] = None) -> Verdict:
    """Decide whether ``s2`` simulates ``s1``.

    Holds carries the relation (every pair with the response chosen for each
    of its challenges); Fails carries a refutation: a list of nodes, each a
    challenge of the left state together with every candidate response of
    the right state and the failing pair it leads to.
    """
    cfg = cfg or SimConfig()
    x, y = settle(s1), settle(s2)
    ck = _Checker(cfg)
    restarts = 0
    common = dict(method="simulation", left=s1, right=s2, budgets=cfg.to_json())
    while True:
        try:
            status = ck.check(x, y)
            break
        except _Restart:
            restarts += 1
            ck.reset()
        except _OutOfPairs:
            return Verdict(UNKNOWN, reason="pair budget exhausted", truncated=True,
                           stats={"restarts": restarts}, **common)
    stats = {"restarts": restarts, "pairs": len(ck.rel), "refuted_pairs": len(ck.failed),
             "visits": ck.visits}
    if status == T:
        w = ck.witness()
        w["root"] = [render(x), render(y)]
        return Verdict(HOLDS, witness=w, truncated=False, stats=stats, **common)
    if status == F:
        nodes, spine = ck.refutation(ck.failed[(x, y)])
        root = next(n["id"] for n in nodes if n["left"] == render(x) and n["right"] == render(y))
        return Verdict(FAILS, trace={"root": root, "nodes": nodes, "spine": spine},
                       stats=stats, **common)
    return Verdict(UNKNOWN, reason=ck.unknown.get((x, y), "undecided"), truncated=True,
                   stats=stats, **common)


# --------------------------------------------------------------------------
# contextual preorder


def _reduction_closure(s: State, b: ExploreBudget):
    """Reduction-reachable states (full, not settled) with a truncation flag."""
    best = {s: 0}
    order = [s]
    queue = deque([(s, 0, 0)])
    trunc = False
    while queue:
        u, clones, depth = queue.popleft()
        for e in lts_successors(u):
            if e.label.kind != TAU:
                continue
            t = e.dst
            is_clone = t.gamma == u.gamma and len(t.delta) == len(u.delta) + 1 and \
                not (Counter(u.delta) - Counter(t.delta))
            c = clones + (1 if is_clone else 0)
            prev = best.get(t)
            if prev is not None and prev <= c:
                continue
            if c > b.max_clones or depth + 1 > b.max_tau_depth:
                trunc = True
                continue
            if prev is None:
                if len(best) >= b.max_states:
                    trunc = True
                    continue
                order.append(t)
            best[t] = c
            queue.append((t, c, depth + 1))
    return order, trunc


def _barbs(s: State) -> set:
    return {f.name for f in s.delta if isinstance(f, Atom)}


class _CtxRefuter:
    """Depth-bounded search for a violation of the four contextual closure
    properties, starting from ``(s1 ∘ c, s2 ∘ c)``.

    A pair is refuted when some obligation has no untruncated matching
    option all of whose sub-pairs are refuted in turn.
    """

    def __init__(self, b: ExploreBudget, depth: int):
        self.b = b
        self.depth = depth
        self.memo = {}
        self.closures = {}

    def closure(self, s):
        c = self.closures.get(s)
        if c is None:
            c = self.closures[s] = _reduction_closure(s, self.b)
        return c

    def refute(self, x: State, y: State, depth: int):
        """Return an explanation dict if (x, y) is refuted, else None."""
        key = (x, y, depth)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = None
        out = self._refute(x, y, depth)
        self.memo[key] = out
        return out

    def _refute(self, x, y, depth):
        ys, ytrunc = self.closure(y)
        weak = set()
        for z in ys:
            weak |= _barbs(z)
        for a in sorted(_barbs(x)):
            if a not in weak and not ytrunc:
                return {"kind": "barb", "left": render(x), "right": render(y), "barb": a}
        if ytrunc or depth <= 0:
            return None
        if not x.delta and all(self.refute(x, z, depth - 1) is not None
                               for z in ys if not z.delta):
            return {"kind": "empty", "left": render(x), "right": render(y)}
        xs, xtrunc = self.closure(x)
        for x2 in xs[1:]:
            subs = []
            for z in ys:
                r = self.refute(x2, z, depth - 1)
                if r is None:
                    break
                subs.append(r)
            else:
                return {"kind": "reduction", "left": render(x), "right": render(y),
                        "to": render(x2), "because": subs[:1]}
        for p, q in partitions(x):
            if not (p.gamma or p.delta) or not (q.gamma or q.delta):
                continue
            ok = True
            for z in ys:
                for p2, q2 in partitions(z):
                    if self.refute(p, p2, depth - 1) is None and self.refute(q, q2, depth - 1) is None:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return {"kind": "partition", "left": render(x), "right": render(y),
                        "split": [render(p), render(q)]}
        return None


def context_battery(s1: State, s2: State, max_size: int = 3) -> list[State]:
    """All states of size at most ``max_size`` over the atoms of ``s1`` and
    ``s2`` plus one fresh atom, smallest first."""
    from .harness import EnumSpec, enumerate_states

    names = set()
    for f in s1.gamma + s1.delta + s2.gamma + s2.delta:
        names |= atoms_of(f)
    fresh = next(n for n in (f"z{i}" for i in itertools.count()) if n not in names)
    spec = EnumSpec(atoms=sorted(names) + [fresh], max_formula_size=max_size,
                    max_gamma=max_size, max_delta=max_size, max_state_size=max_size)
    return list(enumerate_states(spec))


def contextual_falsify(s1: State, s2: State, contexts, cfg: Optional[SimConfig] = None,
                       depth: int = 3) -> Verdict:
    """Look for a context that breaks the contextual closure properties.

    Never answers Holds: finitely many contexts cannot establish the
    preorder.
    """
    cfg = cfg or SimConfig()
    contexts = list(contexts)
    common = dict(method="contextual", left=s1, right=s2, budgets=cfg.to_json())
    ref = _CtxRefuter(cfg.explore, depth)
    for c in contexts:
        why = ref.refute(compose(s1, c), compose(s2, c), depth)
        if why is not None:
            return Verdict(FAILS, trace={"context": render(c), "violation": why}, **common)
    return Verdict(UNKNOWN, reason=f"no violation found in {len(contexts)} contexts",
                   **common)


def contextual_preorder(s1: State, s2: State, cfg: Optional[SimConfig] = None,
                        battery_size: int = 2) -> Verdict:
    """Contextual preorder through its coincidence with simulation.

    When simulation fails, a direct contextual counterexample is searched
    for in a small context battery and attached if found.
    """
    cfg = cfg or SimConfig()
    v = simulate(s1, s2, cfg)
    v.method = "contextual"
    v.extra["via"] = "simulation"
    if v.fails:
        direct = contextual_falsify(s1, s2, context_battery(s1, s2, battery_size), cfg)
        v.extra["contextual_witness"] = direct.trace if direct.fails else None
    return v
