"""Enumeration of small instances and differential checks between the
logical and the simulation preorders."""

from __future__ import annotations

import itertools
import json
import random
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterator, Optional

from .syntax import (
    ONE, TOP, Atom, Bang, Formula, Lolli, Sequent, State, Tensor, With,
    from_json, render, size, state_size, to_json,
)


@dataclass
class EnumSpec:
    """What to enumerate.

    ``max_state_size`` bounds the size of a whole state (each unrestricted
    formula counts one extra node for its implicit ``!``); ``sample`` keeps a
    seeded random subset of that many states.
    """

    atoms: list = field(default_factory=lambda: ["a"])
    max_formula_size: int = 3
    max_gamma: int = 1
    max_delta: int = 2
    seed: int = 0
    max_state_size: Optional[int] = None
    sample: Optional[int] = None

    def __post_init__(self):
        self.atoms = [a.name if isinstance(a, Atom) else a for a in self.atoms]
        for a in self.atoms:
            Atom(a)
        if self.max_formula_size < 1:
            raise ValueError("max_formula_size must be at least 1")
        if self.max_gamma < 0 or self.max_delta < 0:
            raise ValueError("context bounds must be non-negative")

    def to_json(self) -> dict:
        return asdict(self)


def formulas_of_size(atoms: list, n: int, _cache=None) -> list:
    """All formulas with exactly ``n`` nodes, in formula order."""
    cache = {} if _cache is None else _cache
    key = (tuple(atoms), n)
    if key in cache:
        return cache[key]
    if n < 1:
        out = []
    elif n == 1:
        out = [Atom(a) for a in atoms] + [ONE, TOP]
    else:
        out = [Bang(f) for f in formulas_of_size(atoms, n - 1, cache)]
        for i in range(1, n - 1):
            lefts = formulas_of_size(atoms, i, cache)
            rights = formulas_of_size(atoms, n - 1 - i, cache)
            for l, r in itertools.product(lefts, rights):
                out.append(Tensor(l, r))
                out.append(With(l, r))
        for a in atoms:
            for body in formulas_of_size(atoms, n - 2, cache):
                out.append(Lolli(Atom(a), body))
    out = sorted(out, key=lambda f: f.key)
    cache[key] = out
    return out


def count_formulas(n_atoms: int, n: int) -> int:
    """Closed-form count of formulas of exactly ``n`` nodes (recurrence)."""
    counts = [0, n_atoms + 2]
    for k in range(2, n + 1):
        c = counts[k - 1]
        c += 2 * sum(counts[i] * counts[k - 1 - i] for i in range(1, k - 1))
        c += n_atoms * (counts[k - 2] if k >= 2 else 0)
        counts.append(c)
    return counts[n] if n >= 1 else 0


def enumerate_formulas(spec: EnumSpec) -> Iterator[Formula]:
    """Formulas up to ``spec.max_formula_size``, by size then formula order."""
    cache = {}
    for n in range(1, spec.max_formula_size + 1):
        yield from formulas_of_size(spec.atoms, n, cache)


def _bags(items: list, max_items: int, budget, repeat: bool, start: int = 0):
    """Sub-multisets (or subsets) of ``items`` = [(formula, cost)] sorted by
    cost, with at most ``max_items`` members and total cost within budget."""
    yield ()
    if max_items == 0:
        return
    for i in range(start, len(items)):
        f, cost = items[i]
        if budget is not None and cost > budget:
            break
        rest = None if budget is None else budget - cost
        for tail in _bags(items, max_items - 1, rest, repeat, i if repeat else i + 1):
            yield (f,) + tail


def enumerate_states(spec: EnumSpec) -> Iterator[State]:
    """Canonical states within the bounds, by state size then state order."""
    limit = spec.max_state_size
    fs = list(enumerate_formulas(spec))
    gam = sorted(((f, size(f) + 1) for f in fs), key=lambda fc: fc[1])
    dlt = sorted(((f, size(f)) for f in fs), key=lambda fc: fc[1])
    out = []
    for gamma in _bags(gam, spec.max_gamma, limit, repeat=False):
        rest = None if limit is None else limit - sum(size(f) + 1 for f in gamma)
        for delta in _bags(dlt, spec.max_delta, rest, repeat=True):
            out.append(State(gamma, delta))
    out.sort(key=lambda s: (state_size(s), s.key))
    if spec.sample is not None and spec.sample < len(out):
        rng = random.Random(spec.seed)
        keep = sorted(rng.sample(range(len(out)), spec.sample))
        out = [out[i] for i in keep]
    yield from out


# --------------------------------------------------------------------------
# presets and budgets


@dataclass
class Budgets:
    search: object = None
    sim: object = None

    def __post_init__(self):
        from .preorders import SimConfig
        from .prover import SearchBudget
        self.search = self.search or SearchBudget()
        self.sim = self.sim or SimConfig()

    def to_json(self) -> dict:
        return {"search": self.search.to_json(), "sim": self.sim.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Budgets":
        from .preorders import SimConfig
        from .prover import SearchBudget
        from .semantics import ExploreBudget
        s = obj.get("search", {})
        m = dict(obj.get("sim", {}))
        explore = ExploreBudget(**{k: m.pop(k) for k in ("max_states", "max_tau_depth", "max_clones") if k in m})
        return cls(SearchBudget(**s), SimConfig(explore=explore, **m))


def presets() -> dict:
    text = resources.files("dillproc").joinpath("presets.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_preset(name: str) -> tuple[EnumSpec, Budgets, dict]:
    """(enumeration spec, budgets, thresholds) for a named preset."""
    table = presets()
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(table))}")
    p = table[name]
    return EnumSpec(**p["enum"]), Budgets.from_json(p.get("budgets", {})), dict(p.get("thresholds", {}))


# --------------------------------------------------------------------------
# differential check


@dataclass
class AgreementReport:
    spec: EnumSpec
    budgets: Budgets
    pairs: int = 0
    totals: dict = field(default_factory=dict)
    disagreements: list = field(default_factory=list)
    validation: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def unknown_pairs(self) -> int:
        return sum(n for k, n in self.totals.items() if "unknown" in k.split("/"))

    @property
    def unknown_rate(self) -> float:
        return self.unknown_pairs / self.pairs if self.pairs else 0.0

    def to_json(self) -> dict:
        # wall time is left out so that reports are reproducible byte for byte
        return {"version": 1, "spec": self.spec.to_json(), "budgets": self.budgets.to_json(),
                "pairs": self.pairs, "totals": dict(sorted(self.totals.items())),
                "disagreements": self.disagreements, "unknown_rate": round(self.unknown_rate, 6),
                "validation": self.validation}

    def table(self) -> str:
        lines = [f"pairs checked: {self.pairs}",
                 f"{'logical':>10} {'simulation':>11} {'count':>8}"]
        for k, n in sorted(self.totals.items()):
            l, s = k.split("/")
            lines.append(f"{l:>10} {s:>11} {n:>8}")
        lines.append(f"disagreements: {len(self.disagreements)}")
        lines.append(f"unknown rate: {self.unknown_rate:.2%}")
        if self.validation:
            v = self.validation
            lines.append(f"witnesses valid: {v['witnesses_ok']}/{v['witnesses']}, "
                         f"refutations replayed: {v['refutations_ok']}/{v['refutations']}")
        lines.append(f"wall time: {self.wall_time:.1f}s")
        return "\n".join(lines)


def replay_record(s1: State, s2: State, budgets: Budgets, logical: str, simulation: str) -> dict:
    """Standalone description of one pair, re-runnable with ``crosscheck --replay``."""
    return {"version": 1, "kind": "preorder-pair", "left": render(s1), "right": render(s2),
            "left_json": to_json(s1), "right_json": to_json(s2),
            "budgets": budgets.to_json(),
            "observed": {"logical": logical, "simulation": simulation}}


def replay(record: dict) -> dict:
    """Re-run a replay record; reports both verdicts and whether they conflict."""
    from .preorders import simulate
    from .prover import logical_preorder
    s1, s2 = from_json(record["left_json"]), from_json(record["right_json"])
    b = Budgets.from_json(record["budgets"])
    l = logical_preorder(s1, s2, b.search).status
    m = simulate(s1, s2, b.sim).status
    return {"left": render(s1), "right": render(s2), "logical": l, "simulation": m,
            "conflict": {l, m} == {"holds", "fails"},
            "same_as_recorded": record.get("observed") == {"logical": l, "simulation": m}}


def crosscheck(spec: EnumSpec, budgets: Optional[Budgets] = None, validate: bool = True,
               pairs: Optional[list] = None) -> AgreementReport:
    """Compare the logical and simulation preorders on every ordered pair of
    enumerated states (or on ``pairs`` if given)."""
    from .certify import validate as certify
    from .preorders import simulate
    from .prover import logical_preorder

    budgets = budgets or Budgets()
    t0 = time.perf_counter()
    if pairs is None:
        states = list(enumerate_states(spec))
        pairs = [(a, b) for a in states for b in states]
    rep = AgreementReport(spec, budgets)
    val = {"witnesses": 0, "witnesses_ok": 0, "refutations": 0, "refutations_ok": 0,
           "invalid": []}
    for s1, s2 in pairs:
        lv = logical_preorder(s1, s2, budgets.search)
        sv = simulate(s1, s2, budgets.sim)
        key = f"{lv.status}/{sv.status}"
        rep.totals[key] = rep.totals.get(key, 0) + 1
        rep.pairs += 1
        if {lv.status, sv.status} == {"holds", "fails"}:
            rep.disagreements.append(replay_record(s1, s2, budgets, lv.status, sv.status))
        if validate and not sv.unknown:
            ok = bool(certify(sv))
            kind = "witnesses" if sv.holds else "refutations"
            val[kind] += 1
            val[kind + "_ok"] += ok
            if not ok:
                val["invalid"].append([render(s1), render(s2), sv.status])
    if validate:
        rep.validation = val
    rep.wall_time = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# property suites


def _tally(name: str) -> dict:
    return {"name": name, "checked": 0, "holds": 0, "unknown": 0, "violations": []}


def _record(t: dict, verdict, s1: State, s2: State, bad: str = "fails"):
    t["checked"] += 1
    if verdict.status == "holds":
        t["holds"] += 1
    elif verdict.status == "unknown":
        t["unknown"] += 1
    if verdict.status == bad:
        t["violations"].append([render(s1), render(s2), verdict.method])


def metamorphic_suite(spec: EnumSpec, budgets: Optional[Budgets] = None,
                      extras: Optional[list] = None) -> dict:
    """Lemma checks over the enumerated states.

    Each entry is universally quantified and must never produce Fails:
    weakening of the unrestricted context, silent steps only go down,
    moving the unrestricted context under ``!`` into the linear one (both
    preorders, both directions), congruent states are equivalent, identity
    and cut.
    """
    from .preorders import simulate
    from .prover import admissibility_suite, logical_preorder
    from .semantics import reductions

    budgets = budgets or Budgets()
    states = list(enumerate_states(spec))
    extras = extras if extras is not None else list(formulas_of_size(spec.atoms, 1)) + \
        list(formulas_of_size(spec.atoms, 2))
    sims = {}

    def sim(a, b):
        key = (a, b)
        if key not in sims:
            sims[key] = simulate(a, b, budgets.sim)
        return sims[key]

    weak_s, weak_l = _tally("weakening/simulation"), _tally("weakening/logical")
    tau_s, tau_l = _tally("tau-steps-go-down/simulation"), _tally("tau-steps-go-down/logical")
    exp_s = _tally("promote-gamma/simulation")
    exp_l = _tally("promote-gamma/logical")
    congr = _tally("congruent-states/logical")
    checks_extra = []
    for s in states:
        for g in extras:
            if g in s.gamma:
                continue
            bigger = State(s.gamma + (g,), s.delta)
            _record(weak_s, sim(s, bigger), s, bigger)
            _record(weak_l, logical_preorder(s, bigger, budgets.search), s, bigger)
        for t in sorted(reductions(s), key=lambda u: u.key):
            _record(tau_s, sim(t, s), t, s)
            _record(tau_l, logical_preorder(t, s, budgets.search), t, s)
        banged = State((), tuple(Bang(g) for g in s.gamma) + s.delta)
        for a, b in ((s, banged), (banged, s)):
            _record(exp_s, sim(a, b), a, b)
            _record(exp_l, logical_preorder(a, b, budgets.search), a, b)
        shuffled = State(tuple(reversed(s.gamma)) + s.gamma, tuple(reversed(s.delta)))
        for a, b in ((s, shuffled), (shuffled, s)):
            _record(congr, logical_preorder(a, b, budgets.search), a, b)

    adm = admissibility_suite(spec.max_formula_size, budgets.search, atoms=spec.atoms,
                              context_size=2)
    for name, part in (("identity", adm["identity"]), ("cut", adm["cut"])):
        t = _tally(name)
        t.update(checked=part["checked"], holds=part["proved"], unknown=part["unknown"],
                 violations=part["failures"])
        checks_extra.append(t)
    checks = [weak_s, weak_l, tau_s, tau_l, exp_s, exp_l, congr] + checks_extra
    return {"version": 1, "spec": spec.to_json(), "budgets": budgets.to_json(),
            "checks": checks, "ok": not any(c["violations"] for c in checks)}


def harmony_check(atoms=("a", "b"), max_size: int = 6, budgets: Optional[Budgets] = None) -> dict:
    """Provability of ``G ; D |- A`` against ``(. ; A)`` being logically below
    ``(G ; D)``, for every sequent whose state and goal sizes add up to at
    most ``max_size``."""
    from .prover import logical_preorder, prove

    budgets = budgets or Budgets()
    spec = EnumSpec(atoms=list(atoms), max_formula_size=max_size - 1, max_gamma=max_size // 3,
                    max_delta=max_size - 1, max_state_size=max_size - 1)
    states = list(enumerate_states(spec))
    by_size = {}
    for f in enumerate_formulas(EnumSpec(atoms=list(atoms), max_formula_size=max_size,
                                         max_gamma=0, max_delta=0)):
        by_size.setdefault(size(f), []).append(f)
    out = {"checked": 0, "agree": 0, "unknown": 0, "contradictions": []}
    for s in states:
        room = max_size - state_size(s)
        for n in range(1, room + 1):
            for f in by_size.get(n, []):
                p = prove(Sequent(s.gamma, s.delta, f), budgets.search)
                v = logical_preorder(State((), (f,)), s, budgets.search)
                out["checked"] += 1
                if p.unknown or v.unknown:
                    out["unknown"] += 1
                    if p.unknown != v.unknown:
                        out["contradictions"].append([render(Sequent(s.gamma, s.delta, f)), p.status, v.status])
                elif p.proved == v.holds:
                    out["agree"] += 1
                else:
                    out["contradictions"].append([render(Sequent(s.gamma, s.delta, f)), p.status, v.status])
    out["ok"] = not out["contradictions"]
    return out


def tau_reduction_coincidence(atoms=("a", "b"), max_size: int = 6, max_clones: int = 2,
                              max_depth: int = 8) -> dict:
    """Silent LTS steps against reductions, on every state up to ``max_size``.

    Per step: the set of silent-edge targets equals the set of one-step
    reducts.  Layered: the states reachable in at most ``k`` steps agree for
    every ``k`` (copies from gamma limited to ``max_clones`` per path on both
    sides), until both layers stop growing or ``max_depth`` is reached.
    """
    from .semantics import lts_successors, reduction_steps, tau_successors

    spec = EnumSpec(atoms=list(atoms), max_formula_size=max_size, max_gamma=max_size // 2,
                    max_delta=max_size, max_state_size=max_size)
    res = {"states": 0, "step_mismatches": [], "layer_mismatches": []}

    def layers(root, succ):
        best = {root: 0}
        frontier = {root: 0}
        seen_layers = [frozenset(best)]
        for _ in range(max_depth):
            nxt = {}
            for u, c in frontier.items():
                for t, is_clone in succ(u):
                    c2 = c + is_clone
                    if c2 > max_clones:
                        continue
                    if t in best and best[t] <= c2:
                        continue
                    if t in nxt and nxt[t] <= c2:
                        continue
                    nxt[t] = c2
            for t, c2 in nxt.items():
                best[t] = c2
            frontier = nxt
            seen_layers.append(frozenset(best))
            if not nxt:
                break
        return seen_layers

    def by_lts(u):
        return tau_successors(u)

    def by_red(u):
        steps = {}
        for rule, t in reduction_steps(u):
            steps[t] = steps.get(t, True) and rule == "clone"
        return list(steps.items())

    for s in enumerate_states(spec):
        res["states"] += 1
        tau_targets = {e.dst for e in lts_successors(s) if e.label.kind == "tau"}
        red_targets = {t for _, t in reduction_steps(s)}
        if tau_targets != red_targets:
            res["step_mismatches"].append(render(s))
            continue
        if s.gamma or any(not isinstance(f, Atom) for f in s.delta):
            if layers(s, by_lts) != layers(s, by_red):
                res["layer_mismatches"].append(render(s))
    res["ok"] = not res["step_mismatches"] and not res["layer_mismatches"]
    return res


def _sample_pairs(items: list, n: int, seed: int) -> list:
    pairs = [(a, b) for a in items for b in items]
    if n is not None and n < len(pairs):
        rng = random.Random(seed)
        pairs = [pairs[i] for i in sorted(rng.sample(range(len(pairs)), n))]
    return pairs


def preorder_laws(spec: EnumSpec, budgets: Optional[Budgets] = None, samples: int = 200) -> dict:
    """Reflexivity on every state; transitivity on sampled chains of decided
    Holds pairs (a Fails on the composite would be a bug)."""
    from .preorders import simulate

    budgets = budgets or Budgets()
    states = list(enumerate_states(spec))
    out = {"checked": 0, "unknown": 0, "violations": []}
    for s in states:
        v = simulate(s, s, budgets.sim)
        out["checked"] += 1
        out["unknown"] += v.unknown
        if not v.holds and not v.unknown:
            out["violations"].append({"law": "reflexivity", "state": render(s)})
    holds = {}
    for a, b in _sample_pairs(states, samples, spec.seed):
        if simulate(a, b, budgets.sim).holds:
            holds.setdefault(a, []).append(b)
    for a, bs in sorted(holds.items(), key=lambda kv: kv[0].key):
        for b in bs:
            for c in holds.get(b, []):
                v = simulate(a, c, budgets.sim)
                out["checked"] += 1
                out["unknown"] += v.unknown
                if v.fails:
                    out["violations"].append({"law": "transitivity", "chain": [render(a), render(b), render(c)]})
    out["ok"] = not out["violations"]
    return out


def precongruence_sample(spec: EnumSpec, budgets: Optional[Budgets] = None, samples: int = 200,
                         context_size: int = 3) -> dict:
    """Sampled Holds pairs stay related under every context up to
    ``context_size``."""
    from .preorders import simulate
    from .syntax import compose

    budgets = budgets or Budgets()
    states = list(enumerate_states(spec))
    contexts = list(enumerate_states(EnumSpec(atoms=spec.atoms, max_formula_size=context_size,
                                              max_gamma=1, max_delta=context_size,
                                              max_state_size=context_size)))
    out = {"checked": 0, "unknown": 0, "violations": [], "contexts": len(contexts)}
    for a, b in _sample_pairs(states, samples, spec.seed):
        if a == b or not simulate(a, b, budgets.sim).holds:
            continue
        for c in contexts:
            v = simulate(compose(a, c), compose(b, c), budgets.sim)
            out["checked"] += 1
            out["unknown"] += v.unknown
            if v.fails:
                out["violations"].append({"pair": [render(a), render(b)], "context": render(c)})
    out["ok"] = not out["violations"]
    return out


def provability_links(spec: EnumSpec, budgets: Optional[Budgets] = None,
                      goals: Optional[list] = None) -> dict:
    """Provability against the operational side, over states x goals.

    * a silent step never loses provability: if ``s => t`` and ``t |- A``
      then ``s |- A`` is not refuted;
    * ``G ; D |- A`` proved implies ``(G ; A)`` simulated by ``(G ; D)``;
    * ``(G ; A)`` simulated by ``(G ; D)`` implies ``G ; D |- A`` is not
      refuted.
    """
    from .preorders import simulate
    from .prover import prove
    from .semantics import reductions

    budgets = budgets or Budgets()
    states = list(enumerate_states(spec))
    goals = goals if goals is not None else list(enumerate_formulas(spec))
    tau = {"name": "silent-steps-keep-provability", "checked": 0, "violations": []}
    fwd = {"name": "proof-gives-simulation", "checked": 0, "unknown": 0, "violations": []}
    back = {"name": "simulation-gives-proof", "checked": 0, "unknown": 0, "violations": []}
    proved = {}

    def pr(s, a):
        key = (s, a)
        if key not in proved:
            proved[key] = prove(Sequent(s.gamma, s.delta, a), budgets.search).status
        return proved[key]

    for s in states:
        succ = sorted(reductions(s), key=lambda u: u.key)
        for a in goals:
            for t in succ:
                if pr(t, a) == "proved":
                    tau["checked"] += 1
                    if pr(s, a) == "refuted":
                        tau["violations"].append([render(s), render(t), render(a)])
            v = simulate(State(s.gamma, (a,)), s, budgets.sim)
            st = pr(s, a)
            if st == "proved":
                fwd["checked"] += 1
                fwd["unknown"] += v.unknown
                if v.fails:
                    fwd["violations"].append(render(Sequent(s.gamma, s.delta, a)))
            if v.holds:
                back["checked"] += 1
                back["unknown"] += st == "unknown"
                if st == "refuted":
                    back["violations"].append(render(Sequent(s.gamma, s.delta, a)))
    checks = [tau, fwd, back]
    return {"checks": checks, "ok": not any(c["violations"] for c in checks)}
