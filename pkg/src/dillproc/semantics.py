"""Reductions, the labeled transition system and budgeted exploration.

The transition system is infinite as soon as the unrestricted context is
non-empty (any of its formulas can be copied at will), so every closure here
takes an :class:`ExploreBudget` and reports whether anything was cut off.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .syntax import Atom, Bang, Lolli, One, State, Tensor, With, render

TAU = "tau"
SEND = "send"
RECV = "recv"
_KIND_ORDER = {TAU: 0, SEND: 1, RECV: 2}


@dataclass(frozen=True, order=False)
class Label:
    kind: str
    atom: Optional[str] = None

    def __post_init__(self):
        if self.kind not in _KIND_ORDER:
            raise ValueError(f"bad label kind {self.kind!r}")
        if (self.kind == TAU) != (self.atom is None):
            raise ValueError("tau carries no atom; send and receive need one")

    @property
    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.atom or "")

    def __lt__(self, other):
        return self.sort_key < other.sort_key

    def __str__(self):
        if self.kind == TAU:
            return "tau"
        return ("!" if self.kind == SEND else "?") + self.atom

    @classmethod
    def parse(cls, text: str) -> "Label":
        text = text.strip()
        if text in ("tau", "τ"):
            return TAU_LABEL
        if len(text) > 1 and text[0] in "!?":
            Atom(text[1:])  # validates the name
            return cls(SEND if text[0] == "!" else RECV, text[1:])
        raise ValueError(f"bad label {text!r}; expected tau, !a or ?a")


TAU_LABEL = Label(TAU)


def send(a: str) -> Label:
    return Label(SEND, a)


def recv(a: str) -> Label:
    return Label(RECV, a)


class Edge(NamedTuple):
    src: State
    label: Label
    dst: State

    def to_json(self) -> dict:
        return {"from": render(self.src), "label": str(self.label), "to": render(self.dst)}


@dataclass(frozen=True)
class ExploreBudget:
    max_states: int = 5000
    max_tau_depth: int = 32
    max_clones: int = 2

    def __post_init__(self):
        for name in ("max_states", "max_tau_depth", "max_clones"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        return {"max_states": self.max_states, "max_tau_depth": self.max_tau_depth,
                "max_clones": self.max_clones}


# --------------------------------------------------------------------------
# reductions


def reduction_steps(s: State) -> list[tuple[str, State]]:
    """One-step reductions tagged with the rule that produced them.

    Tags: ``tensor``, ``one``, ``with``, ``sync``, ``bang``, ``clone``.
    Duplicate linear occurrences give one step each, not one per copy.
    """
    out = []
    g, d = s.gamma, s.delta
    seen = set()
    for i, f in enumerate(d):
        if f in seen:
            continue
        seen.add(f)
        rest = d[:i] + d[i + 1:]
        if isinstance(f, Tensor):
            out.append(("tensor", State(g, rest + (f.left, f.right))))
        elif isinstance(f, One):
            out.append(("one", State(g, rest)))
        elif isinstance(f, With):
            out.append(("with", State(g, rest + (f.left,))))
            out.append(("with", State(g, rest + (f.right,))))
        elif isinstance(f, Lolli):
            if f.atom in rest:
                j = rest.index(f.atom)
                out.append(("sync", State(g, rest[:j] + rest[j + 1:] + (f.body,))))
        elif isinstance(f, Bang):
            out.append(("bang", State(g + (f.body,), rest)))
    for f in g:
        out.append(("clone", State(g, d + (f,))))
    return out


def reductions(s: State) -> set[State]:
    return {t for _, t in reduction_steps(s)}


# --------------------------------------------------------------------------
# labeled transitions


def _labeled(s: State) -> list[tuple[Label, State, bool]]:
    """Labeled successors as (label, target, is_clone)."""
    g = s.gamma
    counts = Counter(s.delta)
    out = []

    def minus(*fs, plus=()):
        c = counts.copy()
        c.subtract(fs)
        return list(c.elements()) + list(plus)

    for f in counts:
        if isinstance(f, Atom):
            out.append((Label(SEND, f.name), State(g, minus(f)), False))
        elif isinstance(f, Lolli):
            out.append((Label(RECV, f.atom.name), State(g, minus(f, plus=(f.body,))), False))
            if counts[f.atom] > 0:
                out.append((TAU_LABEL, State(g, minus(f, f.atom, plus=(f.body,))), False))
        elif isinstance(f, Tensor):
            out.append((TAU_LABEL, State(g, minus(f, plus=(f.left, f.right))), False))
        elif isinstance(f, One):
            out.append((TAU_LABEL, State(g, minus(f)), False))
        elif isinstance(f, With):
            for part in (f.left, f.right):
                out.append((TAU_LABEL, State(g, minus(f, plus=(part,))), False))
        elif isinstance(f, Bang):
            out.append((TAU_LABEL, State(set(g) | {f.body}, minus(f)), False))
        # top has no transition
    for f in g:
        out.append((TAU_LABEL, State(g, list(s.delta) + [f]), True))
    return out


def lts_successors(s: State) -> list[Edge]:
    """All one-step labeled transitions from ``s``, deduplicated and sorted."""
    edges = {(lab, t) for lab, t, _ in _labeled(s)}
    return [Edge(s, lab, t) for lab, t in sorted(edges, key=lambda e: (e[0].sort_key, e[1].key))]


def tau_successors(s: State) -> list[tuple[State, bool]]:
    """Tau targets with a flag telling whether the step copied from gamma.

    A target reachable both by a copy and by another rule is reported once,
    as a non-copy step.
    """
    best: dict = {}
    for lab, t, is_clone in _labeled(s):
        if lab.kind == TAU:
            best[t] = best.get(t, True) and is_clone
    return sorted(best.items(), key=lambda kv: kv[0].key)


# --------------------------------------------------------------------------
# bounded closures


class Exploration(NamedTuple):
    order: list          # states in first-visit BFS order
    edges: list          # Edge list (only for full explorations)
    truncated: bool
    pruned: set          # states where something was cut off


def _explore(roots: Iterable[State], b: ExploreBudget, all_labels: bool) -> Exploration:
    best: dict = {}
    order = []
    edges = []
    queue = deque()
    for r in roots:
        if r not in best:
            best[r] = 0
            order.append(r)
            queue.append((r, 0, 0))
    cut = []   # (source, target, clones the target would have had)
    full = False
    while queue:
        s, clones, depth = queue.popleft()
        if best[s] < clones:
            continue
        for lab, t, is_clone in _labeled(s):
            if lab.kind != TAU and not all_labels:
                continue
            c = clones + (1 if is_clone and lab.kind == TAU else 0)
            if all_labels:
                edges.append(Edge(s, lab, t))
            nd = depth + 1 if lab.kind == TAU else depth
            if c > b.max_clones or nd > b.max_tau_depth:
                cut.append((s, t, c))
                continue
            prev = best.get(t)
            if prev is not None and prev <= c:
                continue
            if prev is None:
                if len(best) >= b.max_states:
                    full = True
                    cut.append((s, t, c))
                    continue
                order.append(t)
            best[t] = c
            queue.append((t, c, nd))
    pruned = {s for s, t, c in cut if best.get(t, c + 1) > c}
    edges = sorted(set(edges), key=lambda e: (e.src.key, e.label.sort_key, e.dst.key))
    return Exploration(order, edges, full or bool(pruned), pruned)


def weak_tau(s: State, b: Optional[ExploreBudget] = None) -> tuple[frozenset, bool]:
    """States reachable from ``s`` by tau steps within the budget."""
    ex = _explore([s], b or ExploreBudget(), all_labels=False)
    return frozenset(ex.order), ex.truncated


def weak_step(s: State, label: Label, b: Optional[ExploreBudget] = None) -> tuple[frozenset, bool]:
    """Weak transition: tau closure, one ``label`` step, tau closure.

    Each closure gets the full budget on its own.
    """
    b = b or ExploreBudget()
    if label.kind == TAU:
        return weak_tau(s, b)
    pre, trunc = weak_tau(s, b)
    mids = set()
    for p in pre:
        for lab, t, _ in _labeled(p):
            if lab == label:
                mids.add(t)
    out = set()
    for m in sorted(mids, key=lambda x: x.key):
        post, t2 = weak_tau(m, b)
        out |= post
        trunc = trunc or t2
    return frozenset(out), trunc


def strong_barbs(s: State) -> frozenset:
    return frozenset(f.name for f in s.delta if isinstance(f, Atom))


def weak_barbs(s: State, b: Optional[ExploreBudget] = None) -> tuple[frozenset, bool]:
    closure, trunc = weak_tau(s, b)
    out = set()
    for t in closure:
        out |= strong_barbs(t)
    return frozenset(out), trunc


def explore(root: State, b: Optional[ExploreBudget] = None) -> Exploration:
    """Bounded exploration following every label, as used for graph export."""
    return _explore([root], b or ExploreBudget(), all_labels=True)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(root: State, b: Optional[ExploreBudget] = None) -> str:
    """Graphviz text for the bounded LTS under ``root``.

    Nodes are numbered in BFS order; states where the budget cut something
    off are drawn dashed.
    """
    ex = explore(root, b)
    ids = {s: i for i, s in enumerate(ex.order)}
    lines = ["digraph lts {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
    for s in ex.order:
        style = ", style=dashed" if s in ex.pruned else ""
        peripheries = ", peripheries=2" if s == root else ""
        lines.append(f'  n{ids[s]} [label="{_dot_escape(render(s))}"{peripheries}{style}];')
    edges = sorted(((ids[e.src], e.label.sort_key, ids[e.dst], e.label) for e in ex.edges
                    if e.src in ids and e.dst in ids), key=lambda x: x[:3])
    for src, _, dst, lab in edges:
        text = "τ" if lab.kind == TAU else str(lab)
        lines.append(f'  n{src} -> n{dst} [label="{text}"];')
    if ex.truncated:
        lines.append("  // budget cut off part of the graph")
    lines.append("}")
    return "\n".join(lines) + "\n"


def edges_json(root: State, b: Optional[ExploreBudget] = None) -> dict:
    ex = explore(root, b)
    return {"version": 1, "root": render(root), "truncated": ex.truncated,
            "states": [render(s) for s in ex.order],
            "edges": [e.to_json() for e in ex.edges]}
