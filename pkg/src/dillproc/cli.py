"""Command-line front end.

Exit codes: 0 holds / proved / success, 1 fails / refuted, 2 unknown,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, preorders, prover, semantics
from .syntax import ParseError, parse_sequent, parse_state, render
from .verdict import exit_code

EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)


def _state(text: str, what: str):
    try:
        return parse_state(text)
    except ParseError as e:
        raise UsageError(f"{what}: {e}") from None


# --------------------------------------------------------------------------
# budgets from the global flags


def _search_budget(args, base=None) -> prover.SearchBudget:
    b = base or prover.SearchBudget()
    if args.budget_depth is not None:
        b = replace(b, max_depth=args.budget_depth)
    if args.budget_states is not None:
        b = replace(b, max_nodes=args.budget_states)
    if args.budget_clones is not None:
        b = replace(b, max_clones_per_branch=args.budget_clones)
    return b


def _explore_budget(args, base=None) -> semantics.ExploreBudget:
    b = base or semantics.ExploreBudget()
    if args.budget_depth is not None:
        b = replace(b, max_tau_depth=args.budget_depth)
    if args.budget_states is not None:
        b = replace(b, max_states=args.budget_states)
    if args.budget_clones is not None:
        b = replace(b, max_clones=args.budget_clones)
    return b


def _sim_config(args, base=None) -> preorders.SimConfig:
    base = base or preorders.SimConfig()
    return replace(base, explore=_explore_budget(args, base.explore))


def _budgets(args, base=None) -> harness.Budgets:
    base = base or harness.Budgets()
    return harness.Budgets(_search_budget(args, base.search), _sim_config(args, base.sim))


def _check_positive(args):
    for name in ("budget_depth", "budget_states", "budget_clones"):
        v = getattr(args, name)
        if v is not None and v <= 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


# --------------------------------------------------------------------------
# output helpers


def _verdict_text(v) -> str:
    lines = [f"{v.status}  ({v.method}: {render(v.left)}  <=  {render(v.right)})"]
    if v.holds and isinstance(v.witness, dict):
        if "pairs" in v.witness:
            lines.append(f"witness relation: {len(v.witness['pairs'])} pairs")
            for p in v.witness["pairs"]:
                lines.append(f"  ({p['left']})  <=  ({p['right']})")
        elif "derivation" in v.witness:
            d = prover.Derivation.from_json(v.witness["derivation"])
            lines.append(d.render_tree())
    elif v.fails and isinstance(v.trace, dict):
        if "spine" in v.trace:
            lines.append("refutation (first failing branch):")
            for step in v.trace["spine"]:
                lines.append(f"  ({step['left']})  vs  ({step['right']}): "
                             f"clause {step['clause']}, challenge {step['challenge']}, "
                             f"{step['responses']} candidate responses")
        elif "context" in v.trace:
            lines.append(f"context: {v.trace['context']}")
            lines.append(f"violation: {_dump(v.trace['violation'])}")
        elif "sequent" in v.trace:
            lines.append(f"no derivation of {v.trace['sequent']}")
        if v.extra.get("contextual_witness"):
            cw = v.extra["contextual_witness"]
            lines.append(f"direct contextual counterexample under context {cw['context']}")
    elif v.unknown:
        lines.append(f"reason: {v.reason}")
    return "\n".join(lines)


def _emit(args, text: str, obj):
    print(_dump(obj) if args.json else text)


# --------------------------------------------------------------------------
# commands


def cmd_prove(args) -> int:
    try:
        seq = parse_sequent(args.sequent)
    except ParseError as e:
        raise UsageError(f"sequent: {e}") from None
    res = prover.prove(seq, _search_budget(args))
    text = res.status
    if res.proved:
        text += "\n" + res.derivation.render_tree()
    elif res.unknown:
        text += f"\nreason: {res.reason}"
    _emit(args, text, res.to_json())
    return {prover.PROVED: 0, prover.REFUTED: 1}.get(res.status, 2)


def cmd_check_deriv(args) -> int:
    try:
        obj = json.loads(Path(args.file).read_text(encoding="utf-8"))
        if "derivation" in obj and "rule" not in obj:
            obj = obj["derivation"]
        d = prover.Derivation.from_json(obj)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot read a derivation from {args.file}: {e}") from None
    res = prover.check_derivation(d)
    text = "valid" if res.ok else f"invalid at node {list(res.path)}: {res.reason}"
    _emit(args, text, dict(res.to_json(), version=1, conclusion=render(d.conclusion)))
    return 0 if res.ok else 1


def cmd_step(args) -> int:
    s = _state(args.state, "state")
    steps = sorted(set(semantics.reduction_steps(s)), key=lambda rs: (rs[1].key, rs[0]))
    text = "\n".join(f"{rule:>6}  ->  {render(t)}" for rule, t in steps) or "(no reductions)"
    obj = {"version": 1, "state": render(s),
           "reductions": [{"rule": r, "to": render(t)} for r, t in steps]}
    _emit(args, text, obj)
    return 0


def cmd_lts(args) -> int:
    s = _state(args.state, "state")
    b = _explore_budget(args)
    if args.dot:
        Path(args.dot).write_text(semantics.export_dot(s, b), encoding="utf-8")
    if args.all:
        obj = semantics.edges_json(s, b)
        edges = obj["edges"]
    else:
        edges = [e.to_json() for e in semantics.lts_successors(s)]
        obj = {"version": 1, "root": render(s), "edges": edges}
    text = "\n".join(f"({e['from']})  --{e['label']}-->  ({e['to']})" for e in edges) or "(no transitions)"
    if args.all and obj["truncated"]:
        text += "\n(exploration cut off by the budget)"
    _emit(args, text, obj)
    return 0


def cmd_barbs(args) -> int:
    s = _state(args.state, "state")
    strong = sorted(semantics.strong_barbs(s))
    weak, trunc = semantics.weak_barbs(s, _explore_budget(args))
    weak = sorted(weak)
    text = f"strong: {', '.join(strong) or '-'}\nweak: {', '.join(weak) or '-'}"
    if trunc:
        text += "\n(weak barbs computed on a truncated closure)"
    _emit(args, text, {"version": 1, "state": render(s), "strong": strong, "weak": weak,
                       "truncated": trunc})
    return 0


def _pair(args):
    return _state(args.left, "left state"), _state(args.right, "right state")


def cmd_sim(args) -> int:
    s1, s2 = _pair(args)
    v = preorders.simulate(s1, s2, _sim_config(args))
    text = _verdict_text(v)
    if args.certify:
        from .certify import validate
        rep = validate(v)
        v.extra["certificate"] = rep.to_json()
        text += f"\nindependent check: {'ok' if rep.ok else 'FAILED'} ({rep.checked} items)"
        for err in rep.errors[:10]:
            text += f"\n  {err}"
        if not rep.ok:
            _emit(args, text, v.to_json())
            return 3
    _emit(args, text, v.to_json())
    return exit_code(v.status)


def cmd_ctx(args) -> int:
    s1, s2 = _pair(args)
    cfg = _sim_config(args)
    if args.context:
        contexts = [_state(c, "context") for c in args.context]
        v = preorders.contextual_falsify(s1, s2, contexts, cfg, depth=args.depth)
    else:
        v = preorders.contextual_preorder(s1, s2, cfg, battery_size=args.battery)
    _emit(args, _verdict_text(v), v.to_json())
    return exit_code(v.status)


def cmd_logical(args) -> int:
    s1, s2 = _pair(args)
    v = prover.logical_preorder(s1, s2, _search_budget(args))
    _emit(args, _verdict_text(v), v.to_json())
    return exit_code(v.status)


def cmd_crosscheck(args) -> int:
    if args.replay:
        try:
            record = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot read replay file {args.replay}: {e}") from None
        out = harness.replay(record)
        text = (f"({out['left']})  <=  ({out['right']})\n"
                f"logical: {out['logical']}\nsimulation: {out['simulation']}\n"
                f"{'CONFLICT' if out['conflict'] else 'no conflict'}")
        _emit(args, text, dict(out, version=1))
        return 1 if out["conflict"] else 0
    try:
        spec, budgets, thresholds = harness.load_preset(args.preset)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    if args.seed is not None:
        spec.seed = args.seed
    budgets = _budgets(args, budgets)
    rep = harness.crosscheck(spec, budgets, validate=not args.no_validate)
    if args.write_replays:
        d = Path(args.write_replays)
        d.mkdir(parents=True, exist_ok=True)
        for i, rec in enumerate(rep.disagreements):
            (d / f"disagreement-{i:03d}.json").write_text(_dump(rec) + "\n", encoding="utf-8")
    limit = thresholds.get("max_unknown_rate", 1.0)
    obj = dict(rep.to_json(), preset=args.preset, thresholds=thresholds)
    text = f"preset: {args.preset}\n" + rep.table()
    invalid = rep.validation.get("invalid", []) if rep.validation else []
    ok = not rep.disagreements and rep.unknown_rate <= limit and not invalid
    obj["ok"] = ok
    if rep.unknown_rate > limit:
        text += f"\nunknown rate above the preset threshold {limit:.0%}"
    _emit(args, text, obj)
    return 0 if ok else 1


_SUITES = ("lemmas", "harmony", "coincidence", "laws", "precongruence", "all")


def cmd_suite(args) -> int:
    try:
        spec, budgets, _ = harness.load_preset(args.preset)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    if args.seed is not None:
        spec.seed = args.seed
    budgets = _budgets(args, budgets)
    which = _SUITES[:-1] if args.check == "all" else (args.check,)
    results = {}
    lines = []
    for name in which:
        if name == "lemmas":
            r = harness.metamorphic_suite(spec, budgets)
            for c in r["checks"]:
                lines.append(f"{c['name']:<32} checked {c['checked']:>6}  unknown {c['unknown']:>4}  "
                             f"violations {len(c['violations'])}")
        elif name == "harmony":
            r = harness.harmony_check(spec.atoms, args.size, budgets)
            lines.append(f"{'harmony':<32} checked {r['checked']:>6}  unknown {r['unknown']:>4}  "
                         f"contradictions {len(r['contradictions'])}")
        elif name == "coincidence":
            r = harness.tau_reduction_coincidence(spec.atoms, args.size,
                                                  max_clones=budgets.sim.explore.max_clones)
            lines.append(f"{'tau/reduction coincidence':<32} states {r['states']:>6}  "
                         f"step mismatches {len(r['step_mismatches'])}  "
                         f"layer mismatches {len(r['layer_mismatches'])}")
        elif name == "laws":
            r = harness.preorder_laws(spec, budgets, samples=args.samples)
            lines.append(f"{'preorder laws':<32} checked {r['checked']:>6}  unknown {r['unknown']:>4}  "
                         f"violations {len(r['violations'])}")
        else:
            r = harness.precongruence_sample(spec, budgets, samples=args.samples)
            lines.append(f"{'precongruence':<32} checked {r['checked']:>6}  unknown {r['unknown']:>4}  "
                         f"violations {len(r['violations'])}")
        results[name] = r
    ok = all(r["ok"] for r in results.values())
    lines.append("all checks passed" if ok else "VIOLATIONS FOUND")
    _emit(args, "\n".join(lines), {"version": 1, "preset": args.preset, "results": results, "ok": ok})
    return 0 if ok else 1


# --------------------------------------------------------------------------


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # the copy attached to each subcommand must not overwrite values that
    # were given before the subcommand name
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--json", action="store_true", help="machine-readable output", **kw)
    g.add_argument("--budget-depth", type=int, metavar="N",
                   help="proof search depth and silent-step depth of explorations", **kw)
    g.add_argument("--budget-states", type=int, metavar="N",
                   help="proof search nodes and explored states", **kw)
    g.add_argument("--budget-clones", type=int, metavar="N",
                   help="copies from the unrestricted context per branch or path", **kw)
    g.add_argument("--seed", type=int, help="seed for sampled enumerations", **kw)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = _Parser(prog="dillproc", description=__doc__.splitlines()[0],
                parents=[_global_flags(suppress=False)])
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, help_, fn):
        sp = sub.add_parser(name, help=help_, description=help_, parents=[common])
        sp.set_defaults(fn=fn)
        return sp

    sp = add("prove", "search for a derivation of a sequent", cmd_prove)
    sp.add_argument("sequent", help='e.g. ". ; a * b |- b * a"')
    sp = add("check-deriv", "check a derivation stored as JSON", cmd_check_deriv)
    sp.add_argument("file", help="output of prove --json, or a bare derivation")
    sp = add("step", "list the one-step reductions of a state", cmd_step)
    sp.add_argument("state")
    sp = add("lts", "labeled transitions of a state", cmd_lts)
    sp.add_argument("state")
    sp.add_argument("--dot", metavar="FILE", help="write the bounded transition graph as DOT")
    sp.add_argument("--all", action="store_true", help="list every edge of the bounded graph")
    sp = add("barbs", "strong and weak barbs of a state", cmd_barbs)
    sp.add_argument("state")
    for name, help_, fn in (("sim", "simulation preorder: is LEFT simulated by RIGHT", cmd_sim),
                            ("ctx", "contextual preorder", cmd_ctx),
                            ("logical", "logical preorder", cmd_logical)):
        sp = add(name, help_, fn)
        sp.add_argument("left")
        sp.add_argument("right")
        if name == "sim":
            sp.add_argument("--certify", action="store_true",
                            help="re-check the witness or refutation independently")
        if name == "ctx":
            sp.add_argument("--context", action="append", metavar="STATE",
                            help="only search for a counterexample under these contexts")
            sp.add_argument("--battery", type=int, default=2, metavar="N",
                            help="size of the generated contexts (default 2)")
            sp.add_argument("--depth", type=int, default=3, metavar="N",
                            help="reduction depth of the direct search (default 3)")
    sp = add("crosscheck", "compare the logical and simulation preorders", cmd_crosscheck)
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--preset", choices=sorted(harness.presets()))
    grp.add_argument("--replay", metavar="FILE", help="re-run one recorded pair")
    sp.add_argument("--no-validate", action="store_true",
                    help="skip independent checking of witnesses and refutations")
    sp.add_argument("--write-replays", metavar="DIR", help="write one replay file per disagreement")
    sp = add("suite", "property checks over a preset", cmd_suite)
    sp.add_argument("--preset", default="tiny", choices=sorted(harness.presets()))
    sp.add_argument("--check", default="lemmas", choices=_SUITES)
    sp.add_argument("--size", type=int, default=6, help="state size bound for harmony/coincidence")
    sp.add_argument("--samples", type=int, default=200, help="sample count for laws/precongruence")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        _check_positive(args)
        return args.fn(args)
    except UsageError as e:
        print(f"dillproc {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))
