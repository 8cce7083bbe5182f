"""``pi-hier``: command-line front end.

Exit codes: 0 positive verdict, 1 negative verdict, 2 usage or parse
error, 3 inconclusive (a bound or budget ran out).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import encodings
from .forest import (
    depth_exact, forest_of, forest_to_dot, forest_to_text, nest_nu, topology,
)
from .hierarchy import Hierarchy, HierarchyError, env_to_json, p_safety_violations, parse_env
from .inference import DEFAULT_BACKTRACKS, infer
from .normal_form import canonical, nf, pretty_nf, prune
from .reduction import DEFAULT_MAX_DEPTH, DEFAULT_MAX_STATES, check_invariance, cover, explore
from .syntax import ParseError, parse, pretty
from .tcompat import phi, tcompat_by_enumeration, tshaped_failures
from .terms import MissingAnnotation, Term
from .typecheck import typecheck

OK, NEGATIVE, USAGE, INCONCLUSIVE = 0, 1, 2, 3

# file stems accepted as shorthands for bundled examples
ALIASES = {"two_msgs": "query_two_messages", "one_msg": "query_one_message",
           "shared_secret": "query_shared_secret"}


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    if os.path.exists(path):
        with open(path) as fh:
            return fh.read()
    stem = os.path.splitext(os.path.basename(path))[0]
    stem = ALIASES.get(stem, stem)
    try:
        return encodings.corpus_entry(stem).source
    except KeyError:
        pass
    try:
        return encodings.data_text(os.path.basename(path))
    except (FileNotFoundError, OSError):
        raise UsageError(f"cannot read {path}") from None


def _term(path: str) -> Term:
    return parse(_read(path))


def _hierarchy(path: Optional[str]) -> Hierarchy:
    if path is None:
        raise UsageError("this command needs --hierarchy")
    text = _read(path)
    if text.lstrip().startswith("{"):
        return Hierarchy.from_json(text)
    return Hierarchy.parse(text)


def _env(spec: Optional[str]) -> dict:
    if spec is None:
        return {}
    text = _read(spec) if (os.path.exists(spec) or spec == "-") else spec
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        text = "\n".join(f"{k} : {v}" for k, v in data.items())
    return parse_env(text)


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------- commands

def cmd_parse(args) -> int:
    t = _term(args.file)
    _emit(args, {"term": pretty(t, annotated=not args.plain)}, pretty(t, annotated=not args.plain))
    return OK


def cmd_nf(args) -> int:
    x = nf(_term(args.file))
    if args.prune:
        x = prune(x)
    payload = {"nf": pretty_nf(x), "binders": [n.display for n in x.names],
               "actives": [pretty_nf(a) for a in x.actives]}
    if args.key:
        payload["key"] = canonical(x)
    text = pretty_nf(x) + (f"\nkey: {payload['key']}" if args.key else "")
    _emit(args, payload, text)
    return OK


def cmd_forest(args) -> int:
    t = _term(args.file)
    if args.topology:
        print(topology(nf(t)).to_dot(), end="")
        return OK
    f = forest_of(t)
    if args.dot:
        print(forest_to_dot(f), end="")
    elif not args.json:
        print(forest_to_text(f))
    if args.depth or args.json:
        nest, dep = nest_nu(t), depth_exact(prune(nf(t)))
        if args.json:
            print(json.dumps({"nest": nest, "depth": dep, "forest": forest_to_text(f)}, indent=2))
        else:
            print(f"nest: {nest}\ndepth: {dep}", file=sys.stderr if args.dot else sys.stdout)
    return OK


def cmd_tcompat(args) -> int:
    h = _hierarchy(args.hierarchy)
    x = nf(_term(args.file))
    out = phi(h, x)
    payload = out.to_json()
    if args.oracle:
        payload["oracle"] = tcompat_by_enumeration(h, x)
    if args.shaped:
        fails = tshaped_failures(h, x)
        payload["tshaped"] = not fails
        payload["tshaped_failures"] = [f"{pretty_nf(s)}: {why}" for s, why in fails]
    text = out.to_text()
    if args.oracle:
        text += f"\noracle: {'compatible' if payload['oracle'] else 'incompatible'}"
    if args.shaped:
        text += "\nT-shaped" if payload["tshaped"] else "\nnot T-shaped:\n  " + \
            "\n  ".join(payload["tshaped_failures"])
    _emit(args, payload, text)
    verdict = out.ok and (payload.get("tshaped", True))
    return OK if verdict else NEGATIVE


def cmd_check(args) -> int:
    h = _hierarchy(args.hierarchy)
    env = _env(args.env)
    t = _term(args.file)
    rep = typecheck(h, env, nf(t))
    shape = tshaped_failures(h, t)
    safety = p_safety_violations(h, env, t)
    ok = rep.ok and not shape and not safety
    payload = {"ok": ok, "typing": rep.to_json(),
               "tshaped": not shape, "tshaped_failures": [why for _, why in shape],
               "p_safe": not safety, "p_safety": safety}
    lines = [rep.to_text()]
    lines.append("T-shaped" if not shape else "not T-shaped: " + "; ".join(w for _, w in shape))
    lines.append("environment is safe" if not safety else "unsafe environment: " + "; ".join(safety))
    _emit(args, payload, "\n".join(lines))
    return OK if ok else NEGATIVE


def cmd_infer(args) -> int:
    res = infer(_term(args.file), max_backtracks=args.max_backtracks)
    if args.json:
        print(json.dumps(res.to_json(), indent=2, sort_keys=True))
    elif res.ok:
        print("typably hierarchical")
        print("hierarchy: " + " < ".join(res.hierarchy.chain_order()))
        for n, ty in res.env.items():
            print(f"free {n.display} : {ty}")
        for n, ty in res.annotations.items():
            print(f"new {n.display} : {ty}")
        print(pretty(res.annotated))
    else:
        print(f"{res.status}: {res.reason}")
        for item in res.core:
            print("  " + item.get("text", json.dumps(item)))
    if res.ok and args.emit:
        _write_solution(res, args.emit)
    return {"ok": OK, "unsat": NEGATIVE}.get(res.status, INCONCLUSIVE)


def _write_solution(res, prefix: str) -> None:
    """Write ``PREFIX.pi``, ``PREFIX.hier`` and ``PREFIX.env`` for ``check``."""
    with open(prefix + ".pi", "w") as fh:
        fh.write(pretty(res.annotated) + "\n")
    with open(prefix + ".hier", "w") as fh:
        fh.write(res.hierarchy.to_text())
    with open(prefix + ".env", "w") as fh:
        fh.write("".join(f"{n.display} : {ty}\n" for n, ty in res.env.items()))


def _bounds(args) -> dict:
    for k in ("max_states", "max_depth", "jobs"):
        if getattr(args, k) < 1:
            raise UsageError(f"--{k.replace('_', '-')} must be positive")
    return {"max_states": args.max_states, "max_depth": args.max_depth, "jobs": args.jobs}


def cmd_explore(args) -> int:
    g = explore(_term(args.file), **_bounds(args))
    if args.json:
        print(json.dumps(g.to_json(), indent=2))
    elif args.dot:
        print(g.to_dot(), end="")
    else:
        print(f"{len(g)} states, {len(g.edges)} transitions, "
              + ("complete" if g.exact else f"truncated ({g.reason})"))
        if args.verbose:
            for i, s in enumerate(g.states):
                print(f"  [{i}] depth {g.depth[i]}: {pretty_nf(s)}")
    return OK if g.exact else INCONCLUSIVE


def cmd_cover(args) -> int:
    if args.query is None:
        raise UsageError("cover needs --query")
    res = cover(_term(args.file), _term(args.query), **_bounds(args))
    text = res.verdict
    if res.covered:
        text += f" at state {res.state} (depth {res.depth}) after {res.explored} states\n"
        text += pretty_nf(res.witness)
    else:
        text += f" after {res.explored} states"
    _emit(args, res.to_json(), text)
    return {"covered": OK, "not_coverable": NEGATIVE}.get(res.verdict, INCONCLUSIVE)


def cmd_invariance(args) -> int:
    t = _term(args.file)
    if args.infer:
        r = infer(t)
        if not r.ok:
            print(f"inference failed: {r.status}: {r.reason}", file=sys.stderr)
            return NEGATIVE if r.status == "unsat" else INCONCLUSIVE
        h, env, t = r.hierarchy, r.env, r.annotated
    else:
        h, env = _hierarchy(args.hierarchy), _env(args.env)
    rep = check_invariance(h, env, t, **_bounds(args))
    text = f"{rep.explored} states checked, {len(rep.violations)} violations" + \
        ("" if rep.exact else f" (truncated: {rep.reason})")
    for v in rep.violations[:20]:
        text += f"\n  state {v.state} [{v.kind}] {v.detail}"
    _emit(args, rep.to_json(), text)
    if rep.violations:
        return NEGATIVE
    return OK if rep.exact else INCONCLUSIVE


def cmd_encode(args) -> int:
    data = json.loads(_read(args.file))
    if args.kind == "reset-net":
        net = encodings.ResetNet.from_json(data)
        marking = [int(v) for v in args.marking.split(",")] if args.marking else None
        if marking is not None and len(marking) != net.places:
            raise UsageError("marking has the wrong length")
        enc = encodings.encode_reset_net(net, marking)
        payload = {"term": pretty(enc.term), "hierarchy": enc.hierarchy.to_json(),
                   "chain": enc.hierarchy.chain_order(), "env": env_to_json(enc.env)}
        text = "\n".join([
            "// hierarchy: " + " < ".join(enc.hierarchy.chain_order()),
            "// env: " + ", ".join(f"{n.display} : {ty}" for n, ty in enc.env.items()),
            pretty(enc.term)])
    else:
        mm = encodings.MinskyMachine.from_json(data)
        regs = [int(v) for v in args.registers.split(",")] if args.registers else None
        t = encodings.encode_minsky(mm, args.label, regs)
        payload = {"term": pretty(t, annotated=False)}
        text = pretty(t, annotated=False)
    _emit(args, payload, text)
    return OK


def cmd_examples(args) -> int:
    if args.action == "list":
        rows = encodings.corpus(None)
        if args.json:
            print(json.dumps([{"name": e.name, "kind": e.kind, "typable": e.typable,
                               "hierarchical": e.hierarchical, "depth_bounded": e.depth_bounded,
                               "note": e.note} for e in rows], indent=2))
        else:
            for e in rows:
                flag = {True: "typable", False: "untypable", None: "-"}[e.typable]
                print(f"{e.name:22s} {e.kind:6s} {flag:10s} {e.note}")
        return OK
    if not args.name:
        raise UsageError("examples show needs a name")
    try:
        print(encodings.corpus_entry(args.name).source, end="")
    except KeyError:
        raise UsageError(f"no example called {args.name}") from None
    return OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pi-hier", description="Analyse pi-calculus terms against "
                                "hierarchies of base types.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help, file=True):
        sp = sub.add_parser(name, help=help)
        if file:
            sp.add_argument("file", help="term file (.pi), '-' for stdin, or a bundled example name")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(fn=fn)
        return sp

    def bounded(sp):
        sp.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
        sp.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
        sp.add_argument("--jobs", type=int, default=1)

    sp = add("parse", cmd_parse, "parse and pretty-print a term")
    sp.add_argument("--plain", action="store_true", help="omit type annotations")

    sp = add("nf", cmd_nf, "print the normal form")
    sp.add_argument("--prune", action="store_true", help="drop restrictions of unused names")
    sp.add_argument("--key", action="store_true", help="also print the canonical key")

    sp = add("forest", cmd_forest, "print the syntax forest")
    sp.add_argument("--dot", action="store_true")
    sp.add_argument("--depth", action="store_true", help="report nesting and exact depth")
    sp.add_argument("--topology", action="store_true", help="DOT hypergraph of names and actives")

    sp = add("tcompat", cmd_tcompat, "decide compatibility with a hierarchy")
    sp.add_argument("--hierarchy", required=True)
    sp.add_argument("--oracle", action="store_true", help="also run the enumeration oracle")
    sp.add_argument("--shaped", action="store_true", help="check every subterm too")

    sp = add("check", cmd_check, "type check an annotated term")
    sp.add_argument("--hierarchy", required=True)
    sp.add_argument("--env", help="'x : t[u], y : t' or a file holding that or JSON")

    sp = add("infer", cmd_infer, "infer hierarchy, annotations and environment")
    sp.add_argument("--max-backtracks", type=int, default=DEFAULT_BACKTRACKS)
    sp.add_argument("--emit", metavar="PREFIX",
                    help="write PREFIX.pi, PREFIX.hier and PREFIX.env for a later check")

    sp = add("explore", cmd_explore, "explore the reachable states")
    bounded(sp)
    sp.add_argument("--dot", action="store_true")
    sp.add_argument("-v", "--verbose", action="store_true")

    sp = add("cover", cmd_cover, "search for a state covering a query")
    sp.add_argument("--query", required=True)
    bounded(sp)

    sp = add("invariance", cmd_invariance, "re-check typing and shape on reachable states")
    sp.add_argument("--hierarchy")
    sp.add_argument("--env")
    sp.add_argument("--infer", action="store_true", help="infer the annotation first")
    bounded(sp)

    sp = add("encode", cmd_encode, "encode a reset net or a Minsky machine", file=False)
    sp.add_argument("kind", choices=["reset-net", "minsky"])
    sp.add_argument("file", help="JSON description")
    sp.add_argument("--marking", help="reset nets: comma-separated marking")
    sp.add_argument("--label", type=int, help="Minsky machines: current instruction")
    sp.add_argument("--registers", help="Minsky machines: comma-separated counter values")

    sp = add("examples", cmd_examples, "list or show bundled examples", file=False)
    sp.add_argument("action", choices=["list", "show"])
    sp.add_argument("name", nargs="?")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        return args.fn(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
    except (UsageError, HierarchyError, MissingAnnotation, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
    return USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
