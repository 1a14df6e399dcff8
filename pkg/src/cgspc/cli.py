"""Command-line interface: ``cgspc {check,reduce,win,paths,validate,sweep}``.

Exit status: 0 true / clean, 1 false / diagnostics found, 2 malformed input,
3 resource cap exceeded, 4 contract violation (e.g. a strategy playing a
disabled action).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from collections import deque

from cgspc.checker import DEFAULT_STRATEGY_CAP, ModelChecker, coalition_options, ewin
from cgspc.document import (
    GameDocument,
    document_diagnostics,
    load_document,
    parse_agent,
    parse_set_literal,
    parse_strategy,
    print_document,
    print_strategy,
    read_source,
)
from cgspc.errors import CgsError, InputError, PreconditionError, ResourceError, TotalityError
from cgspc.formulas import check_vocabulary, is_state_formula, parse, render, translate_tr
from cgspc.randomgen import random_shared_structure, random_state_formula
from cgspc.reduction import build_epc, verify_theorem
from cgspc.structures import DEFAULT_ATOM_CAP, agent_label, format_set, run

EXIT_TRUE, EXIT_FALSE, EXIT_INPUT, EXIT_RESOURCE, EXIT_CONTRACT = 0, 1, 2, 3, 4


# -- reports ---------------------------------------------------------------


def _text(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, dict):
                lines.append(pad + "- " + ", ".join(f"{k}={_scalar(v)}" for k, v in item.items()))
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(pad + _scalar(value))
    return lines


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def emit(report: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(report, indent=2) + "\n")
    else:
        out.write("\n".join(_text(report)) + "\n")


def _stats(stats) -> dict:
    return {"search_nodes": stats.nodes, "ltl_checks": stats.ltl_checks,
            "states_labelled": stats.states_labelled}


# -- helpers ---------------------------------------------------------------


def _load(args) -> GameDocument:
    doc = load_document(args.document, args.cap_atoms)
    problems = document_diagnostics(doc, behavioural=False)
    if problems:
        raise InputError("; ".join(str(d) for d in problems))
    return doc


def _states(doc: GameDocument, literals) -> list:
    G = doc.structure
    if literals:
        return [G.check_state(parse_set_literal(x)) for x in literals]
    if doc.initial is not None:
        return [doc.initial]
    return list(G.states())


# -- commands --------------------------------------------------------------


def cmd_check(args) -> int:
    doc = _load(args)
    G = doc.structure
    phi = parse(args.formula, G.agents)
    if args.tr:
        phi = translate_tr(phi)
    check_vocabulary(phi, G.atoms, G.agents)
    if not is_state_formula(phi):
        raise InputError(f"{render(phi)} is a path formula; wrap it in a coalition")
    states = _states(doc, args.state)
    t0 = time.perf_counter()
    mc = ModelChecker(G, args.cap_strategies)
    results = [{"state": format_set(s), "verdict": mc.holds(phi, s)} for s in states]
    verdict = all(r["verdict"] for r in results)
    report = {"command": "check", "document": args.document, "formula": render(phi),
              "results": results, "verdict": verdict, "stats": _stats(mc.stats)}
    _timing(args, report, t0)
    emit(report, args.format)
    return EXIT_TRUE if verdict else EXIT_FALSE


def cmd_reduce(args) -> int:
    doc = _load(args)
    G = doc.structure
    t0 = time.perf_counter()
    img = build_epc(G, atom_cap=args.cap_atoms)
    reduced = GameDocument("reduced", img.epc)
    text = print_document(reduced)
    sidecar = {
        "source_atoms": list(G.atoms),
        "turn": img.turn_atom,
        "aggregator": agent_label(img.star_agent),
        "copies": [{"atom": c, "agent": i, "of": p} for (i, p), c in sorted(img.copy_atoms.items())],
    }
    sidecar_path = args.output + ".atoms.json"
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(sidecar, indent=2) + "\n")
    report = {"command": "reduce", "document": args.document, "output": args.output,
              "sidecar": sidecar_path, "agents": [agent_label(i) for i in img.epc.agents],
              "atoms": list(img.epc.atoms), "atom_count": len(img.epc.atoms)}
    _timing(args, report, t0)
    emit(report, args.format)
    return EXIT_TRUE


def cmd_win(args) -> int:
    doc = _load(args)
    G = doc.structure
    agent = parse_agent(args.agent)
    G.position(agent)
    if args.state:
        s = G.check_state(parse_set_literal(args.state))
    elif doc.initial is not None:
        s = doc.initial
    else:
        raise InputError("no --state given and the document has no 'init' line")
    result = ewin(G, doc.goals, agent, s, strategy_cap=args.cap_strategies)
    report = {"command": "win", "document": args.document, "agent": agent_label(agent),
              "goal": render(doc.goals[agent]), "state": format_set(s), "verdict": result.verdict}
    if result.witness is not None:
        table = result.witness.assignments[agent]
        report["witness"] = [f"{format_set(t)} : {format_set(table[t])}"
                             for t in sorted(table, key=G.index)]
        if args.strategy_out:
            with open(args.strategy_out, "w", encoding="utf-8") as fh:
                fh.write(print_strategy(result.witness, G))
    report["stats"] = _stats(result.stats)
    if args.timing:
        report["seconds"] = round(result.seconds, 6)
    emit(report, args.format)
    return EXIT_TRUE if result.verdict else EXIT_FALSE


def cmd_paths(args) -> int:
    doc = _load(args)
    G = doc.structure
    s = G.check_state(parse_set_literal(args.state))
    profile = parse_strategy(read_source(args.strategy), G)
    report = {"command": "paths", "document": args.document, "state": format_set(s),
              "agents": [agent_label(i) for i in sorted(profile.assignments, key=G.position)]}
    if set(profile.assignments) == set(G.agents):
        lasso = run(G, s, profile)
        report["kind"] = "lasso"
        report["prefix"] = [format_set(t) for t in lasso.prefix]
        report["cycle"] = [format_set(t) for t in lasso.cycle]
    else:
        members = sorted(profile.assignments, key=G.position)
        depth = {s: 0}
        queue = deque([s])
        edges = []
        while queue:
            t = queue.popleft()
            if depth[t] >= args.bound:
                continue
            succ = sorted(_step(G, profile, members, t), key=G.index)
            edges.append({"depth": depth[t], "from": format_set(t),
                          "to": " ".join(format_set(u) for u in succ)})
            for u in succ:
                if u not in depth:
                    depth[u] = depth[t] + 1
                    queue.append(u)
        report["kind"] = "tree"
        report["bound"] = args.bound
        report["edges"] = edges
        report["reached"] = [format_set(t) for t in sorted(depth, key=G.index)]
    emit(report, args.format)
    return EXIT_TRUE


def _step(G, profile, members, t) -> frozenset:
    """Successors of ``t`` when ``members`` follow ``profile``; others act freely."""
    choice = tuple(profile.action(i, t) for i in members)
    for opt in coalition_options(G, members, t):
        if opt.choice == choice:
            return opt.succ
    raise PreconditionError(f"strategy plays a non-enabled action at {format_set(t)}")


def cmd_validate(args) -> int:
    try:
        doc = load_document(args.document, args.cap_atoms)
    except ResourceError:
        raise
    except InputError as exc:
        diagnostics = [{"code": "ParseError", "message": str(exc)}]
    else:
        diagnostics = [{"code": d.code, "message": d.message} for d in document_diagnostics(doc)]
    report = {"command": "validate", "document": args.document,
              "diagnostics": diagnostics, "valid": not diagnostics}
    emit(report, args.format)
    return EXIT_TRUE if not diagnostics else EXIT_FALSE


def cmd_sweep(args) -> int:
    """Random shared structures: compare phi on G with tr(phi) on G' at every state."""
    rng = random.Random(args.seed)
    t0 = time.perf_counter()
    checks = agree = 0
    disagreements = []
    for n in range(args.instances):
        G = random_shared_structure(rng)
        img = build_epc(G)
        phi = random_state_formula(rng, G.atoms, G.agents, args.depth)
        for s in G.states():
            r = verify_theorem(G, s, phi, img=img, strategy_cap=args.cap_strategies)
            checks += 1
            if r.agree:
                agree += 1
            else:
                disagreements.append({"instance": n, "formula": render(phi), "state": format_set(s),
                                      "shared": r.spc_verdict, "exclusive": r.epc_verdict})
    report = {"command": "sweep", "seed": args.seed, "instances": args.instances,
              "depth": args.depth, "checks": checks, "agreements": agree,
              "disagreements": disagreements}
    _timing(args, report, t0)
    emit(report, args.format)
    return EXIT_TRUE if not disagreements else EXIT_FALSE


def _timing(args, report: dict, t0: float) -> None:
    # wall-clock time is opt-in so that default reports are reproducible byte for byte
    if args.timing:
        report["seconds"] = round(time.perf_counter() - t0, 6)


# -- entry point -----------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--cap-atoms", type=int, default=default(DEFAULT_ATOM_CAP),
                        help=f"refuse structures with more atoms (default {DEFAULT_ATOM_CAP})")
    parser.add_argument("--cap-strategies", type=int, default=default(DEFAULT_STRATEGY_CAP),
                        help=f"abort a strategy search after this many nodes (default {DEFAULT_STRATEGY_CAP})")
    parser.add_argument("--format", choices=("text", "json"), default=default("text"))
    parser.add_argument("--seed", type=int, default=default(0), help="seed for randomized sweeps")
    parser.add_argument("--timing", action="store_true", default=default(False),
                        help="add wall-clock seconds to reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgspc",
        description="Model checking and reduction of game structures with shared propositional control.")
    _global_flags(parser, suppress=False)
    # the same flags are accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="decide a state formula")
    p.add_argument("document", help="document path or bundled:<name>")
    p.add_argument("formula")
    p.add_argument("--state", action="append",
                   help="state literal such as {p,q}; repeatable (default: init, else every state)")
    p.add_argument("--tr", action="store_true", help="check the translation (doubled next operators)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", parents=[common], help="write the exclusive-control structure")
    p.add_argument("document")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("win", parents=[common], help="does an agent have a memoryless winning strategy?")
    p.add_argument("document")
    p.add_argument("agent")
    p.add_argument("--state")
    p.add_argument("--strategy-out", help="write the witness as a strategy file")
    p.set_defaults(func=cmd_win)

    p = sub.add_parser("paths", parents=[common], help="list the computations of a strategy profile")
    p.add_argument("document")
    p.add_argument("--state", required=True)
    p.add_argument("--strategy", required=True, help="strategy file")
    p.add_argument("--bound", type=int, default=4, help="depth for partial profiles")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("validate", parents=[common], help="list diagnostics for a document")
    p.add_argument("document")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", parents=[common], help="randomized agreement check between G and G'")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--depth", type=int, default=3)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        code, msg = EXIT_RESOURCE, str(exc)
    except InputError as exc:
        code, msg = EXIT_INPUT, str(exc)
    except (PreconditionError, TotalityError) as exc:
        code, msg = EXIT_CONTRACT, str(exc)
    except CgsError as exc:
        code, msg = EXIT_CONTRACT, str(exc)
    print(f"cgspc: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
