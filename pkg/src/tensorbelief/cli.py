"""Command-line front end: ``query``, ``check`` and ``random``.

Exit codes: 0 success, 1 usage error, 2 network load/validation failure,
3 evidence error, 4 contradictory evidence, 5 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import ExitStack

import numpy as np

from .engine import Mode, commit, propagate
from .errors import (
    EvidenceError,
    ModelError,
    OracleCapError,
    ZeroMassError,
)
from .model import BeliefNetwork, Evidence, assignment_labels, load_evidence, load_network, render_network
from .oracle import DEFAULT_CAP, enumerate_joint, joint_size, optimum_count, oracle_mpe, random_polytree

EXIT_OK, EXIT_USAGE, EXIT_NETWORK, EXIT_EVIDENCE, EXIT_CONTRADICTION, EXIT_MISMATCH = range(6)
CHECK_TOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_net(path: str) -> BeliefNetwork:
    try:
        text = _read(path)
    except OSError as exc:
        raise ModelError(f"cannot read network: {exc}") from None
    return load_network(text)


def _parse_evidence(args, net: BeliefNetwork) -> Evidence:
    inline = args.evidence or args.likelihood
    if inline and args.evidence_file:
        raise UsageError("inline evidence and --evidence-file are mutually exclusive")
    if args.evidence_file:
        try:
            text = _read(args.evidence_file)
        except OSError as exc:
            raise EvidenceError(f"cannot read evidence: {exc}") from None
        return load_evidence(text, net)
    hard, soft = {}, {}
    for item in args.evidence or []:
        var, sep, state = item.partition("=")
        if not sep or not var or not state:
            raise UsageError(f"--evidence expects VAR=state, got {item!r}")
        hard[var] = state
    for item in args.likelihood or []:
        var, sep, values = item.partition(":")
        if not sep or not var:
            raise UsageError(f"--likelihood expects VAR:v1,v2,..., got {item!r}")
        try:
            soft[var] = [float(x) for x in values.split(",")]
        except ValueError:
            raise EvidenceError(f"bad likelihood values in {item!r}") from None
    return Evidence.from_labels(net, hard, soft)


def _beliefs(net: BeliefNetwork, eq) -> dict:
    return {
        v: dict(zip(net.variables[v].states, (float(x) for x in r.bel.flat)))
        for v, r in sorted(eq.results.items())
    }


def _modes(name: str) -> list[Mode]:
    return {"update": [Mode.SUM], "revise": [Mode.MAX], "both": [Mode.SUM, Mode.MAX]}[name]


def _run(net, e, modes, trace=None, order="bfs", seed=None):
    out = {}
    for mode in modes:
        eq = propagate(net, e, mode, order=order, seed=seed, trace=trace)
        out[mode] = (eq, commit(net, eq, e) if mode is Mode.MAX else None)
    return out


def _report(net, runs) -> dict:
    report = {
        "modes": [m.value for m in runs],
        "beliefs": {m.value: _beliefs(net, eq) for m, (eq, _) in runs.items()},
        "emissions": {m.value: eq.emissions for m, (eq, _) in runs.items()},
    }
    if Mode.MAX in runs:
        c = runs[Mode.MAX][1]
        report["commitment"] = {"assignment": assignment_labels(net, c.assignment), "score": c.score}
    return report


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
        return
    lines = []
    for mode, beliefs in report["beliefs"].items():
        lines.append(f"[{mode}] ({report['emissions'][mode]} messages)")
        for var, dist in beliefs.items():
            vals = "  ".join(f"{s}={p:.6g}" for s, p in dist.items())
            lines.append(f"  {var}: {vals}")
    if "commitment" in report:
        c = report["commitment"]
        assign = ", ".join(f"{v}={s}" for v, s in c["assignment"].items())
        lines.append(f"commitment: {assign}  score={c['score']:.6g}")
    if "oracle_check" in report:
        lines.append(f"oracle check: {report['oracle_check']}")
    sys.stdout.write("\n".join(lines) + "\n")


def oracle_mismatches(net: BeliefNetwork, e: Evidence, runs, cap: int = DEFAULT_CAP) -> list[str]:
    """Compare engine results with brute-force enumeration; returns problem descriptions."""
    problems = []
    table = enumerate_joint(net, e, cap)
    if table.data.max() <= 0:
        raise ZeroMassError("evidence has zero probability")
    if Mode.SUM in runs:
        eq = runs[Mode.SUM][0]
        for v in net.ids:
            m = table.marginal(v)
            m = m / m.sum()
            diff = float(np.max(np.abs(m - eq.results[v].bel.flat)))
            if diff > CHECK_TOL:
                problems.append(f"marginal of {v} differs from enumeration by {diff:.3g}")
    if Mode.MAX in runs:
        c = runs[Mode.MAX][1]
        w, best = oracle_mpe(net, e, cap)
        if abs(c.score - best) > CHECK_TOL * best:
            problems.append(f"commitment score {c.score!r} != enumerated maximum {best!r}")
        if optimum_count(table) == 1 and c.assignment != w:
            problems.append(f"commitment {c.assignment} != unique enumerated optimum {w}")
    return problems


def _add_evidence_flags(p):
    p.add_argument("--network", required=True, help="network document, '-' for stdin")
    p.add_argument("--evidence", action="append", metavar="VAR=STATE")
    p.add_argument("--likelihood", action="append", metavar="VAR:V1,V2,...")
    p.add_argument("--evidence-file")
    p.add_argument("--mode", choices=["update", "revise", "both"], default="both")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--order", choices=["bfs", "random"], default="bfs")
    p.add_argument("--seed", type=int, default=None, help="seed for --order random")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensorbelief", description="Exact belief updating and revision on polytrees.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    q = sub.add_parser("query", help="compute beliefs and the belief commitment")
    _add_evidence_flags(q)
    q.add_argument("--trace", help="write one JSON line per emitted message to this file")
    c = sub.add_parser("check", help="compare both modes with brute-force enumeration")
    _add_evidence_flags(c)
    c.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum joint table size")
    r = sub.add_parser("random", help="print a random STRICT polytree")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--nodes", type=int, required=True)
    r.add_argument("--max-card", type=int, default=4)
    r.add_argument("--max-parents", type=int, default=3)
    return parser


def run_random(args) -> int:
    if args.nodes < 1 or args.max_card < 2 or args.max_parents < 1:
        raise UsageError("--nodes must be >= 1, --max-card >= 2 and --max-parents >= 1")
    sys.stdout.write(render_network(random_polytree(args.seed, args.nodes, args.max_card, args.max_parents)))
    return EXIT_OK


def run_query(args) -> int:
    net = _load_net(args.network)
    e = _parse_evidence(args, net)
    with ExitStack() as stack:
        trace = stack.enter_context(open(args.trace, "w", encoding="utf-8")) if args.trace else None
        runs = _run(net, e, _modes(args.mode), trace, args.order, args.seed)
    _emit(_report(net, runs), args.format)
    return EXIT_OK


def run_check(args) -> int:
    net = _load_net(args.network)
    e = _parse_evidence(args, net)
    if joint_size(net) > args.cap:
        raise OracleCapError(f"joint table has {joint_size(net)} entries, above the cap of {args.cap}")
    runs = _run(net, e, _modes(args.mode), None, args.order, args.seed)
    problems = oracle_mismatches(net, e, runs, args.cap)
    if problems:
        for p in problems:
            print(f"mismatch: {p}", file=sys.stderr)
        return EXIT_MISMATCH
    report = _report(net, runs)
    report["oracle_check"] = "pass"
    _emit(report, args.format)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"query": run_query, "check": run_check, "random": run_random}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleCapError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except EvidenceError as exc:
        print(f"evidence error: {exc}", file=sys.stderr)
        return EXIT_EVIDENCE
    except ModelError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except ZeroMassError as exc:
        print(f"contradictory evidence: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTION


if __name__ == "__main__":
    sys.exit(main())
