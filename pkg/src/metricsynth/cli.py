"""Command-line front end.

Verbs: validate, synth, verify, certify, fault-bound, simulate,
export-dot, example.  Reports go to stdout as JSON with exact-rational
strings; diagnostics go to stderr.  Exit codes: 0 success/certified,
1 violation/uncertified/analysis failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .certificates import (
    check_clf,
    check_rank,
    lipschitz_constant,
    sigma_bound_from_certificate,
)
from .docio import (
    DocumentError,
    export_dot,
    parse_certificate,
    parse_document,
    parse_strategy,
    serialize_document,
)
from .faults import compute_fault_bound, exhaustive_adversary_search, simulate_run
from .genbuchi import genbuchi_fixpoint, synthesize_genbuchi, verify_genbuchi_sigma
from .library import generate_gray_code, generate_leader_election, running_example
from .model import IndexedStrategy, MemorylessStrategy, validate_automaton
from .parity import parity_fixpoint, synthesize_parity, verify_parity_sigma
from .rationals import INF, format_scalar
from .reach import fixpoint_opt, synthesize_optimal, verify_strategy_sigma

USAGE_ERROR = 2
ANALYSIS_FAILURE = 1


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(report: dict) -> None:
    print(json.dumps(report, indent=2, ensure_ascii=False))


def _strategy_table(strategy) -> dict:
    if isinstance(strategy, MemorylessStrategy):
        return {q: list(v) for q, v in strategy.choices.items()}
    table: dict = {}
    for (q, index), v in strategy.choices.items():
        table.setdefault(q, {})[str(index)] = list(v)
    return table


def _values_table(values: dict) -> dict:
    out = {}
    for q, value in values.items():
        if isinstance(value, tuple):
            out[q] = [format_scalar(c) for c in value]
        else:
            out[q] = format_scalar(value)
    return out


def _report_common(verb: str, a, report) -> dict:
    doc: dict = {
        "verb": verb,
        "objective": a.acceptance.kind,
        "sigma": format_scalar(report.sigma),
        "sigma_times_gamma": format_scalar(report.sigma_times_gamma),
        "gamma_bar": format_scalar(report.gamma_bar),
        "exact_win": report.exact_win,
        "strategy": _strategy_table(report.strategy),
    }
    kind = a.acceptance.kind
    if kind in ("reachability", "buchi"):
        doc["sigma_min"] = format_scalar(report.sigma)
        doc["inflated_target_set"] = list(report.inflated_F)
        doc["opt_star"] = _values_table(report.opt_star.values)
        doc["iterations"] = report.opt_star.iterations
    elif kind == "generalized-buchi":
        doc["sigma_min"] = format_scalar(report.sigma)
        doc["inflated_target_sets"] = [list(f) for f in report.inflated_sets]
        rows: dict = {}
        n = len(a.acceptance.sets)
        for q in a.states:
            rows[q] = [format_scalar(report.opt_matrix.values[(q, k)]) for k in range(n)]
        doc["opt_matrix"] = rows
        doc["iterations"] = report.opt_matrix.iterations
    else:
        doc["sigma_min"] = format_scalar(report.sigma_min_component)
        doc["certified"] = report.certified
        doc["inflated_even_sets"] = [list(f) for f in report.inflated_even_sets]
        doc["separation_witnesses"] = [list(w) for w in report.separation_witnesses]
        doc["opt_star"] = _values_table(report.opt_star.values)
        doc["iterations"] = report.opt_star.iterations
    return doc


def _load_strategy_for(a, path: str):
    strategy = parse_strategy(_read_text(path))
    needs_indexed = a.acceptance.kind == "generalized-buchi"
    if needs_indexed and isinstance(strategy, MemorylessStrategy):
        raise DocumentError(
            [("kind", "generalized Büchi verification needs an indexed strategy")]
        )
    if not needs_indexed and isinstance(strategy, IndexedStrategy):
        raise DocumentError(
            [("kind", f"{a.acceptance.kind} verification needs a memoryless strategy")]
        )
    return strategy


# --------------------------------------------------------------------------
# Verb handlers
# --------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    try:
        a = parse_document(_read_text(args.automaton))
    except DocumentError as exc:
        for loc, msg in exc.errors:
            print(f"error: {loc}: {msg}", file=sys.stderr)
        return USAGE_ERROR
    findings = validate_automaton(a)
    _emit(
        {
            "verb": "validate",
            "states": len(a.states),
            "inputs": len(a.inputs),
            "objective": a.acceptance.kind,
            "findings": [{"location": v.location, "message": str(v)} for v in findings],
        }
    )
    return 0


def _cmd_synth(args) -> int:
    a = parse_document(_read_text(args.automaton))
    kind = a.acceptance.kind
    if kind in ("reachability", "buchi"):
        report = synthesize_optimal(a)
    elif kind == "generalized-buchi":
        report = synthesize_genbuchi(a)
    else:
        report = synthesize_parity(a)
    _emit(_report_common("synth", a, report))
    return 0


def _cmd_verify(args) -> int:
    a = parse_document(_read_text(args.automaton))
    strategy = _load_strategy_for(a, args.strategy)
    kind = a.acceptance.kind
    if kind in ("reachability", "buchi"):
        report = verify_strategy_sigma(a, strategy)
    elif kind == "generalized-buchi":
        report = verify_genbuchi_sigma(a, strategy)
    else:
        report = verify_parity_sigma(a, strategy)
    doc = _report_common("verify", a, report)
    _emit(doc)
    if kind == "parity" and not report.certified:
        return ANALYSIS_FAILURE
    return 0


def _cmd_certify(args) -> int:
    a = parse_document(_read_text(args.automaton))
    cert = parse_certificate(_read_text(args.certificate))
    rank = check_rank(a, cert)
    clf = check_clf(a, cert)
    doc: dict = {
        "verb": "certify",
        "objective": cert.objective,
        "f_coeff": format_scalar(cert.f_coeff),
        "rank_check": {"ok": rank.ok, "violations": list(rank.violations)},
        "decrease_check": {"ok": clf.ok, "violations": list(clf.violations)},
    }
    certified = rank.ok and clf.ok
    if clf.ok:
        lip = lipschitz_constant(a, cert)
        bound = sigma_bound_from_certificate(a, cert)
        doc["lipschitz_K"] = format_scalar(lip.K)
        doc["lipschitz_witness"] = list(lip.witness) if lip.witness else None
        doc["sigma_bound"] = format_scalar(bound.value)
        doc["sigma_bound_certified"] = bound.certified
        doc["separation_witnesses"] = [list(w) for w in bound.separation_witnesses]
        certified = certified and bound.certified
    _emit(doc)
    return 0 if certified else ANALYSIS_FAILURE


def _cmd_fault_bound(args) -> int:
    a = parse_document(_read_text(args.automaton))
    strategy = _load_strategy_for(a, args.strategy)
    bound = compute_fault_bound(a, strategy, clf_induced=args.clf_induced)
    lengths: dict = {}
    for key, value in bound.trace_lengths.items():
        name = key if isinstance(key, str) else f"{key[0]}@{key[1]}"
        lengths[name] = format_scalar(value) if value is INF else value
    _emit(
        {
            "verb": "fault-bound",
            "objective": a.acceptance.kind,
            "N": format_scalar(bound.N) if bound.N is INF else bound.N,
            "sigma": format_scalar(bound.sigma),
            "certified": bound.certified,
            "trace_lengths": lengths,
        }
    )
    return 0 if bound.N is not INF else ANALYSIS_FAILURE


def _cmd_simulate(args) -> int:
    a = parse_document(_read_text(args.automaton))
    strategy = _load_strategy_for(a, args.strategy)
    if args.script is not None:
        raw = json.loads(_read_text(args.script))
        if isinstance(raw, dict):
            script = {int(k): v for k, v in raw.items()}
        else:
            script = [int(k) for k in raw]
        run = simulate_run(
            a,
            strategy,
            ("scripted", script),
            steps=args.steps,
            min_spacing=args.n_bound,
        )
    elif args.seed is not None:
        run = simulate_run(
            a,
            strategy,
            ("random", args.seed),
            steps=args.steps,
            min_spacing=args.n_bound,
        )
    elif args.n_bound is not None:
        outcome = exhaustive_adversary_search(a, strategy, args.n_bound)
        doc: dict = {
            "verb": "simulate",
            "mode": "exhaustive",
            "N": outcome.N,
            "verdict": outcome.verdict,
            "explored": outcome.explored,
        }
        if outcome.witness is not None:
            stem, loop, positions = outcome.witness
            doc["witness"] = {
                "stem": list(stem),
                "loop": list(loop),
                "fault_positions": list(positions),
            }
        _emit(doc)
        return 0 if outcome.verdict == "no-violation-found" else ANALYSIS_FAILURE
    else:
        print(
            "error: simulate needs one of --n-bound, --script or --seed",
            file=sys.stderr,
        )
        return USAGE_ERROR
    _emit(
        {
            "verb": "simulate",
            "mode": "scripted" if args.script is not None else "random",
            "trace": list(run.trace),
            "fault_positions": list(run.fault_positions),
            "accepted": run.accepted,
            "cycle": list(run.cycle),
            "seed": run.seed,
        }
    )
    return ANALYSIS_FAILURE if run.accepted is False else 0


def _cmd_export_dot(args) -> int:
    a = parse_document(_read_text(args.automaton))
    strategy = None
    if args.strategy is not None:
        strategy = parse_strategy(_read_text(args.strategy))
    values = None
    if args.annotate:
        kind = a.acceptance.kind
        if kind in ("reachability", "buchi"):
            values = fixpoint_opt(a, a.terminal_set()).values
        elif kind == "generalized-buchi":
            matrix = genbuchi_fixpoint(a)
            n = len(a.acceptance.sets)
            values = {
                q: tuple(matrix.values[(q, k)] for k in range(n)) for q in a.states
            }
        else:
            values = parity_fixpoint(a).values
    sys.stdout.write(export_dot(a, strategy=strategy, values=values))
    return 0


def _cmd_example(args) -> int:
    if args.family == "running":
        a = running_example(args.objective)
    elif args.family == "gray-code":
        a = generate_gray_code(args.bits)
    else:
        a = generate_leader_election(args.rule, scope=args.scope)
    sys.stdout.write(serialize_document(a))
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metricsynth",
        description=(
            "Robust strategy synthesis and verification for metric automata "
            "under bounded disturbances"
        ),
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def automaton_arg(p):
        p.add_argument("automaton", help="automaton document (path or - for stdin)")

    p = sub.add_parser("validate", help="parse a document and report model findings")
    automaton_arg(p)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("synth", help="synthesize an optimally robust strategy")
    automaton_arg(p)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("verify", help="verify the robustness margin of a strategy")
    automaton_arg(p)
    p.add_argument("--strategy", required=True, help="strategy document path")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("certify", help="check a rank certificate and derive a sigma bound")
    automaton_arg(p)
    p.add_argument("--certificate", required=True, help="certificate document path")
    p.set_defaults(handler=_cmd_certify)

    p = sub.add_parser("fault-bound", help="sufficient spacing between transient faults")
    automaton_arg(p)
    p.add_argument("--strategy", required=True, help="strategy document path")
    p.add_argument(
        "--clf-induced",
        action="store_true",
        help="vouch that the strategy was induced from a checked certificate",
    )
    p.set_defaults(handler=_cmd_fault_bound)

    p = sub.add_parser("simulate", help="exhaustive bounded-fault search or single run")
    automaton_arg(p)
    p.add_argument("--strategy", required=True, help="strategy document path")
    p.add_argument("--n-bound", type=int, default=None, help="fault spacing N")
    p.add_argument("--script", default=None, help="scripted fault positions (JSON file)")
    p.add_argument("--seed", type=int, default=None, help="random adversary seed")
    p.add_argument("--steps", type=int, default=50, help="simulation step budget")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("export-dot", help="Graphviz text for the transition structure")
    automaton_arg(p)
    p.add_argument("--strategy", default=None, help="highlight this strategy's choices")
    p.add_argument(
        "--annotate",
        action="store_true",
        help="annotate states with fixpoint values",
    )
    p.set_defaults(handler=_cmd_export_dot)

    p = sub.add_parser("example", help="print a bundled example family document")
    fam = p.add_subparsers(dest="family", required=True)
    runner = fam.add_parser("running", help="the seven-state worked example")
    runner.add_argument(
        "--objective",
        choices=("reach", "buchi", "genbuchi", "parity"),
        default="reach",
    )
    gray = fam.add_parser("gray-code", help="Gray-code counter under bit flips")
    gray.add_argument("--bits", type=int, required=True)
    leader = fam.add_parser("leader-election", help="four-node leader election")
    leader.add_argument("--rule", choices=("min", "max", "floor-avg"), required=True)
    leader.add_argument("--scope", choices=("message", "ball"), default="message")
    p.set_defaults(handler=_cmd_example)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except DocumentError as exc:
        for loc, msg in exc.errors:
            print(f"error: {loc}: {msg}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: line {exc.lineno}, column {exc.colno}: {exc.msg}", file=sys.stderr)
        return USAGE_ERROR
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ANALYSIS_FAILURE


if __name__ == "__main__":
    sys.exit(main())
