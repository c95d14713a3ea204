"""Command-line front end.

Exit codes: 0 success (realizable / optimum found), 1 unrealizable,
2 usage or parse error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import List, Optional

from . import bench as benchmod
from . import reason
from .dsl import (
    model_from_json,
    outcome_to_json,
    parse_model,
    print_model,
    rational_to_text,
    realization_from_json,
    realization_to_json,
)
from .dsl.jsonio import dumps
from .model import CGM, InvalidModel
from .smtlib import export_smt

EXIT_OK = 0
EXIT_UNREALIZABLE = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def load_model(path: str) -> CGM:
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path) as fh:
            text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return model_from_json(text)
    return parse_model(text, path)


def _fmt_rational(q: Fraction) -> str:
    return rational_to_text(q)


def _print_realization(r: reason.Realization, json_mode: bool) -> None:
    if json_mode:
        print(dumps(realization_to_json(r)), end="")
        return
    if r.objective_values is not None:
        values = ", ".join(_fmt_rational(v) for v in r.objective_values)
        print(f"objective values: {values}" + ("" if r.attained else "  (not attained)"))
    print("satisfied:", " ".join(sorted(r.satisfied)))
    for name in sorted(r.numeric_values):
        if not name.startswith("_") and "." not in name:
            print(f"  {name} = {_fmt_rational(r.numeric_values[name])}")


def _emit_outcome(out, json_mode: bool) -> int:
    if json_mode:
        print(dumps(outcome_to_json(out)), end="")
    if isinstance(out, reason.Realizable):
        if not json_mode:
            print("realizable")
            _print_realization(out.realization, False)
        return EXIT_OK
    if isinstance(out, reason.Unrealizable):
        if not json_mode:
            print("unrealizable; core:")
            for item in out.core:
                print("  " + item.describe())
        return EXIT_UNREALIZABLE
    if not json_mode:
        print("budget exhausted")
        if out.bounds:
            print("bounds so far:", ", ".join(_fmt_rational(v) for v in out.bounds))
        if out.best is not None:
            _print_realization(out.best, False)
    return EXIT_BUDGET


def _lex_args(args) -> List[str]:
    if not args.lex:
        return []
    return [x.strip() for x in args.lex.split(",") if x.strip()]


def main(argv: Optional[List[str]] = None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    common.add_argument("--timeout", type=float, default=argparse.SUPPRESS,
                        help="budget in seconds")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="solver heuristic seed")
    parser = argparse.ArgumentParser(prog="cgm", parents=[common],
                                     description="constrained goal model reasoner")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p_check = add_parser("check", help="realizability check")
    p_check.add_argument("model")

    p_solve = add_parser("solve", help="find one realization")
    p_solve.add_argument("model")

    p_opt = add_parser("optimize", help="lexicographic optimization")
    p_opt.add_argument("model")
    p_opt.add_argument("--lex", required=True, help="comma-separated objective ids")
    p_opt.add_argument("--max", action="append", default=[], metavar="ID",
                       help="maximize this objective (direction override)")

    p_enum = add_parser("enumerate", help="enumerate realizations")
    p_enum.add_argument("model")
    p_enum.add_argument("--limit", type=int, default=10)

    p_core = add_parser("core", help="unsat core of an unrealizable model")
    p_core.add_argument("model")

    p_entail = add_parser("entail", help="elements forced false by an antecedent")
    p_entail.add_argument("model")
    p_entail.add_argument("--antecedent", required=True)
    p_entail.add_argument("--all-elements", action="store_true")
    p_entail.add_argument("--pairs", action="store_true",
                          help="also report task pairs that cannot both hold")

    p_evolve = add_parser("evolve", help="evolution-aware re-optimization")
    p_evolve.add_argument("old_model")
    p_evolve.add_argument("new_model")
    p_evolve.add_argument("--realization", required=True, help="old realization JSON file")
    p_evolve.add_argument("--mode", default="Hamming",
                          choices=["Hamming", "NewElements", "Both", "Effort"])

    p_bench = add_parser("bench", help="generate/run scalability benchmarks")
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--k", type=int, default=2)
    p_bench.add_argument("--p", type=int, default=0)
    p_bench.add_argument("--variant", choices=["full", "reduced"], default="full")
    p_bench.add_argument("--instances", type=int, default=1)
    p_bench.add_argument("--out", help="write .cgm instances + manifest.json here")
    p_bench.add_argument("--mode", choices=["check", "optimize"], default="check")
    p_bench.add_argument("--lex", default="", help="objectives for --mode optimize")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--csv", help="write the detail CSV here (default stdout)")
    p_bench.add_argument("--summary", help="write the summary CSV here")

    p_export = add_parser("export", help="SMT-LIB v2 export")
    p_export.add_argument("model")
    p_export.add_argument("--lex", default="")
    p_export.add_argument("--max", action="append", default=[], metavar="ID")
    p_export.add_argument("-o", "--output", help="output path (default stdout)")

    p_print = add_parser("format", help="reprint a model in canonical form")
    p_print.add_argument("model")

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    args.json = getattr(args, "json", False)
    args.timeout = getattr(args, "timeout", 1000.0)
    args.seed = getattr(args, "seed", 0)

    try:
        return _dispatch(args)
    except InvalidModel as e:
        for v in e.report.violations:
            print(str(v), file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args) -> int:
    if args.command in ("check", "solve"):
        m = load_model(args.model)
        out = reason.check_realizability(m, budget=args.timeout, seed=args.seed)
        return _emit_outcome(out, args.json)

    if args.command == "optimize":
        m = load_model(args.model)
        lex = _lex_args(args)
        directions = {name: "max" for name in args.max}
        out = reason.optimize(m, lex, budget=args.timeout, directions=directions, seed=args.seed)
        return _emit_outcome(out, args.json)

    if args.command == "enumerate":
        m = load_model(args.model)
        count = 0
        for r in reason.enumerate_realizations(m, limit=args.limit, budget=args.timeout,
                                               seed=args.seed):
            count += 1
            if args.json:
                print(dumps(realization_to_json(r)), end="")
            else:
                print(f"-- realization {count} --")
                _print_realization(r, False)
        if not args.json:
            print(f"{count} realization(s)")
        return EXIT_OK if count else EXIT_UNREALIZABLE

    if args.command == "core":
        m = load_model(args.model)
        out = reason.check_realizability(m, budget=args.timeout, seed=args.seed)
        return _emit_outcome(out, args.json)

    if args.command == "entail":
        m = load_model(args.model)
        forced = reason.entailed_implications(
            m, args.antecedent, all_elements=args.all_elements, budget=args.timeout,
            seed=args.seed,
        )
        result = {"antecedent": args.antecedent, "forcedFalse": sorted(forced)}
        if args.pairs:
            pairs = reason.entailed_pair_exclusions(m, args.antecedent, budget=args.timeout,
                                                    seed=args.seed)
            result["excludedPairs"] = sorted(sorted(p) for p in pairs)
        if args.json:
            print(dumps(result), end="")
        else:
            print("forced false:", " ".join(result["forcedFalse"]) or "(none)")
            for p in result.get("excludedPairs", []):
                print("cannot both hold:", " & ".join(p))
        return EXIT_OK

    if args.command == "evolve":
        m_old = load_model(args.old_model)
        m_new = load_model(args.new_model)
        with open(args.realization) as fh:
            r_old = realization_from_json(fh.read())
        out = reason.evolve(m_old, r_old, m_new, mode=args.mode, budget=args.timeout,
                            seed=args.seed)
        return _emit_outcome(out, args.json)

    if args.command == "bench":
        from . import load_fixture

        seed_model = load_fixture()
        config = benchmod.BenchConfig(
            n=args.n, k=args.k, p=args.p, variant=args.variant,
            seed=args.seed, instances=args.instances,
        )
        if args.out:
            manifest = benchmod.write_instances(config, seed_model, args.out)
            print(f"wrote {len(manifest['files'])} instance(s) to {args.out}", file=sys.stderr)
            return EXIT_OK
        detail, summary = benchmod.run_suite(
            [config], seed_model, mode=args.mode, lex=_lex_args(args),
            timeout_s=args.timeout, jobs=args.jobs,
        )
        if args.csv:
            with open(args.csv, "w") as fh:
                fh.write(detail)
        else:
            sys.stdout.write(detail)
        if args.summary:
            with open(args.summary, "w") as fh:
                fh.write(summary)
        else:
            sys.stdout.write(summary)
        return EXIT_OK

    if args.command == "export":
        m = load_model(args.model)
        directions = {name: "max" for name in args.max}
        script = export_smt(m, _lex_args(args), directions=directions)
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(script)
        else:
            sys.stdout.write(script)
        return EXIT_OK

    if args.command == "format":
        m = load_model(args.model)
        sys.stdout.write(print_model(m))
        return EXIT_OK

    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
