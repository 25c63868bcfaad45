"""Command-line front-end: solve goals, prove conjectures by refuting
their negations, check obligation manifests, and query the brute-force
oracle.

Exit codes: 0 success (answers found / theorem / all expectations met),
1 failure (unsat / countermodel / failed expectation), 2 resource limit,
3 usage or load errors.
"""
from __future__ import annotations

import argparse
import os
import sys

from .engine import ClauseDB, EngineError, Limits
from .oracle import OracleBudgetError, OracleError, oracle_check
from .prover import format_answer, run_manifest
from .solver import ResourceLimit, Sat, SolverError, Unsat, solve
from .syntax import (
    SyntaxError_, parse_goal, parse_manifest, parse_program, parse_term,
    print_formula, print_term,
)

EXIT_OK = 0
EXIT_NO = 1
EXIT_LIMIT = 2
EXIT_ERROR = 3


def _build_parser():
    p = argparse.ArgumentParser(
        prog="setsolve",
        description="set-constraint solving and clause interpretation")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, files_required=True):
        sp.add_argument("files", nargs="*" if not files_required else "+",
                        help="program files (.slog)")
        sp.add_argument("-g", "--goal",
                        help="inline goal (overrides @file goals)")
        sp.add_argument("--goal-file", help="file holding the goal")
        sp.add_argument("--timeout", type=float, default=None,
                        help="seconds per goal (default 60, or "
                             "SETSOLVE_TIMEOUT_SECS)")
        sp.add_argument("--max-depth", type=int, default=10_000)
        sp.add_argument("--max-steps", type=int, default=1_000_000)

    sp = sub.add_parser("solve", help="enumerate answers to a goal")
    add_common(sp, files_required=False)
    sp.add_argument("--max-solutions", type=int, default=None)

    sp = sub.add_parser("prove",
                        help="prove a theorem: the goal is the negated "
                             "conjecture, unsat means proved")
    add_common(sp, files_required=False)

    sp = sub.add_parser("check", help="run an obligation manifest")
    sp.add_argument("files", nargs="+",
                    help="program files, then one .obl manifest")
    sp.add_argument("--manifest", help="manifest path (otherwise the "
                                       "last .obl among files)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--format", choices=("table", "tsv"), default="table")
    sp.add_argument("--timeout", type=float, default=None)
    sp.add_argument("--max-depth", type=int, default=10_000)
    sp.add_argument("--max-steps", type=int, default=1_000_000)

    sp = sub.add_parser("oracle",
                        help="bounded brute-force check of a goal")
    add_common(sp, files_required=False)
    sp.add_argument("--universe", default="0,1,2",
                    help="comma-separated atoms/ints (default 0,1,2)")
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--budget", type=int, default=3_000_000)
    return p


def _limits(args, max_answers=None) -> Limits:
    timeout = args.timeout
    if timeout is None:
        env = os.environ.get("SETSOLVE_TIMEOUT_SECS")
        timeout = float(env) if env else 60.0
    return Limits(max_depth=args.max_depth, max_steps=args.max_steps,
                  timeout_secs=timeout, max_answers=max_answers)


def _load_db(paths):
    programs = []
    for path in paths:
        with open(path) as fh:
            programs.append(parse_program(fh.read(), path))
    return ClauseDB.load(programs)


def _read_goal(args):
    if args.goal:
        text = args.goal
        if text.startswith("@"):
            with open(text[1:]) as fh:
                text = fh.read()
        return parse_goal(text)
    if args.goal_file:
        with open(args.goal_file) as fh:
            return parse_goal(fh.read(), args.goal_file)
    raise SystemExit("a goal is required: use -g '...' or --goal-file")


def _print_answer(answer, out):
    shown = False
    for v, t in sorted(answer.bindings.items(), key=lambda p: p[0].name):
        if v.name == "_":
            continue
        print(f"{v.name} = {print_term(t)}", file=out)
        shown = True
    if answer.residual or answer.rational_only:
        print("Residual:", file=out)
        for c in answer.residual:
            print(f"  {print_formula(c)}", file=out)
        if answer.rational_only:
            print("  % arithmetic checked over the rationals only",
                  file=out)
        shown = True
    if not shown:
        print("true", file=out)


def cmd_solve(args) -> int:
    db = _load_db(args.files)
    goal = _read_goal(args)
    verdict = solve(goal, db, _limits(args, args.max_solutions))
    if isinstance(verdict, Unsat):
        print("unsat")
        return EXIT_NO
    if isinstance(verdict, ResourceLimit):
        print(f"resource limit: {verdict.kind}", file=sys.stderr)
        return EXIT_LIMIT
    for i, answer in enumerate(verdict.answers):
        if i:
            print()
        _print_answer(answer, sys.stdout)
    return EXIT_OK


def cmd_prove(args) -> int:
    db = _load_db(args.files)
    goal = _read_goal(args)
    verdict = solve(goal, db, _limits(args, max_answers=1))
    if isinstance(verdict, Unsat):
        print("THEOREM")
        return EXIT_OK
    if isinstance(verdict, ResourceLimit):
        print(f"resource limit: {verdict.kind}", file=sys.stderr)
        return EXIT_LIMIT
    print("countermodel:")
    _print_answer(verdict.answers[0], sys.stdout)
    return EXIT_NO


def cmd_check(args) -> int:
    manifest_path = args.manifest
    files = list(args.files)
    if manifest_path is None:
        obls = [f for f in files if f.endswith(".obl")]
        if not obls:
            raise SystemExit("no manifest: pass --manifest or a .obl file")
        manifest_path = obls[-1]
        files = [f for f in files if f != manifest_path]
    db = _load_db(files)
    with open(manifest_path) as fh:
        manifest = parse_manifest(fh.read(), manifest_path)
    report = run_manifest(manifest, db, _limits(args), jobs=args.jobs)
    if args.format == "tsv":
        sys.stdout.write(report.render_tsv())
    else:
        sys.stdout.write(report.render_table())
    return EXIT_OK if report.all_ok else EXIT_NO


def cmd_oracle(args) -> int:
    db = _load_db(args.files) if args.files else None
    goal = _read_goal(args)
    universe = [u.strip() for u in args.universe.split(",") if u.strip()]
    terms = [parse_term(u) for u in universe]
    try:
        verdict = oracle_check(goal, terms, args.depth, db=db,
                               budget=args.budget)
    except OracleBudgetError as e:
        print(f"oracle refused: {e}", file=sys.stderr)
        return EXIT_LIMIT
    print(verdict)
    return EXIT_OK if verdict == "sat" else EXIT_NO


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "prove":
            return cmd_prove(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_oracle(args)
    except (SyntaxError_, EngineError, SolverError, OracleError,
            OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
