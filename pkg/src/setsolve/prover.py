"""Batch proof-obligation runner: expected verdicts, per-obligation wall
timing, negation-consistency checking, and report rendering.

Obligations expecting unsat are theorems when the solver exhausts the
search; obligations expecting sat are discharged by the first answer.
Rows keep manifest order whatever the execution order, so reports are
stable under --jobs.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .arith import NonLinearError
from .engine import EngineError, Limits
from .ris import RisError
from .solver import Answer, ResourceLimit, Sat, SolverError, Unsat, solve
from .syntax import ObligationManifest, print_formula, print_term
from .terms import And, Call, fresh_var
from .unify import UnifyBudgetError

_REPORTED = (SolverError, EngineError, RisError, NonLinearError,
             UnifyBudgetError)


@dataclass(frozen=True)
class ObligationResult:
    name: str
    category: str
    expect: str
    verdict: str            # sat | unsat | depth | steps | time | error
    ok: bool
    seconds: float
    countermodel: Answer | None = None
    error: str | None = None


@dataclass
class RunReport:
    rows: list = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def totals(self):
        """Per-category (count, seconds) plus an overall Totals row."""
        cats = {}
        for r in self.rows:
            n, secs = cats.get(r.category, (0, 0.0))
            cats[r.category] = (n + 1, secs + r.seconds)
        total = (len(self.rows), sum(r.seconds for r in self.rows))
        return cats, total

    def render_tsv(self, with_times=True) -> str:
        lines = []
        for r in self.rows:
            secs = f"{r.seconds:.3f}" if with_times else "-"
            lines.append(
                f"{r.name}\t{r.category}\t{r.verdict}\t{r.expect}\t{secs}")
        return "\n".join(lines) + ("\n" if lines else "")

    def render_table(self, with_times=True) -> str:
        w = max([len(r.name) for r in self.rows] + [10])
        wc = max([len(r.category) for r in self.rows] + [8])
        out = []
        header = f"{'obligation':<{w}}  {'category':<{wc}}  " \
                 f"{'verdict':<7}  {'expect':<6}  {'ok':<4}  seconds"
        out.append(header)
        out.append("-" * len(header))
        for r in self.rows:
            secs = f"{r.seconds:8.3f}" if with_times else "       -"
            out.append(f"{r.name:<{w}}  {r.category:<{wc}}  "
                       f"{r.verdict:<7}  {r.expect:<6}  "
                       f"{'yes' if r.ok else 'NO':<4}  {secs}")
            if r.countermodel is not None and not r.ok:
                out.append(f"{'':<{w}}  countermodel: "
                           f"{format_answer(r.countermodel)}")
            if r.error is not None:
                out.append(f"{'':<{w}}  error: {r.error}")
        out.append("-" * len(header))
        cats, total = self.totals()
        for cat in sorted(cats):
            n, secs = cats[cat]
            stime = f"{secs:8.3f}" if with_times else "       -"
            out.append(f"{cat:<{w + wc + 2}}  {n:>7}  {'':<6}  {'':<4}  {stime}")
        stime = f"{total[1]:8.3f}" if with_times else "       -"
        out.append(f"{'Totals':<{w + wc + 2}}  {total[0]:>7}  {'':<6}  "
                   f"{'':<4}  {stime}")
        return "\n".join(out) + "\n"


def format_answer(answer: Answer) -> str:
    parts = []
    for v, t in sorted(answer.bindings.items(), key=lambda p: p[0].name):
        if v.name == "_":
            continue
        parts.append(f"{v.name} = {print_term(t)}")
    for c in answer.residual:
        parts.append(print_formula(c))
    if answer.rational_only:
        parts.append("(arithmetic checked over the rationals only)")
    return ", ".join(parts) if parts else "(empty)"


def run_obligation(entry, db, limits: Limits) -> ObligationResult:
    lim = limits
    if entry.expect == "sat" and limits.max_answers is None:
        lim = replace(limits, max_answers=1)
    start = time.monotonic()
    try:
        verdict = solve(entry.goal, db, lim)
    except _REPORTED as e:
        elapsed = time.monotonic() - start
        return ObligationResult(entry.name, entry.category, entry.expect,
                                "error", False, elapsed, error=str(e))
    elapsed = time.monotonic() - start
    if isinstance(verdict, Unsat):
        got = "unsat"
        counter = None
    elif isinstance(verdict, Sat):
        got = "sat"
        counter = verdict.answers[0]
    else:
        got = verdict.kind
        counter = None
    ok = got == entry.expect
    keep_counter = counter if (not ok and got == "sat") else None
    return ObligationResult(entry.name, entry.category, entry.expect, got,
                            ok, elapsed, countermodel=keep_counter)


def run_manifest(manifest: ObligationManifest, db, limits: Limits | None = None,
                 jobs: int = 1) -> RunReport:
    """Execute every obligation; rows in manifest order regardless of
    completion order. Unresolvable names become error rows, the run
    continues."""
    limits = limits if limits is not None else Limits()
    entries = list(manifest.entries)
    if jobs <= 1:
        rows = [run_obligation(e, db, limits) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(
                lambda e: run_obligation(e, db, limits), entries))
    report = RunReport()
    report.rows = rows
    return report


@dataclass(frozen=True)
class NegConsistency:
    status: str              # ok | both-sat-failure | conjunction-sat-failure
    detail: str = ""
    countermodel: Answer | None = None


def neg_consistency(pos: str, neg: str, arity: int, db,
                    limits: Limits | None = None) -> NegConsistency:
    """Check that `neg` really is the negation of `pos`: each satisfiable
    alone, their conjunction unsatisfiable, over shared fresh variables."""
    limits = limits if limits is not None else Limits()
    one = replace(limits, max_answers=1)
    shared = tuple(fresh_var(f"X{i}") for i in range(arity))
    for name in (pos, neg):
        db.lookup(name, arity)  # missing clause: raise, not a failure
        v = solve(Call(name, shared), db, one)
        if not isinstance(v, Sat):
            return NegConsistency(
                "both-sat-failure",
                f"{name}/{arity} is not satisfiable on its own")
    conj = And(Call(pos, shared), Call(neg, shared))
    v = solve(conj, db, one)
    if isinstance(v, Sat):
        return NegConsistency(
            "conjunction-sat-failure",
            f"{pos} and {neg} hold together", v.answers[0])
    if isinstance(v, ResourceLimit):
        return NegConsistency("conjunction-sat-failure",
                              f"resource limit ({v.kind}) before refutation")
    return NegConsistency("ok")
