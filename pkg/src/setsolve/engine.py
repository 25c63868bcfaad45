"""Clause database, clause-call unfolding and resource limits: the layer
that turns the constraint solver into a programming language."""
from __future__ import annotations

from dataclasses import dataclass

from .terms import Call, Prim, conj, rename_formula, rename_term
from .syntax import Clause, SourceProgram


class EngineError(Exception):
    pass


class DuplicateClauseError(EngineError):
    pass


class UnknownClauseError(EngineError):
    pass


class ArityError(EngineError):
    pass


@dataclass(frozen=True)
class Limits:
    """Per-goal resource limits; all positive."""
    max_depth: int = 10_000          # clause unfoldings along one branch
    max_steps: int = 1_000_000       # rewrite steps
    timeout_secs: float = 60.0       # wall clock per goal
    max_answers: int | None = None   # None = all

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_steps <= 0 or self.timeout_secs <= 0:
            raise ValueError("limits must be positive")
        if self.max_answers is not None and self.max_answers <= 0:
            raise ValueError("limits must be positive")


class ClauseDB:
    """Immutable (after load) map (name, arity) -> Clause, load order kept."""

    def __init__(self):
        self._clauses = {}
        self._order = []

    @staticmethod
    def load(programs) -> "ClauseDB":
        db = ClauseDB()
        for prog in programs:
            if isinstance(prog, Clause):
                prog = SourceProgram([prog])
            for c in prog.clauses:
                prev = db._clauses.get(c.key)
                if prev is not None:
                    raise DuplicateClauseError(
                        f"duplicate definition of {c.name}/{c.arity}: "
                        f"{prev.span.file}:{prev.span.line} and "
                        f"{c.span.file}:{c.span.line}")
                db._clauses[c.key] = c
                db._order.append(c.key)
        return db

    def lookup(self, name, arity) -> Clause:
        c = self._clauses.get((name, arity))
        if c is None:
            other = [k for k in self._clauses if k[0] == name]
            if other:
                raise ArityError(
                    f"{name} called with {arity} argument(s) but defined "
                    f"with arity {', '.join(str(k[1]) for k in other)}")
            raise UnknownClauseError(f"unknown clause {name}/{arity}")
        return c

    def __contains__(self, key):
        return key in self._clauses

    def keys(self):
        return list(self._order)

    def __len__(self):
        return len(self._clauses)


def unfold_call(call: Call, db: ClauseDB):
    """Instantiate the called clause: rename its variables apart, conjoin
    formal = actual equations in front of the body."""
    clause = db.lookup(call.name, len(call.args))
    mapping = {}
    body, mapping = rename_formula(clause.body, mapping)
    params = [rename_term(p, mapping)[0] for p in clause.params]
    eqs = [Prim("=", (p, a)) for p, a in zip(params, call.args)]
    return conj(eqs + [body])
