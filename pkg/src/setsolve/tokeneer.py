"""The mini ID-station corpus: loading the shipped model, generating the
invariance manifest (invariant x operation obligations plus operation,
initial-state and negation-consistency checks), and rendering manifests
back to `.obl` text."""
from __future__ import annotations

from importlib import resources

from .engine import ClauseDB, EngineError
from .syntax import (
    ObligationEntry, ObligationManifest, Span, parse_manifest, parse_program,
    print_formula,
)
from .terms import And, Call, conj, fresh_var

INVARIANTS = ("dlaInv", "idStationInv07", "clockInv", "statusRangeInv",
              "doorRangeInv", "keyStoreInv")

OPERATIONS = ("poll", "readUserToken", "validateUserTokenOK",
              "validateUserTokenFail", "readFinger", "validateFingerOK",
              "validateFingerFail", "entryOK", "tokenRemoved")

INIT_CLAUSE = "initState"


def corpus_text(name: str) -> str:
    return resources.files("setsolve.corpus").joinpath(name).read_text()


def load_corpus() -> ClauseDB:
    """Clause database of the shipped model and invariants."""
    programs = [parse_program(corpus_text(n), f"corpus/{n}")
                for n in ("model.slog", "invariants.slog")]
    return ClauseDB.load(programs)


def load_lemmas() -> ObligationManifest:
    return parse_manifest(corpus_text("lemmas.obl"), "corpus/lemmas.obl")


def generate_invariance_manifest(invariants, operations, db,
                                 init=INIT_CLAUSE) -> ObligationManifest:
    """The generated obligation suite:

      * one invariance entry per (invariant, operation), shaped
        inv(S) & op(S, S_) & not_inv(S_), expecting unsat;
      * one op-sat entry per operation disjunct, expecting sat;
      * one init-sat entry per invariant on the initial state (sat);
      * one neg-consistency entry per invariant pair (unsat).

    Operations may have arity 2 (S, S_) or 3 (S, Aux, S_) with a fresh
    middle argument. A missing not_ twin is an error naming the offender.
    """
    for inv in invariants:
        if ("not_" + inv, 1) not in db:
            raise EngineError(
                f"invariant {inv} has no negation clause not_{inv}/1")
        db.lookup(inv, 1)

    manifest = ObligationManifest(file="<generated>")
    span = Span("<generated>", 0, 0)

    def add(name, expect, category, goal):
        manifest.entries.append(
            ObligationEntry(name, expect, category, goal, span))

    def op_call(op, s, s_):
        if (op, 2) in db:
            return Call(op, (s, s_))
        if (op, 3) in db:
            return Call(op, (s, fresh_var("Aux"), s_))
        db.lookup(op, 2)  # raises with a helpful message

    for inv in invariants:
        for op in operations:
            s, s_ = fresh_var("S"), fresh_var("S_")
            goal = conj([Call(inv, (s,)), op_call(op, s, s_),
                         Call("not_" + inv, (s_,))])
            add(f"inv_{inv}__op_{op}", "unsat", "invariance", goal)

    for op in operations:
        s, s_ = fresh_var("S"), fresh_var("S_")
        add(f"op_sat_{op}", "sat", "op-sat", op_call(op, s, s_))

    if init is not None:
        for inv in invariants:
            s = fresh_var("S")
            goal = And(Call(init, (s,)), Call(inv, (s,)))
            add(f"init_sat_{inv}", "sat", "init-sat", goal)

    for inv in invariants:
        s = fresh_var("S")
        goal = And(Call(inv, (s,)), Call("not_" + inv, (s,)))
        add(f"negcons_{inv}", "unsat", "neg-consistency", goal)

    return manifest


def render_manifest(manifest: ObligationManifest) -> str:
    """Manifest back to `.obl` text (round-trips through parse_manifest)."""
    chunks = []
    for e in manifest.entries:
        chunks.append(f"#obligation {e.name} expect={e.expect} "
                      f"category={e.category}\n{print_formula(e.goal)}.\n")
    return "\n".join(chunks)


def generated_manifest(db=None) -> ObligationManifest:
    db = db if db is not None else load_corpus()
    return generate_invariance_manifest(list(INVARIANTS), list(OPERATIONS), db)


def write_generated(path, db=None):
    text = render_manifest(generated_manifest(db))
    with open(path, "w") as fh:
        fh.write(text)
    return text
