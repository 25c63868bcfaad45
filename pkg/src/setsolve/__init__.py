"""setsolve: a set-constraint solving engine and clause interpreter over
hereditarily finite sets, with a proof-by-unsatisfiability driver."""

from .engine import ClauseDB, Limits, unfold_call
from .solver import (
    Answer, Countermodel, OutOfResources, ResourceLimit, Sat, SolverError,
    Theorem, Unsat, check_unsat, solve,
)
from .syntax import (
    ObligationManifest, SourceProgram, SyntaxError_, parse_goal,
    parse_manifest, parse_program, parse_term, print_formula, print_term,
)

__all__ = [
    "Answer", "ClauseDB", "Countermodel", "Limits", "ObligationManifest",
    "OutOfResources", "ResourceLimit", "Sat", "SolverError", "SourceProgram",
    "SyntaxError_", "Theorem", "Unsat", "check_unsat", "parse_goal",
    "parse_manifest", "parse_program", "parse_term", "print_formula",
    "print_term", "solve", "unfold_call",
]

__version__ = "0.1.0"
