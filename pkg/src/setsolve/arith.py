"""Linear integer arithmetic via rational relaxation plus bounded integer
refinement.

Constraints are normalized to sum(c_i * x_i) REL k with REL in
{=, =<, <, neq} and exact Fraction coefficients. Consistency over the
rationals is decided by Gaussian elimination of equalities followed by
Fourier-Motzkin elimination of the inequalities. If the rational system
is consistent and every variable has finite bounds, the (finite) integer
box is enumerated to confirm an integer point; when some variable is
unbounded the store stays consistent with a `rational_only` flag that
callers surface in answers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .terms import Ctor, Int, Var, is_arith_op

_BOX_BUDGET = 500_000


class NonLinearError(Exception):
    """A term outside the linear fragment (or non-numeric) was asserted."""


@dataclass(frozen=True)
class LinRow:
    """sum(coeffs[v] * v) REL const, coeffs keyed by Var."""
    coeffs: tuple          # sorted tuple of (Var, Fraction), coeff != 0
    rel: str               # '=', '=<', '<', 'neq'
    const: Fraction

    def variables(self):
        return [v for v, _ in self.coeffs]


@dataclass(frozen=True)
class ArithResult:
    consistent: bool
    rational_only: bool = False


def linearize(t, walk=None):
    """Term -> (dict Var -> Fraction, Fraction constant).

    Raises NonLinearError for variable products or non-numeric leaves.
    `walk` resolves variables through the current substitution.
    """
    if walk is not None:
        t = walk(t)
    if isinstance(t, Int):
        return {}, Fraction(t.value)
    if isinstance(t, Var):
        return {t: Fraction(1)}, Fraction(0)
    if isinstance(t, Ctor) and t.name in ("+", "-") and len(t.args) == 2:
        c1, k1 = linearize(t.args[0], walk)
        c2, k2 = linearize(t.args[1], walk)
        sign = 1 if t.name == "+" else -1
        out = dict(c1)
        for v, c in c2.items():
            out[v] = out.get(v, Fraction(0)) + sign * c
            if out[v] == 0:
                del out[v]
        return out, k1 + sign * k2
    if isinstance(t, Ctor) and t.name == "*" and len(t.args) == 2:
        c1, k1 = linearize(t.args[0], walk)
        c2, k2 = linearize(t.args[1], walk)
        if c1 and c2:
            raise NonLinearError("products of variables are not linear")
        if c1:
            return {v: c * k2 for v, c in c1.items() if c * k2 != 0}, k1 * k2
        return {v: c * k1 for v, c in c2.items() if c * k1 != 0}, k1 * k2
    raise NonLinearError(f"not a numeric term: {t!r}")


def make_row(lhs, rel, rhs, walk=None) -> LinRow:
    """Normalize `lhs REL rhs` to a LinRow. '>=' and '>' flip to '=<', '<'."""
    if rel in (">=", ">"):
        lhs, rhs = rhs, lhs
        rel = "=<" if rel == ">=" else "<"
    cl, kl = linearize(lhs, walk)
    cr, kr = linearize(rhs, walk)
    coeffs = dict(cl)
    for v, c in cr.items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - c
        if coeffs[v] == 0:
            del coeffs[v]
    const = kr - kl
    ordered = tuple(sorted(coeffs.items(), key=lambda p: p[0].id))
    return LinRow(ordered, rel, const)


class ArithStore:
    """Incrementally asserted rows plus the set of integer-marked vars.

    The verdict is a function of the row multiset: check() renormalizes
    every row against the current substitution and decides globally, so
    assertion order never matters.
    """

    __slots__ = ("rows", "int_vars")

    def __init__(self, rows=None, int_vars=None):
        self.rows = list(rows) if rows else []
        self.int_vars = set(int_vars) if int_vars else set()

    def copy(self) -> "ArithStore":
        return ArithStore(self.rows, self.int_vars)

    def is_empty(self):
        return not self.rows

    def add(self, row: LinRow):
        self.rows.append(row)
        self.int_vars.update(row.variables())

    def is_marked(self, v: Var) -> bool:
        return v in self.int_vars

    def mark(self, v: Var):
        self.int_vars.add(v)

    def check(self, walk=None) -> ArithResult:
        """Decide consistency of the asserted rows under `walk`."""
        rows = []
        for row in self.rows:
            nr = _rewalk(row, walk) if walk else row
            if nr is None:
                return ArithResult(False)
            if nr is not True:
                rows.append(nr)
        return _decide(rows)

    def residual_rows(self, walk=None):
        """Rows still mentioning variables, renormalized."""
        out = []
        for row in self.rows:
            nr = _rewalk(row, walk) if walk else row
            if nr not in (None, True) and nr.coeffs:
                out.append(nr)
        return out

    def determined(self, walk=None):
        """Variables pinned to a single integer by the equality rows,
        propagated to a fixpoint: list of (var, value). Fractional pins
        are left to the consistency check to reject."""
        rows = []
        for row in self.rows:
            nr = _rewalk(row, walk) if walk else row
            if nr not in (None, True) and nr.rel == "=":
                rows.append(nr)
        found = {}
        changed = True
        while changed:
            changed = False
            nxt = []
            for nr in rows:
                if found:
                    nr = _substitute_values(nr, found)
                if nr is None or not nr.coeffs:
                    continue
                if len(nr.coeffs) == 1:
                    (v, c), = nr.coeffs
                    val = nr.const / c
                    if val.denominator == 1 and v not in found:
                        found[v] = int(val)
                        changed = True
                        continue
                nxt.append(nr)
            rows = nxt
        return list(found.items())


def _substitute_values(row: LinRow, values):
    coeffs = {}
    const = row.const
    for v, c in row.coeffs:
        if v in values:
            const -= c * values[v]
        else:
            coeffs[v] = c
    ordered = tuple(sorted(coeffs.items(), key=lambda p: p[0].id))
    return LinRow(ordered, row.rel, const)


def _rewalk(row: LinRow, walk):
    """Re-express a row with current variable bindings. Returns True when
    ground-satisfied, None when ground-violated, else the new row."""
    coeffs = {}
    const = row.const
    for v, c in row.coeffs:
        t = walk(v)
        if isinstance(t, Int):
            const -= c * t.value
        elif isinstance(t, Var):
            coeffs[t] = coeffs.get(t, Fraction(0)) + c
        else:
            # Marked variable bound to a non-integer term: the comparison
            # can never hold (distinct sorts).
            return None
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    if not coeffs:
        lhs = Fraction(0)
        ok = {"=": lhs == const, "=<": lhs <= const,
              "<": lhs < const, "neq": lhs != const}[row.rel]
        return True if ok else None
    ordered = tuple(sorted(coeffs.items(), key=lambda p: p[0].id))
    return LinRow(ordered, row.rel, const)


def _decide(rows) -> ArithResult:
    eqs = [r for r in rows if r.rel == "="]
    ineqs = [r for r in rows if r.rel in ("=<", "<")]
    neqs = [r for r in rows if r.rel == "neq"]

    sat, ineqs2, _ = _eliminate_equalities(eqs, ineqs + neqs)
    if not sat:
        return ArithResult(False)
    neqs2 = [r for r in ineqs2 if r.rel == "neq"]
    ineqs2 = [r for r in ineqs2 if r.rel != "neq"]

    if not _fm_consistent(ineqs2):
        return ArithResult(False)

    # Each disequality must cut a proper slice: the polyhedron may not lie
    # inside its hyperplane. A convex set inside a finite union of
    # hyperplanes lies inside one of them, so checking one at a time is
    # complete over the rationals.
    for nr in neqs2:
        if not nr.coeffs:
            if nr.const == 0:
                return ArithResult(False)
            continue
        lt = LinRow(nr.coeffs, "<", nr.const)
        gt = LinRow(_negate_coeffs(nr.coeffs), "<", -nr.const)
        if not _fm_consistent(ineqs2 + [lt]) and \
                not _fm_consistent(ineqs2 + [gt]):
            return ArithResult(False)

    # Integer refinement: enumerate the box over every variable of the
    # original system (equalities contribute their two half-spaces to the
    # bound projections) and check all rows at each integer point.
    variables = sorted({v for r in rows for v in r.variables()},
                       key=lambda v: v.id)
    if not variables:
        return ArithResult(True)
    relaxed = list(ineqs2)
    for r in eqs:
        relaxed.append(LinRow(r.coeffs, "=<", r.const))
        relaxed.append(LinRow(_negate_coeffs(r.coeffs), "=<", -r.const))
    bounds = {}
    size = 1
    for v in variables:
        lo, hi = _var_bounds(v, relaxed, variables)
        if lo is None or hi is None:
            return ArithResult(True, rational_only=True)
        if hi < lo:
            return ArithResult(False)
        bounds[v] = (lo, hi)
        size *= hi - lo + 1
        if size > _BOX_BUDGET:
            return ArithResult(True, rational_only=True)
    point = _find_integer_point(variables, bounds, rows)
    if point is None:
        return ArithResult(False)
    return ArithResult(True)


def _negate_coeffs(coeffs):
    return tuple((v, -c) for v, c in coeffs)


def _eliminate_equalities(eqs, others):
    """Gaussian elimination; returns (sat, rewritten rows, eliminations).
    eliminations is a list of (var, (coeff dict, const)) with var expressed
    over the remaining variables."""
    eqs = list(eqs)
    others = list(others)
    elim = []
    while eqs:
        row = eqs.pop(0)
        if not row.coeffs:
            if row.const != 0:
                return False, [], []
            continue
        v, c = row.coeffs[0]
        # v = (const - rest)/c
        expr_coeffs = {u: -(cu / c) for u, cu in row.coeffs[1:]}
        expr_const = row.const / c
        elim.append((v, (expr_coeffs, expr_const)))
        eqs = [_substitute(r, v, expr_coeffs, expr_const) for r in eqs]
        others = [_substitute(r, v, expr_coeffs, expr_const) for r in others]
    final = []
    for r in others:
        if not r.coeffs:
            ok = {"=<": 0 <= r.const, "<": 0 < r.const,
                  "neq": 0 != r.const}[r.rel]
            if not ok:
                return False, [], []
            continue
        final.append(r)
    return True, final, elim


def _substitute(row: LinRow, v, expr_coeffs, expr_const) -> LinRow:
    coeffs = dict(row.coeffs)
    c = coeffs.pop(v, None)
    const = row.const
    if c is not None:
        for u, cu in expr_coeffs.items():
            coeffs[u] = coeffs.get(u, Fraction(0)) + c * cu
            if coeffs[u] == 0:
                del coeffs[u]
        const -= c * expr_const
    ordered = tuple(sorted(coeffs.items(), key=lambda p: p[0].id))
    return LinRow(ordered, row.rel, const)


def _fm_consistent(ineqs) -> bool:
    """Fourier-Motzkin elimination on '=<'/'<' rows over the rationals."""
    rows = [(dict(r.coeffs), r.rel, r.const) for r in ineqs]
    while True:
        ground, rows = _partition_ground(rows)
        for g in ground:
            if not _const_ok(g):
                return False
        if not rows:
            return True
        v = min((u for r in rows for u in r[0]), key=lambda u: u.id)
        lowers, uppers, rest = [], [], []
        for coeffs, rel, const in rows:
            c = coeffs.get(v)
            if c is None:
                rest.append((coeffs, rel, const))
            elif c > 0:
                uppers.append((coeffs, rel, const, c))
            else:
                lowers.append((coeffs, rel, const, c))
        new = rest
        for cl, rl, kl, a in lowers:
            for cu, ru, ku, b in uppers:
                # from a*v + L REL kl (a<0) and b*v + U REL ku (b>0)
                coeffs = {}
                for u, c in cl.items():
                    if u != v:
                        coeffs[u] = coeffs.get(u, Fraction(0)) + c / (-a)
                for u, c in cu.items():
                    if u != v:
                        coeffs[u] = coeffs.get(u, Fraction(0)) + c / b
                coeffs = {u: c for u, c in coeffs.items() if c != 0}
                const = kl / (-a) + ku / b
                rel = "<" if "<" in (rl, ru) else "=<"
                new.append((coeffs, rel, const))
        rows = new


def _partition_ground(rows):
    ground, rest = [], []
    for r in rows:
        (ground if not r[0] else rest).append(r)
    return ground, rest


def _const_ok(row) -> bool:
    _, rel, const = row
    return 0 <= const if rel == "=<" else 0 < const


def _var_bounds(v, ineqs, variables):
    """Finite integer bounds of v implied by the rational system, found by
    projecting out every other variable."""
    rows = [(dict(r.coeffs), r.rel, r.const) for r in ineqs]
    for u in variables:
        if u == v:
            continue
        lowers, uppers, rest = [], [], []
        for coeffs, rel, const in rows:
            c = coeffs.get(u)
            if c is None:
                rest.append((coeffs, rel, const))
            elif c > 0:
                uppers.append((coeffs, rel, const, c))
            else:
                lowers.append((coeffs, rel, const, c))
        new = rest
        for cl, rl, kl, a in lowers:
            for cu, ru, ku, b in uppers:
                coeffs = {}
                for w, c in cl.items():
                    if w != u:
                        coeffs[w] = coeffs.get(w, Fraction(0)) + c / (-a)
                for w, c in cu.items():
                    if w != u:
                        coeffs[w] = coeffs.get(w, Fraction(0)) + c / b
                coeffs = {w: c for w, c in coeffs.items() if c != 0}
                rel = "<" if "<" in (rl, ru) else "=<"
                new.append((coeffs, rel, kl / (-a) + ku / b))
        rows = new
    lo = hi = None
    for coeffs, rel, const in rows:
        c = coeffs.get(v)
        if c is None or len(coeffs) != 1:
            continue
        bound = const / c
        if c > 0:
            b = math.floor(bound) if rel == "=<" else math.ceil(bound) - 1
            hi = b if hi is None else min(hi, b)
        else:
            b = math.ceil(bound) if rel == "=<" else math.floor(bound) + 1
            lo = b if lo is None else max(lo, b)
    return lo, hi


def _find_integer_point(variables, bounds, rows):
    """DFS over the integer box with per-row early rejection."""
    order = sorted(variables, key=lambda v: bounds[v][1] - bounds[v][0])
    row_data = [(dict(r.coeffs), r.rel, r.const) for r in rows]

    def rec(i, assign):
        if i == len(order):
            return dict(assign)
        v = order[i]
        lo, hi = bounds[v]
        for val in range(lo, hi + 1):
            assign[v] = val
            ok = True
            for coeffs, rel, const in row_data:
                if any(u not in assign for u in coeffs):
                    continue
                lhs = sum(c * assign[u] for u, c in coeffs.items())
                good = {"=": lhs == const, "=<": lhs <= const,
                        "<": lhs < const, "neq": lhs != const}[rel]
                if not good:
                    ok = False
                    break
            if ok:
                found = rec(i + 1, assign)
                if found is not None:
                    return found
            del assign[v]
        return None

    return rec(0, {})


def arith_eval_ground(t) -> int:
    """Exact evaluation of a ground arithmetic expression."""
    if isinstance(t, Int):
        return t.value
    if isinstance(t, Ctor) and is_arith_op(t) and len(t.args) == 2:
        a = arith_eval_ground(t.args[0])
        b = arith_eval_ground(t.args[1])
        return a + b if t.name == "+" else a - b if t.name == "-" else a * b
    raise NonLinearError(f"not a ground numeric term: {t!r}")
