"""Set unification: syntactic first-order unification extended over
extensional set terms, producing finitely many alternative branches.

The SetCons/SetCons case uses the standard four-way split; with {t|s} on
the left and {t'|s'} on the right the alternatives are, in fixed order:

    (1) t = t'  and  s = s'
    (2) t = t'  and  {t|s} = s'
    (3) t = t'  and  s = {t'|s'}
    (4) s = {t'|N}  and  s' = {t|N}    with N fresh

Equations where either side is a RIS, or an arithmetic expression, are
not solved here; they are returned as residual equations for the solver
to discharge (RIS handling is lazy, arithmetic goes to the linear store).
"""
from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    Atom, Ctor, EmptySet, Int, Ris, SetCons, Substitution, Tuple, Var,
    fresh_var, is_arith_op, occurs, set_parts, set_term,
)


class UnifyBudgetError(Exception):
    """The step budget was exhausted; indicates a termination bug."""


@dataclass
class UnifyOutcome:
    """branches: list of (Substitution, residual equations). An empty list
    means the equation set is unsatisfiable."""
    branches: list

    def __bool__(self):
        return bool(self.branches)


def unify(t1, t2, subst=None, budget=200_000) -> UnifyOutcome:
    """Solve t1 = t2 under an optional pre-existing substitution.

    Returns every solution branch in deterministic order. Each branch
    substitution extends `subst` (when given) and is occurs-checked and
    idempotent.
    """
    base = subst if subst is not None else Substitution()
    steps = [0]
    out = []
    _solve([(t1, t2)], base, [], out, steps, budget)
    return UnifyOutcome(out)


def _solve(eqs, subst, residual, out, steps, budget):
    while True:
        steps[0] += 1
        if steps[0] > budget:
            raise UnifyBudgetError(f"unification exceeded {budget} steps")
        if not eqs:
            out.append((subst, residual))
            return
        (l, r), eqs = eqs[0], eqs[1:]
        l = subst.apply(l)
        r = subst.apply(r)
        if l == r:
            continue

        # RIS and arithmetic equations are residual: the solver owns them.
        if isinstance(l, Ris) or isinstance(r, Ris) \
                or is_arith_op(l) or is_arith_op(r):
            residual = residual + [(l, r)]
            continue

        if isinstance(l, Var):
            s2 = _bind(subst, l, r)
            if s2 is None:
                return
            subst = s2
            continue
        if isinstance(r, Var):
            s2 = _bind(subst, r, l)
            if s2 is None:
                return
            subst = s2
            continue

        if isinstance(l, Int) and isinstance(r, Int):
            return  # values differ (l == r handled above)
        if isinstance(l, Atom) and isinstance(r, Atom):
            return
        if isinstance(l, Tuple) and isinstance(r, Tuple):
            if len(l.items) != len(r.items):
                return
            eqs = list(zip(l.items, r.items)) + eqs
            continue
        if isinstance(l, Ctor) and isinstance(r, Ctor):
            if l.name != r.name or len(l.args) != len(r.args):
                return
            eqs = list(zip(l.args, r.args)) + eqs
            continue
        if isinstance(l, EmptySet) and isinstance(r, EmptySet):
            continue
        if isinstance(l, SetCons) and isinstance(r, SetCons):
            _split_sets(l, r, eqs, subst, residual, out, steps, budget)
            return
        # Different kinds (set vs tuple, atom vs int, ...): no solution.
        return


def _split_sets(l, r, eqs, subst, residual, out, steps, budget):
    n = fresh_var("N")
    if isinstance(l.rest, Var) and l.rest == r.rest:
        # {t|S} = {t'|S}: equal heads, or both heads inside the shared
        # tail (the general split loops on the shared variable)
        alts = (
            [(l.elem, r.elem)],
            [(l.rest, SetCons(l.elem, SetCons(r.elem, n)))],
        )
    else:
        alts = (
            [(l.elem, r.elem), (l.rest, r.rest)],
            [(l.elem, r.elem), (l, r.rest)],
            [(l.elem, r.elem), (l.rest, r)],
            [(l.rest, SetCons(r.elem, n)), (r.rest, SetCons(l.elem, n))],
        )
    for alt in alts:
        _solve(list(alt) + eqs, subst, residual, out, steps, budget)


def _bind(subst, v, t):
    """Bind v -> t with the occurs check, except that a variable occurring
    only in tail position of the other side is rotated out: v = {e1..en/v}
    becomes v = {e1..en/N} with N fresh (sound because the equation just
    says v contains e1..en)."""
    if isinstance(t, SetCons):
        elems, tail = set_parts(t)
        if isinstance(tail, Var) and tail == v \
                and not any(occurs(v, e) for e in elems):
            t = set_term(elems, fresh_var(v.name))
    return subst.bind(v, t)
