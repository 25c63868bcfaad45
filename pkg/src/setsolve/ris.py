"""Restricted intensional sets and restricted universal quantification.

A RIS ris(X in A, phi) denotes {x : x in A and phi[x]}. Membership
instantiates the filter; foreach(X in A, phi) reduces to
subset(A, ris(X in A, phi)), which holds exactly when every element of A
satisfies the filter. Equality between a RIS with an unbound domain and
anything else stays irreducible until the domain is bound.

Filters must stay inside the decidable fragment: conjunctions and
disjunctions of primitive constraints only, no clause calls.
"""
from __future__ import annotations

from .terms import (
    EMPTY, And, Call, Delayed, FalseF, Or, Prim, Ris, SetCons, Substitution,
    TrueF, Tuple, Var, fresh_var,
)


class RisError(Exception):
    pass


class UnsupportedNegationError(RisError):
    """A filter (or its context) requires a negation that cannot be
    expressed with the negated-constraint vocabulary."""


def check_filter(f):
    """Reject clause calls and delays inside RIS filters."""
    if isinstance(f, (TrueF, FalseF, Prim)):
        return
    if isinstance(f, (And, Or)):
        check_filter(f.left)
        check_filter(f.right)
        return
    if isinstance(f, Call):
        raise RisError(
            f"clause call {f.name}/{len(f.args)} is not allowed in a RIS "
            "filter (only primitive constraints)")
    if isinstance(f, Delayed):
        raise RisError("delay is not allowed in a RIS filter")
    raise RisError(f"unsupported RIS filter: {f!r}")


def instantiate(r: Ris, x):
    """The filter with the bound variable set to x."""
    check_filter(r.filter)
    s = Substitution({r.bound: x})
    return s.apply_formula(r.filter)


def ris_member(x, r: Ris):
    """x in ris(V in A, phi)  <=>  x in A and phi[V := x]."""
    return And(Prim("in", (x, r.domain)), instantiate(r, x))


def ris_not_member(x, r: Ris):
    """x nin ris(V in A, phi) <=> x nin A or (x in A and not phi[V := x]);
    usable only when the filter's negation stays in the vocabulary."""
    body = instantiate(r, x)
    return Or(Prim("nin", (x, r.domain)),
              And(Prim("in", (x, r.domain)), negate(body)))


def foreach_expand(bound: Var, domain, filt):
    """foreach(X in A, phi) :- subset(A, ris(X in A, phi))."""
    check_filter(filt)
    return Prim("subset", (domain, Ris(bound, domain, filt)))


# Negation table for primitive constraints. Pairs are mutual; the
# remaining entries are expressed with a fresh witness variable.
_DUAL = {"=": "neq", "neq": "=", "in": "nin", "nin": "in",
         "un": "nun", "nun": "un", "comp": "ncomp", "ncomp": "comp",
         "=<": ">", ">": "=<", "<": ">=", ">=": "<"}


def negate(f):
    """The negation of a formula, expressed with negated constraints.

    Raises UnsupportedNegationError when the formula falls outside what
    the negated-constraint vocabulary can express.
    """
    if isinstance(f, TrueF):
        return FalseF()
    if isinstance(f, FalseF):
        return TrueF()
    if isinstance(f, And):
        return Or(negate(f.left), negate(f.right))
    if isinstance(f, Or):
        return And(negate(f.left), negate(f.right))
    if isinstance(f, Prim):
        return _negate_prim(f)
    raise UnsupportedNegationError(
        f"cannot negate {f!r} within the negated-constraint vocabulary")


def _negate_prim(f: Prim):
    dual = _DUAL.get(f.name)
    if dual is not None:
        return Prim(dual, f.args)
    a = f.args
    if f.name == "subset":
        w = fresh_var("W")
        return And(Prim("in", (w, a[0])), Prim("nin", (w, a[1])))
    if f.name == "inters":
        # C /= A /\ B: some witness is in C but outside the intersection,
        # or inside the intersection but not in C.
        w = fresh_var("W")
        return Or(
            And(Prim("in", (w, a[2])),
                Or(Prim("nin", (w, a[0])), Prim("nin", (w, a[1])))),
            And(Prim("in", (w, a[0])),
                And(Prim("in", (w, a[1])), Prim("nin", (w, a[2])))))
    if f.name in ("dom", "ran"):
        # D /= dom R: a witness on one side only; membership in dom R is
        # the ncomp encoding, absence the comp one.
        w = fresh_var("W")
        probe = _loop_probe(f.name, w, a[0])
        return Or(
            And(Prim("in", (w, a[1])), probe["absent"]),
            And(probe["present"], Prim("nin", (w, a[1]))))
    if f.name == "pfun":
        w, y1, y2 = fresh_var("W"), fresh_var("Y"), fresh_var("Y")
        return And(Prim("in", (Tuple((w, y1)), a[0])),
                   And(Prim("in", (Tuple((w, y2)), a[0])),
                       Prim("neq", (y1, y2))))
    if f.name == "apply":
        w, y1, y2 = fresh_var("W"), fresh_var("Y"), fresh_var("Y")
        not_pfun = And(Prim("in", (Tuple((w, y1)), a[0])),
                       And(Prim("in", (Tuple((w, y2)), a[0])),
                           Prim("neq", (y1, y2))))
        return Or(not_pfun, Prim("nin", (Tuple((a[1], a[2])), a[0])))
    if f.name == "foreach":
        r = a[0]
        w = fresh_var("W")
        inner = instantiate(r, w)
        return And(Prim("in", (w, r.domain)), negate(inner))
    raise UnsupportedNegationError(
        f"no negated form for constraint {f.name!r}")


def _loop_probe(kind, w, rel):
    """Membership probes for w in dom R (kind='dom') or w in ran R, via the
    identity-pair composition trick."""
    loop = SetCons(Tuple((w, w)), EMPTY)
    if kind == "dom":
        present = Prim("ncomp", (loop, rel, EMPTY))
        absent = Prim("comp", (loop, rel, EMPTY))
    else:
        present = Prim("ncomp", (rel, loop, EMPTY))
        absent = Prim("comp", (rel, loop, EMPTY))
    return {"present": present, "absent": absent}
