"""The satisfiability procedure: a constraint store rewritten to solved
form, with depth-first backtracking over disjunctions, clause unfoldings
and multi-branch rewrites.

A branch carries an agenda of unprocessed formulas and a store of
primitive constraints. Agenda items are consumed left to right; primitive
constraints enter a FIFO queue that is rewritten until a full pass makes
no progress (the store is stable). At stability, ground delayed goals are
woken, then remaining delayed goals are force-flushed; once nothing is
left the store undergoes the solved-form closures:

  * functionality merges: two un/inters (same inputs up to commutativity)
    or dom/ran/comp (same inputs) force equal outputs, so set-algebra
    identities like un(A,B,C) & un(B,A,D) & C neq D refute;
  * inclusion closure: subset facts entailed by the residual constraints
    (subset edges, un upper bounds, inters lower bounds) are saturated
    with their Horn rules; mutually included variables are equated and
    variables included in {} are emptied;
  * disequalities between an integer-marked variable and an integer
    constant migrate into the arithmetic store.

A store that survives the closures with a satisfiable arithmetic part is
in solved form and is reported as an Answer. Ground constraints never
stay active: they are evaluated directly by the oracle evaluator.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from . import oracle as _oracle
from . import ris as _ris
from .arith import ArithStore, NonLinearError, make_row
from .engine import ClauseDB, Limits, unfold_call
from .terms import (
    EMPTY, And, Atom, Call, Ctor, Delayed, EmptySet, FalseF, Int, Or, Prim,
    Ris, SetCons, Substitution, TrueF, Tuple, Var, formula_vars, fresh_var,
    is_arith_op, is_ground, is_set_positioned, set_parts, set_term,
)

CONSTRAINT_NAMES = {
    "=", "neq", "in", "nin", "un", "nun", "inters", "subset", "dom", "ran",
    "comp", "ncomp", "pfun", "apply", "foreach", "=<", "<", ">=", ">",
    # internal residual forms: x not in dom/ran of a relation; dom/ran of
    # a relation included in a set; relational image/preimage of a point;
    # cross products {x} * Z and Z * {x}; functionality of one pair;
    # composition whose result elements are already witnessed
    "nindom", "ninran", "domsub", "ransub", "img", "pimg", "crossl",
    "crossr", "funpair", "comp0",
}

_ARITH_RELS = {"=<", "<", ">=", ">"}


class SolverError(Exception):
    """A detected, reported error (bad arguments, unknown names): never
    silently treated as constraint failure."""


class _LimitHit(Exception):
    def __init__(self, kind):
        self.kind = kind
        super().__init__(kind)


# ---------------------------------------------------------------------------
# Verdicts and answers

@dataclass(frozen=True)
class Answer:
    bindings: Substitution       # restricted to the goal's free variables
    residual: tuple              # residual Prim constraints in solved form
    rational_only: bool = False  # arithmetic checked over Q only


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Sat:
    answers: tuple


@dataclass(frozen=True)
class ResourceLimit:
    kind: str                    # depth | steps | time
    partial: tuple = ()          # answers found before the limit hit


# ---------------------------------------------------------------------------
# Store and search state

class Store:
    __slots__ = ("subst", "active", "delayed", "arith")

    def __init__(self, subst=None, active=None, delayed=None, arith=None):
        self.subst = subst if subst is not None else Substitution()
        self.active = deque(active) if active is not None else deque()
        self.delayed = list(delayed) if delayed is not None else []
        self.arith = arith.copy() if arith is not None else ArithStore()

    def copy(self):
        return Store(self.subst.copy(), self.active, self.delayed, self.arith)

    def walkf(self, f):
        return self.subst.apply_formula(f)

    def walkt(self, t):
        return self.subst.apply(t)


class _State:
    __slots__ = ("agenda", "store", "depth", "flush_round")

    def __init__(self, agenda, store, depth=0, flush_round=0):
        self.agenda = list(agenda)
        self.store = store
        self.depth = depth
        self.flush_round = flush_round

    def copy(self):
        return _State(self.agenda, self.store.copy(), self.depth,
                      self.flush_round)


class _Ctx:
    def __init__(self, db, limits):
        self.db = db
        self.limits = limits
        self.steps = 0
        self.deadline = time.monotonic() + limits.timeout_secs

    def tick(self):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _LimitHit("steps")
        if self.steps % 256 == 0 and time.monotonic() > self.deadline:
            raise _LimitHit("time")


_EMPTY_DB = ClauseDB()


def solve(goal, db=None, limits=None):
    """Decide the goal. Returns Unsat, Sat(answers) or ResourceLimit.

    Exploration is depth-first and left-to-right; Or creates a choice
    point; clause calls unfold against db; answers stream out in
    deterministic discovery order up to limits.max_answers.
    """
    db = db if db is not None else _EMPTY_DB
    limits = limits if limits is not None else Limits()
    goal_vars = formula_vars(goal)
    ctx = _Ctx(db, limits)
    answers = []
    stack = [_State([goal], Store())]
    try:
        while stack:
            state = stack.pop()
            out = _run(state, ctx)
            if out is None:
                continue
            kind, payload = out
            if kind == "children":
                stack.extend(reversed(payload))
            else:
                answers.append(_build_answer(payload, goal_vars))
                if limits.max_answers is not None \
                        and len(answers) >= limits.max_answers:
                    return Sat(tuple(answers))
    except _LimitHit as hit:
        return ResourceLimit(hit.kind, tuple(answers))
    if answers:
        return Sat(tuple(answers))
    return Unsat()


@dataclass(frozen=True)
class Theorem:
    pass


@dataclass(frozen=True)
class Countermodel:
    answer: Answer


@dataclass(frozen=True)
class OutOfResources:
    kind: str


def check_unsat(goal, db=None, limits=None):
    """Prove by refutation: the goal is the already-negated conjecture.
    Theorem iff the goal is unsatisfiable; a satisfying answer is a
    countermodel."""
    limits = limits if limits is not None else Limits()
    verdict = solve(goal, db, limits)
    if isinstance(verdict, Unsat):
        return Theorem()
    if isinstance(verdict, Sat):
        return Countermodel(verdict.answers[0])
    return OutOfResources(verdict.kind)


# ---------------------------------------------------------------------------
# The search engine

def _run(state, ctx):
    """Run one branch to completion: None (failed), ('children', [...]) at a
    choice point, or ('answer', store)."""
    while True:
        ctx.tick()
        if state.agenda:
            f = state.agenda.pop()
            out = _handle_formula(f, state, ctx)
            if out == "fail":
                return None
            if out == "continue":
                continue
            return out
        status = _saturate(state, ctx)
        if status == "fail":
            return None
        if status == "agenda":
            continue
        if isinstance(status, tuple):
            return status
        # stable: delayed goals, then closures, then solved form
        if _wake_or_flush(state):
            continue
        posts = _closure(state)
        if posts is None:
            return None
        if posts:
            state.agenda.extend(reversed(posts))
            continue
        res = state.store.arith.check(state.store.subst.walk)
        if not res.consistent:
            return None
        return ("answer", (state.store, res.rational_only))


def _handle_formula(f, state, ctx):
    if isinstance(f, TrueF):
        return "continue"
    if isinstance(f, FalseF):
        return "fail"
    if isinstance(f, And):
        state.agenda.append(f.right)
        state.agenda.append(f.left)
        return "continue"
    if isinstance(f, Or):
        left = state
        right = state.copy()
        left.agenda.append(f.left)
        right.agenda.append(f.right)
        return ("children", [left, right])
    if isinstance(f, Call):
        state.depth += 1
        if state.depth > ctx.limits.max_depth:
            raise _LimitHit("depth")
        state.agenda.append(unfold_call(f, ctx.db))
        return "continue"
    if isinstance(f, Delayed):
        inner = state.store.walkf(f.inner)
        if not isinstance(inner, (Call, Prim)):
            raise SolverError("delay expects a clause call or constraint")
        if _delayed_args_ground(inner) or state.flush_round >= 2:
            state.agenda.append(inner)
        else:
            state.store.delayed.append(inner)
        return "continue"
    if isinstance(f, Prim):
        if f.name not in CONSTRAINT_NAMES:
            raise SolverError(f"unknown constraint {f.name!r}")
        if f in state.store.active:
            return "continue"
        # equalities first: they ground structure cheaply and keep the
        # other rules from guessing shapes that unification already knows
        if f.name == "=":
            state.store.active.appendleft(f)
        else:
            state.store.active.append(f)
        return "continue"
    raise SolverError(f"not a formula: {f!r}")


def _delayed_args_ground(f):
    return all(is_ground(a) for a in f.args)


def _saturate(state, ctx):
    """One FIFO saturation run: rewrite active constraints until a full
    pass changes nothing ('stable'), a branch point appears, goals land on
    the agenda ('agenda'), or the branch fails ('fail')."""
    store = state.store
    stall = 0
    while store.active and stall <= len(store.active):
        ctx.tick()
        c = store.active.popleft()
        cw = store.walkf(c)
        branches = _rewrite(cw, state, ctx)
        if branches is None:
            store.active.append(cw)
            stall += 1
            continue
        if not branches:
            return "fail"
        if len(branches) == 1:
            subst, goals = branches[0]
            if subst is not None:
                store.subst = subst
            if goals:
                state.agenda.extend(reversed(goals))
                return "agenda"
            stall = 0
            continue
        children = []
        for subst, goals in branches:
            child = state.copy()
            if subst is not None:
                child.store.subst = subst
            child.agenda.extend(reversed(goals))
            children.append(child)
        return ("children", children)
    return "stable"


def _wake_or_flush(state):
    """Wake ground delayed goals; at a truly stable store, force-flush the
    rest (one extra round of re-delay is allowed, then goals run)."""
    store = state.store
    if not store.delayed:
        return False
    woken, still = [], []
    for g in store.delayed:
        gw = store.walkf(g)
        (woken if _delayed_args_ground(gw) else still).append(gw)
    if woken:
        store.delayed = still
        state.agenda.extend(reversed(woken))
        return True
    store.delayed = []
    state.flush_round += 1
    state.agenda.extend(reversed(still))
    return True


def _build_answer(payload, goal_vars):
    store, rational_only = payload
    bindings = store.subst.restrict(goal_vars)
    residual = []
    for c in store.active:
        c = store.walkf(c)
        if c.name == "comp0":
            c = Prim("comp", c.args)
        residual.append(c)
    residual += _arith_residual(store)
    return Answer(bindings, tuple(residual), rational_only)


def _arith_residual(store):
    out = []
    for row in store.arith.residual_rows(store.subst.walk):
        terms = []
        for v, c in row.coeffs:
            terms.append(v if c == 1 else Ctor("*", (_frac_term(c), v)))
        lhs = terms[0]
        for t in terms[1:]:
            lhs = Ctor("+", (lhs, t))
        out.append(Prim(row.rel if row.rel != "neq" else "neq",
                        (lhs, _frac_term(row.const))))
    return out


def _frac_term(fr):
    if fr.denominator == 1:
        return Int(fr.numerator)
    return Ctor("*", (Int(fr.numerator), Ctor("inv", (Int(fr.denominator),))))


# ---------------------------------------------------------------------------
# Rewriting
#
# A rewrite returns None when the constraint is irreducible under the
# current store, or a list of branches; each branch is (substitution or
# None, goals to push). The empty list means failure.

_OK = [(None, [])]


def _br(*goals):
    return [(None, list(goals))]


def _rewrite(c: Prim, state, ctx):
    name = c.name
    store = state.store
    if name == "=":
        return _rw_eq(c.args[0], c.args[1], store)
    if name == "neq":
        return _rw_neq(c.args[0], c.args[1], store)
    if name in _ARITH_RELS:
        return _rw_arith_rel(c, store)
    if name == "in":
        return _rw_in(c.args[0], c.args[1])
    if name == "nin":
        return _rw_nin(c.args[0], c.args[1])
    if name == "un":
        return _rw_un(c)
    if name == "nun":
        return _rw_nun(c)
    if name == "inters":
        return _rw_inters(c)
    if name == "subset":
        return _rw_subset(c)
    if name == "dom" or name == "ran":
        return _rw_dom_ran(c)
    if name == "comp" or name == "comp0":
        return _rw_comp(c)
    if name == "ncomp":
        n = fresh_var("T")
        return _br(Prim("comp", (c.args[0], c.args[1], n)),
                   Prim("neq", (n, c.args[2])))
    if name == "pfun":
        return _rw_pfun(c)
    if name == "apply":
        f, x, y = c.args
        return _br(Prim("pfun", (f,)), Prim("in", (Tuple((x, y)), f)))
    if name == "foreach":
        r = c.args[0]
        try:
            return _br(_ris.foreach_expand(r.bound, r.domain, r.filter))
        except _ris.RisError as e:
            raise SolverError(str(e))
    if name == "nindom":
        return _rw_nindom(c, 0)
    if name == "ninran":
        return _rw_nindom(c, 1)
    if name == "domsub":
        return _rw_side_sub(c, 0)
    if name == "ransub":
        return _rw_side_sub(c, 1)
    if name == "img":
        return _rw_img(c, 0)
    if name == "pimg":
        return _rw_img(c, 1)
    if name == "crossl":
        return _rw_cross(c, 0)
    if name == "crossr":
        return _rw_cross(c, 1)
    if name == "funpair":
        return _rw_funpair(c)
    raise SolverError(f"unknown constraint {name!r}")


def _ground_holds(c: Prim):
    try:
        return _oracle.holds(c, {})
    except _oracle.OracleError as e:
        raise SolverError(str(e))


def _eval_ground(c: Prim):
    return _OK if _ground_holds(c) else []


# -- equality and disequality ------------------------------------------------

def _rw_eq(l, r, store):
    if is_arith_op(l) or is_arith_op(r):
        return _assert_arith(l, "=", r, store)
    if isinstance(l, Ris) or isinstance(r, Ris):
        return _rw_ris_eq(l, r)
    from .unify import unify
    outcome = unify(l, r, subst=store.subst)
    branches = []
    for subst, residual in outcome.branches:
        goals = [Prim("=", (a, b)) for a, b in residual]
        branches.append((subst, goals))
    return branches


def _rw_ris_eq(l, r):
    if not isinstance(l, Ris):
        l, r = r, l
    dom = l.domain
    if isinstance(dom, EmptySet):
        return _br(Prim("=", (EMPTY, r)))
    if isinstance(dom, SetCons):
        d, rest = dom.elem, dom.rest
        smaller = Ris(l.bound, rest, l.filter)
        try:
            body = _ris.instantiate(l, d)
            negated = _ris.negate(body)
        except _ris.RisError as e:
            raise SolverError(str(e))
        n = fresh_var("N")
        return [
            (None, [body, Prim("=", (r, SetCons(d, n))),
                    Prim("=", (smaller, n))]),
            (None, [negated, Prim("=", (smaller, r))]),
        ]
    return None  # variable (or RIS) domain: lazy


def _rw_neq(l, r, store):
    if l == r:
        return []
    if is_arith_op(l) or is_arith_op(r):
        return _assert_arith(l, "neq", r, store)
    if is_ground(l) and is_ground(r):
        return [] if _ground_holds(Prim("=", (l, r))) else _OK
    if isinstance(l, Var) or isinstance(r, Var):
        if not isinstance(l, Var):
            l, r = r, l
        # disequalities between integer-marked terms belong to the
        # arithmetic store (also migrated at closure time)
        if store.arith.is_marked(l) and _is_numeric(r, store):
            return _assert_arith(l, "neq", r, store)
        if isinstance(r, SetCons):
            elems, tail = set_parts(r)
            if isinstance(tail, Var) and tail == l \
                    and not any(_occurs_in(l, e) for e in elems):
                # X neq {e1..en/X} <=> some ei nin X
                return [(None, [Prim("nin", (e, l))]) for e in elems]
        if _occurs_in(l, r):
            return _OK  # rank argument: X = t[X] has no finite solution
        return None  # irreducible: X neq t
    lk, rk = _kind(l), _kind(r)
    if lk != rk:
        return _OK
    if lk == "tuple":
        if len(l.items) != len(r.items):
            return _OK
        return [(None, [Prim("neq", (a, b))])
                for a, b in zip(l.items, r.items)]
    if lk == "ctor":
        if l.name != r.name or len(l.args) != len(r.args):
            return _OK
        return [(None, [Prim("neq", (a, b))])
                for a, b in zip(l.args, r.args)]
    if lk == "set":
        if isinstance(l, EmptySet) or isinstance(r, EmptySet):
            return _OK  # {t/s} is never empty
        w = fresh_var("W")
        return [
            (None, [Prim("in", (w, l)), Prim("nin", (w, r))]),
            (None, [Prim("in", (w, r)), Prim("nin", (w, l))]),
        ]
    return None


def _is_numeric(t, store):
    return isinstance(t, Int) or (isinstance(t, Var)
                                  and store.arith.is_marked(t))


def _kind(t):
    if isinstance(t, (EmptySet, SetCons, Ris)):
        return "set"
    if isinstance(t, Tuple):
        return "tuple"
    if isinstance(t, Ctor):
        return "ctor"
    if isinstance(t, Int):
        return "int"
    if isinstance(t, Atom):
        return "atom"
    return "var"


def _occurs_in(v, t):
    from .terms import occurs
    return occurs(v, t)


# -- arithmetic ---------------------------------------------------------------

def _rw_arith_rel(c, store):
    return _assert_arith(c.args[0], c.name, c.args[1], store)


def _assert_arith(l, rel, r, store):
    try:
        row = make_row(l, rel, r, store.subst.walk)
    except NonLinearError as e:
        raise SolverError(str(e))
    store.arith.add(row)
    res = store.arith.check(store.subst.walk)
    if not res.consistent:
        return []
    return [(None, _determined_goals(store))]


def _determined_goals(store):
    goals = []
    for v, val in store.arith.determined(store.subst.walk):
        if isinstance(store.subst.walk(v), Var):
            goals.append(Prim("=", (v, Int(val))))
    return goals


# -- membership ---------------------------------------------------------------

def _rw_in(x, s):
    if isinstance(s, EmptySet):
        return []
    if isinstance(s, SetCons):
        if x == s.elem:
            return _OK
        return [
            (None, [Prim("=", (x, s.elem))]),
            (None, [Prim("in", (x, s.rest))]),
        ]
    if isinstance(s, Var):
        if _occurs_in(s, x) or s == x:
            return []  # membership would violate rank
        n = fresh_var("N")
        return _br(Prim("=", (s, SetCons(x, n))))
    if isinstance(s, Ris):
        try:
            return _br(_ris.ris_member(x, s))
        except _ris.RisError as e:
            raise SolverError(str(e))
    raise SolverError(f"membership in a non-set term: {s!r}")


def _rw_nin(x, s):
    if isinstance(s, EmptySet):
        return _OK
    if isinstance(s, SetCons):
        if x == s.elem:
            return []
        return _br(Prim("neq", (x, s.elem)), Prim("nin", (x, s.rest)))
    if isinstance(s, Var):
        if _occurs_in(s, x) or s == x:
            return _OK
        return None
    if isinstance(s, Ris):
        try:
            return _br(_ris.ris_not_member(x, s))
        except _ris.UnsupportedNegationError as e:
            raise SolverError(str(e))
        except _ris.RisError as e:
            raise SolverError(str(e))
    raise SolverError(f"membership in a non-set term: {s!r}")


# -- union, intersection, inclusion -------------------------------------------

def _check_set_args(c, positions=None):
    positions = range(len(c.args)) if positions is None else positions
    for i in positions:
        a = c.args[i]
        if not is_set_positioned(a):
            raise SolverError(
                f"{c.name}: argument {i + 1} must be a set, got "
                f"{_describe(a)}")
        if isinstance(a, Ris):
            raise SolverError(
                f"{c.name}: RIS arguments are only supported in =, in, nin "
                "and as the right-hand side of subset")


def _describe(t):
    from .syntax import print_term
    return print_term(t)


def _rw_un(c):
    a, b, u = c.args
    _check_set_args(c)
    if is_ground(a) and is_ground(b) and is_ground(u):
        return _eval_ground(c)
    if a == b:
        return _br(Prim("=", (a, u)))
    if a == u:
        return _br(Prim("subset", (b, a)))
    if b == u:
        return _br(Prim("subset", (a, b)))
    if isinstance(a, EmptySet):
        return _br(Prim("=", (b, u)))
    if isinstance(b, EmptySet):
        return _br(Prim("=", (a, u)))
    if isinstance(u, EmptySet):
        return _br(Prim("=", (a, EMPTY)), Prim("=", (b, EMPTY)))
    for side, other in ((a, b), (b, a)):
        if isinstance(side, SetCons):
            elems, tail = set_parts(side)
            if tail == u:
                # {es / C} u B = C <=> es inside C and B inside C
                goals = [Prim("in", (e, u)) for e in elems]
                goals.append(Prim("subset", (other, u)))
                return [(None, goals)]
            if tail == other:
                # {es / B} u B is {es / B} whatever B is
                return _br(Prim("=", (u, side)))
    com = _common_tail3(a, b, u)
    if com is not None:
        elems_a, elems_b, elems_u = com
        goals = [Prim("in", (e, u)) for e in elems_a + elems_b]
        goals += [Or(Prim("in", (e, a)), Prim("in", (e, b)))
                  for e in elems_u]
        return [(None, goals)]
    if isinstance(a, SetCons):
        n = fresh_var("N")
        return _br(Prim("=", (u, SetCons(a.elem, n))),
                   Prim("un", (a.rest, b, n)))
    if isinstance(b, SetCons):
        n = fresh_var("N")
        return _br(Prim("=", (u, SetCons(b.elem, n))),
                   Prim("un", (a, b.rest, n)))
    if isinstance(u, SetCons):
        elems, tail = set_parts(u)
        if tail == a or tail == b:
            # A u B = {es / A}: B inside the result, es covered by A or B
            other = b if tail == a else a
            goals = [Prim("subset", (other, u))]
            for e in elems:
                goals.append(Or(Prim("in", (e, a)), Prim("in", (e, b))))
            return [(None, goals)]
        t, rest = u.elem, u.rest
        n1, n2 = fresh_var("N"), fresh_var("N")
        return [
            (None, [Prim("=", (a, SetCons(t, n1))),
                    Prim("un", (n1, b, rest))]),
            (None, [Prim("=", (b, SetCons(t, n2))),
                    Prim("un", (a, n2, rest))]),
            (None, [Prim("=", (a, SetCons(t, n1))),
                    Prim("=", (b, SetCons(t, n2))),
                    Prim("un", (n1, n2, rest))]),
        ]
    return None


def _rw_nun(c):
    a, b, u = c.args
    _check_set_args(c)
    if is_ground(a) and is_ground(b) and is_ground(u):
        return _eval_ground(c)
    w = fresh_var("W")
    return [
        (None, [Prim("in", (w, u)), Prim("nin", (w, a)),
                Prim("nin", (w, b))]),
        (None, [Prim("in", (w, a)), Prim("nin", (w, u))]),
        (None, [Prim("in", (w, b)), Prim("nin", (w, u))]),
    ]


def _rw_inters(c):
    a, b, u = c.args
    _check_set_args(c)
    if is_ground(a) and is_ground(b) and is_ground(u):
        return _eval_ground(c)
    if a == b:
        return _br(Prim("=", (a, u)))
    if a == u:
        return _br(Prim("subset", (a, b)))
    if b == u:
        return _br(Prim("subset", (b, a)))
    if isinstance(a, EmptySet) or isinstance(b, EmptySet):
        return _br(Prim("=", (u, EMPTY)))
    for side, other in ((a, b), (b, a)):
        if isinstance(side, SetCons):
            elems, tail = set_parts(side)
            if tail == u:
                # ({es / C}) /\ B = C <=> C inside B, and each e in B
                # only when already in C
                goals = [Prim("subset", (u, other))]
                for e in elems:
                    goals.append(Or(Prim("nin", (e, other)),
                                    Prim("in", (e, u))))
                return [(None, goals)]
            if tail == other:
                # ({es / B}) /\ B is B itself
                return _br(Prim("=", (u, other)))
    com = _common_tail3(a, b, u)
    if com is not None:
        elems_a, elems_b, elems_u = com
        goals = []
        for e in elems_u:
            goals += [Prim("in", (e, a)), Prim("in", (e, b))]
        for e in elems_a:
            goals.append(Or(Prim("nin", (e, b)), Prim("in", (e, u))))
        for e in elems_b:
            goals.append(Or(Prim("nin", (e, a)), Prim("in", (e, u))))
        return [(None, goals)]
    if isinstance(a, SetCons) or isinstance(b, SetCons):
        if not isinstance(a, SetCons):
            a, b = b, a
        t, rest = a.elem, a.rest
        n = fresh_var("N")
        return [
            (None, [Prim("in", (t, b)), Prim("=", (u, SetCons(t, n))),
                    Prim("inters", (rest, b, n))]),
            (None, [Prim("nin", (t, b)), Prim("inters", (rest, b, u))]),
        ]
    if isinstance(u, SetCons):
        elems, tail = set_parts(u)
        if tail == a or tail == b:
            # A /\ B = {es / A} collapses to es inside A and A inside B
            this, other = (a, b) if tail == a else (b, a)
            goals = [Prim("in", (e, this)) for e in elems]
            goals.append(Prim("subset", (this, other)))
            return [(None, goals)]
        # t is in both sides; the intersection of the rests, t removed,
        # must equal the listed rest (t nin M blocks a rewrite loop)
        t, rest = u.elem, u.rest
        n1, n2, m = fresh_var("N"), fresh_var("N"), fresh_var("M")
        return _br(Prim("=", (a, SetCons(t, n1))),
                   Prim("=", (b, SetCons(t, n2))),
                   Prim("inters", (n1, n2, m)),
                   Prim("nin", (t, m)),
                   Prim("=", (SetCons(t, m), u)))
    return None


def _common_tail3(a, b, u):
    """When all three set arguments share one variable tail, return their
    listed elements; the constraint then reduces element-wise."""
    parts = []
    tails = set()
    for t in (a, b, u):
        if isinstance(t, SetCons):
            elems, tail = set_parts(t)
        elif isinstance(t, Var):
            elems, tail = [], t
        else:
            return None
        if not isinstance(tail, Var):
            return None
        parts.append(elems)
        tails.add(tail)
    if len(tails) != 1:
        return None
    return parts


def _rw_subset(c):
    a, b = c.args
    if isinstance(b, Ris):
        if isinstance(a, EmptySet):
            return _OK
        if isinstance(a, SetCons):
            try:
                member = _ris.ris_member(a.elem, b)
            except _ris.RisError as e:
                raise SolverError(str(e))
            return _br(member, Prim("subset", (a.rest, b)))
        if isinstance(a, Var):
            return None  # lazy until the subset side is bound
        raise SolverError("subset: left argument must be a set")
    _check_set_args(c)
    if a == b or isinstance(a, EmptySet):
        return _OK
    if is_ground(a) and is_ground(b):
        return _eval_ground(c)
    if isinstance(b, EmptySet):
        return _br(Prim("=", (a, EMPTY)))
    if isinstance(b, SetCons) and set_parts(b)[1] == a:
        return _OK  # A subset {es / A} holds outright
    if isinstance(a, SetCons):
        elems, tail = set_parts(a)
        if tail == b:
            # {es / B} subset B <=> every listed element is in B
            return [(None, [Prim("in", (e, b)) for e in elems])]
        return _br(Prim("in", (a.elem, b)), Prim("subset", (a.rest, b)))
    if isinstance(b, SetCons):
        # A var: A subset B <=> exists N with un(A, N, B)
        n = fresh_var("N")
        return _br(Prim("un", (a, n, b)))
    return None  # two distinct unbound variables


# -- relations ----------------------------------------------------------------

def _pairify(p):
    """Return goals binding p to a 2-tuple, or None if p already is one,
    or 'fail' when it cannot be."""
    if isinstance(p, Tuple):
        return None if len(p.items) == 2 else "fail"
    if isinstance(p, Var):
        return [Prim("=", (p, Tuple((fresh_var("P"), fresh_var("P")))))]
    return "fail"


def _rw_dom_ran(c):
    rel, out = c.args
    pos = 0 if c.name == "dom" else 1
    _check_set_args(c)
    if is_ground(rel) and is_ground(out):
        return _eval_ground(c)
    if isinstance(rel, EmptySet):
        return _br(Prim("=", (out, EMPTY)))
    if isinstance(out, EmptySet):
        return _br(Prim("=", (rel, EMPTY)))
    if rel == out:
        return _br(Prim("=", (rel, EMPTY)))  # a relation never equals its dom
    if isinstance(rel, SetCons):
        p = rel.elem
        fix = _pairify(p)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        n = fresh_var("N")
        return _br(Prim("=", (out, SetCons(p.items[pos], n))),
                   Prim(c.name, (rel.rest, n)))
    if isinstance(out, SetCons):
        elems, tail = set_parts(out)
        if isinstance(tail, EmptySet):
            # finite representation: one witness pair per listed element,
            # plus a rest whose dom/ran stays inside the listed set
            rest = fresh_var("R")
            pairs = []
            for x in elems:
                other = fresh_var("Y")
                pairs.append(Tuple((x, other)) if pos == 0
                             else Tuple((other, x)))
            sub = Prim("domsub" if pos == 0 else "ransub", (rest, out))
            return _br(Prim("=", (rel, set_term(pairs, rest))), sub)
        return None  # partially-listed output: wait for more structure
    return None


def _rw_side_sub(c, pos):
    """domsub(R, D): dom R included in D (ransub for ranges)."""
    rel, out = c.args
    _check_set_args(c)
    if isinstance(rel, EmptySet):
        return _OK
    if isinstance(rel, SetCons):
        p = rel.elem
        fix = _pairify(p)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        return _br(Prim("in", (p.items[pos], out)),
                   Prim(c.name, (rel.rest, out)))
    return None


def _rw_comp(c):
    r, s, t = c.args
    _check_set_args(c)
    if is_ground(r) and is_ground(s):
        value = _compose_ground(r, s)
        if value == "fail":
            return []
        if value is not None:
            return _br(Prim("=", (t, value)))
    if isinstance(r, EmptySet) or isinstance(s, EmptySet):
        return _br(Prim("=", (t, EMPTY)))
    if isinstance(t, EmptySet):
        return _rw_comp_empty(r, s)
    if isinstance(r, SetCons):
        return _rw_comp_split(c, r, s, t, left=True)
    if isinstance(s, SetCons):
        return _rw_comp_split(c, s, r, t, left=False)
    # r, s variables: each listed result element needs a witness pair
    # chain; witnessing happens once (the rest continues as comp0, which
    # stays irreducible here, or a rewrite loop would grow the relations)
    if isinstance(t, SetCons):
        if _comp_shape_impossible(t):
            return []
        if c.name == "comp":
            goals = []
            elems, _ = set_parts(t)
            for e in elems:
                if isinstance(e, Var):
                    pair = Tuple((fresh_var("A"), fresh_var("C")))
                    goals.append(Prim("=", (e, pair)))
                    a, cc = pair.items
                else:
                    a, cc = e.items
                b = fresh_var("B")
                goals.append(Prim("in", (Tuple((a, b)), r)))
                goals.append(Prim("in", (Tuple((b, cc)), s)))
            goals.append(Prim("comp0", (r, s, t)))
            return [(None, goals)]
    return None


def _rw_comp_split(c, chain, other, t, left):
    p = chain.elem
    fix = _pairify(p)
    if fix == "fail":
        return []
    if fix is not None:
        return [(None, fix + [c])]
    if not isinstance(chain.rest, EmptySet):
        t1, t2 = fresh_var("T"), fresh_var("T")
        single = set_term([p])
        if left:
            g1 = Prim("comp0", (single, other, t1))
            g2 = Prim("comp0", (chain.rest, other, t2))
        else:
            g1 = Prim("comp0", (other, single, t1))
            g2 = Prim("comp0", (other, chain.rest, t2))
        return _br(g1, g2, Prim("un", (t1, t2, t)))
    # singleton against `other`
    x, y = p.items
    if isinstance(other, SetCons):
        q = other.elem
        fix = _pairify(q)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        u, v = q.items
        t1 = fresh_var("T")
        if left:
            prod_pair = Tuple((x, v))
            hinge = Prim("=", (y, u))
            nohinge = Prim("neq", (y, u))
            rest_goal = Prim("comp0", (chain, other.rest, t1))
            rest_goal2 = Prim("comp0", (chain, other.rest, t))
        else:
            prod_pair = Tuple((u, y))
            hinge = Prim("=", (v, x))
            nohinge = Prim("neq", (v, x))
            rest_goal = Prim("comp0", (other.rest, chain, t1))
            rest_goal2 = Prim("comp0", (other.rest, chain, t))
        return [
            (None, [hinge, rest_goal,
                    Prim("un", (set_term([prod_pair]), t1, t))]),
            (None, [nohinge, rest_goal2]),
        ]
    if isinstance(other, EmptySet):
        return _br(Prim("=", (t, EMPTY)))
    # {[x,y]} ; S = T with S a variable: T is {x} x (image of y under S);
    # mirrored for S ; {[x,y]} = T
    z = fresh_var("Z")
    if left:
        return _br(Prim("img", (y, other, z)), Prim("crossl", (x, z, t)))
    return _br(Prim("pimg", (x, other, z)), Prim("crossr", (y, z, t)))


def _comp_shape_impossible(t):
    """Listed elements of a composition result that can never be pairs."""
    elems, _ = set_parts(t)
    for e in elems:
        if not isinstance(e, (Var, Tuple)):
            return True
        if isinstance(e, Tuple) and len(e.items) != 2:
            return True
    return False


def _rw_img(c, side):
    """img(p, S, Z): Z = {v : [p,v] in S}; pimg(p, S, Z): Z = {a : [a,p] in S}."""
    piv, rel, out = c.args
    _check_set_args(c, positions=(1, 2))
    if isinstance(rel, EmptySet):
        return _br(Prim("=", (out, EMPTY)))
    if isinstance(rel, SetCons):
        q = rel.elem
        fix = _pairify(q)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        key = q.items[side]
        val = q.items[1 - side]
        n = fresh_var("N")
        return [
            (None, [Prim("=", (piv, key)), Prim("=", (out, SetCons(val, n))),
                    Prim(c.name, (piv, rel.rest, n))]),
            (None, [Prim("neq", (piv, key)), Prim(c.name, (piv, rel.rest, out))]),
        ]
    if isinstance(out, EmptySet):
        return _br(Prim("nindom" if side == 0 else "ninran", (piv, rel)))
    if rel == out:
        return _br(Prim("=", (rel, EMPTY)))  # rank: a set never holds its image
    if isinstance(out, SetCons):
        z, rest = out.elem, out.rest
        pair = Tuple((piv, z)) if side == 0 else Tuple((z, piv))
        s1, m = fresh_var("S"), fresh_var("M")
        return _br(Prim("=", (rel, SetCons(pair, s1))),
                   Prim(c.name, (piv, s1, m)),
                   Prim("nin", (z, m)),
                   Prim("=", (SetCons(z, m), out)))
    return None


def _rw_cross(c, side):
    """crossl(x, Z, T): T = {x} x Z; crossr(x, Z, T): T = Z x {x}."""
    x, z, t = c.args
    _check_set_args(c, positions=(1, 2))
    if isinstance(z, EmptySet):
        return _br(Prim("=", (t, EMPTY)))
    if isinstance(t, EmptySet):
        return _br(Prim("=", (z, EMPTY)))
    if z == t:
        return _br(Prim("=", (z, EMPTY)))  # rank argument
    if isinstance(z, SetCons):
        pair = Tuple((x, z.elem)) if side == 0 else Tuple((z.elem, x))
        n = fresh_var("N")
        return _br(Prim("=", (t, SetCons(pair, n))),
                   Prim(c.name, (x, z.rest, n)))
    if isinstance(t, SetCons):
        head, rest = t.elem, t.rest
        cvar, m = fresh_var("C"), fresh_var("M")
        pair = Tuple((x, cvar)) if side == 0 else Tuple((cvar, x))
        return _br(Prim("=", (head, pair)),
                   Prim("=", (z, SetCons(cvar, m))),
                   Prim(c.name, (x, m, rest)))
    return None


def _compose_ground(r, s):
    """Ground relational composition as a term, 'fail' for non-relations,
    or None when the chain has a non-empty tail."""
    def pairs_of(t):
        elems, tail = set_parts(t)
        if not isinstance(tail, EmptySet):
            return None
        out = []
        for e in elems:
            if not isinstance(e, Tuple) or len(e.items) != 2:
                return "fail"
            out.append(e.items)
        return out

    rp = pairs_of(r)
    sp = pairs_of(s)
    if rp == "fail" or sp == "fail":
        return "fail"
    if rp is None or sp is None:
        return None
    seen, out = set(), []
    for x, y in rp:
        for u, v in sp:
            if y == u and (x, v) not in seen:
                seen.add((x, v))
                out.append(Tuple((x, v)))
    return set_term(out)


def _rw_comp_empty(r, s):
    if isinstance(r, SetCons):
        p = r.elem
        fix = _pairify(p)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [Prim("comp0", (r, s, EMPTY))])]
        return _br(Prim("nindom", (p.items[1], s)),
                   Prim("comp0", (r.rest, s, EMPTY)))
    if isinstance(s, SetCons):
        q = s.elem
        fix = _pairify(q)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [Prim("comp0", (r, s, EMPTY))])]
        return _br(Prim("ninran", (q.items[0], r)),
                   Prim("comp0", (r, s.rest, EMPTY)))
    return None  # both variables: satisfiable with {} ; {}


def _rw_nindom(c, pos):
    x, s = c.args
    _check_set_args(c, positions=(1,))
    if isinstance(s, EmptySet):
        return _OK
    if isinstance(s, SetCons):
        q = s.elem
        fix = _pairify(q)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        return _br(Prim("neq", (x, q.items[pos])),
                   Prim(c.name, (x, s.rest)))
    return None


def _rw_pfun(c):
    f = c.args[0]
    _check_set_args(c)
    if is_ground(f):
        return _eval_ground(c)
    if isinstance(f, EmptySet):
        return _OK
    if isinstance(f, SetCons):
        p = f.elem
        fix = _pairify(p)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        # duplicate listings of the same pair are fine: any other pair
        # with the same first component must carry the same second
        return _br(Prim("funpair", (p.items[0], p.items[1], f.rest)),
                   Prim("pfun", (f.rest,)))
    return None


def _rw_funpair(c):
    """funpair(x, y, F): every pair in F with first component x has
    second component y."""
    x, y, f = c.args
    _check_set_args(c, positions=(2,))
    if isinstance(f, EmptySet):
        return _OK
    if isinstance(f, SetCons):
        q = f.elem
        fix = _pairify(q)
        if fix == "fail":
            return []
        if fix is not None:
            return [(None, fix + [c])]
        u, v = q.items
        return [
            (None, [Prim("=", (u, x)), Prim("=", (v, y)),
                    Prim("funpair", (x, y, f.rest))]),
            (None, [Prim("neq", (u, x)), Prim("funpair", (x, y, f.rest))]),
        ]
    return None


# ---------------------------------------------------------------------------
# Solved-form closures

def _closure(state):
    """Entailment checks over the stable store. Returns goals to post
    (empty when truly solved) or None on failure."""
    store = state.store
    active = [store.walkf(c) for c in store.active]
    posts = []

    posts += _functionality_merges(active)
    if posts:
        return posts

    out = _inclusion_closure(active)
    if out is None:
        return None
    posts += out
    if posts:
        return posts

    # migrate disequalities between integer-marked terms into arithmetic
    keep = deque()
    moved = False
    for c in active:
        if c.name == "neq":
            l, r = c.args
            if isinstance(r, Var) and not isinstance(l, Var):
                l, r = r, l
            if isinstance(l, Var) and store.arith.is_marked(l) \
                    and _is_numeric(r, store):
                store.arith.add(make_row(l, "neq", r, store.subst.walk))
                moved = True
                continue
        keep.append(c)
    if moved:
        store.active = keep
        res = store.arith.check(store.subst.walk)
        if not res.consistent:
            return None
    else:
        store.active = deque(active)
    posts += _determined_goals(store)
    return posts


def _functionality_merges(active):
    """un/inters are functions of their (unordered) inputs, dom/ran/comp of
    their ordered ones: equal inputs force equal outputs."""
    posts = []
    seen = {}
    for c in active:
        if c.name in ("un", "inters"):
            key = (c.name, frozenset({_tkey(c.args[0]), _tkey(c.args[1])}))
            out = c.args[2]
        elif c.name in ("dom", "ran"):
            key = (c.name, _tkey(c.args[0]))
            out = c.args[1]
        elif c.name in ("comp", "comp0"):
            key = ("comp", _tkey(c.args[0]), _tkey(c.args[1]))
            out = c.args[2]
        else:
            continue
        prev = seen.get(key)
        if prev is None:
            seen[key] = out
        elif prev != out:
            posts.append(Prim("=", (prev, out)))
    return posts


def _tkey(t):
    from .syntax import print_term
    return print_term(t)


def _inclusion_closure(active):
    """Saturate entailed inclusions between variables (and {}): subset
    edges, un upper bounds (with C below every common upper bound of A,B),
    inters lower bounds (dual). Mutually included variables are equated;
    variables below {} are emptied."""
    nodes = set()
    edges = set()          # (a, b) meaning a included in b; nodes are Vars or EMPTY
    un_rules = []          # (a, b, c): a<=w and b<=w imply c<=w
    inters_rules = []      # (a, b, c): w<=a and w<=b imply w<=c

    def node(t):
        if isinstance(t, Var):
            nodes.add(t)
            return t
        if isinstance(t, EmptySet):
            nodes.add(EMPTY)
            return EMPTY
        return None

    for c in active:
        if c.name == "subset":
            a, b = node(c.args[0]), node(c.args[1])
            if a is not None and b is not None:
                edges.add((a, b))
        elif c.name == "un":
            a, b, u = (node(x) for x in c.args)
            if a is not None and u is not None:
                edges.add((a, u))
            if b is not None and u is not None:
                edges.add((b, u))
            if a is not None and b is not None and u is not None:
                un_rules.append((a, b, u))
        elif c.name == "inters":
            a, b, u = (node(x) for x in c.args)
            if u is not None and a is not None:
                edges.add((u, a))
            if u is not None and b is not None:
                edges.add((u, b))
            if a is not None and b is not None and u is not None:
                inters_rules.append((a, b, u))

    if not edges:
        return []
    for n in nodes:
        edges.add((n, n))
    changed = True
    while changed:
        changed = False
        for a, b in list(edges):
            for b2, c in list(edges):
                if b == b2 and (a, c) not in edges:
                    edges.add((a, c))
                    changed = True
        for a, b, u in un_rules:
            for w in nodes:
                if (a, w) in edges and (b, w) in edges \
                        and (u, w) not in edges:
                    edges.add((u, w))
                    changed = True
        for a, b, u in inters_rules:
            for w in nodes:
                if (w, a) in edges and (w, b) in edges \
                        and (w, u) not in edges:
                    edges.add((w, u))
                    changed = True

    posts = []
    done = set()
    for a, b in edges:
        if a is b or not isinstance(a, Var):
            continue
        if b is EMPTY and a not in done:
            posts.append(Prim("=", (a, EMPTY)))
            done.add(a)
        elif isinstance(b, Var) and (b, a) in edges:
            key = frozenset({a, b})
            if key not in done:
                posts.append(Prim("=", (a, b)))
                done.add(key)
    return posts
