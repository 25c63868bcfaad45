"""Brute-force ground oracle: direct set-theoretic evaluation and bounded
model enumeration, kept independent of the solver's rewrite rules.

Ground terms evaluate to plain Python values: ints, ('atom', name),
('tup', items), ('ctor', name, args) and frozensets. Formulas over ground
values are decided by the textbook semantics of each operator (union,
intersection, domain, composition, the partial-function check, linear
arithmetic on ints). Kind mismatches (membership in a non-set, comparing
an atom numerically) make the enclosing constraint false rather than
raising, so every constraint is total over valuations.

oracle_check enumerates assignments of the goal's free variables over
candidate pools built from the universe up to the given set-nesting depth
(scalars, pairs of scalars, sets of scalars, sets of pairs, and at depth
two sets of sets of scalars). A light sort pass shrinks pools only where
a constraint forces the kind of a variable, and values that are uniquely
determined by already-assigned ones (the C in un(A,B,C), the D in
dom(R,D), either side of =) are computed instead of enumerated. The
oracle refuses (OracleBudgetError) rather than guess whenever the
remaining assignment space exceeds its budget or a variable's kind falls
outside the representable pools.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .terms import (
    And, Atom, Call, Ctor, Delayed, EmptySet, FalseF, Int, Or, Prim, Ris,
    SetCons, TrueF, Tuple, Var, conj, formula_vars, is_arith_op,
    rename_formula,
)


class OracleError(Exception):
    pass


class OracleBudgetError(OracleError):
    """Enumeration would exceed the budget; the oracle refuses to guess."""


class _Kind(Exception):
    """Internal: a kind mismatch during evaluation (caught, never escapes)."""


def atom(name):
    return ("atom", name)


# ---------------------------------------------------------------------------
# Ground evaluation

def ground_value(t, env=None):
    """Evaluate a ground term (variables resolved through env) to a value."""
    if isinstance(t, Var):
        if env is None or t not in env:
            raise OracleError(f"free variable {t.name} in ground evaluation")
        return env[t]
    if isinstance(t, Int):
        return t.value
    if isinstance(t, Atom):
        return ("atom", t.name)
    if isinstance(t, Tuple):
        return ("tup", tuple(ground_value(x, env) for x in t.items))
    if isinstance(t, Ctor):
        if is_arith_op(t):
            a = ground_value(t.args[0], env)
            b = ground_value(t.args[1], env)
            if not isinstance(a, int) or not isinstance(b, int):
                raise _Kind()
            return a + b if t.name == "+" else a - b if t.name == "-" else a * b
        return ("ctor", t.name, tuple(ground_value(x, env) for x in t.args))
    if isinstance(t, EmptySet):
        return frozenset()
    if isinstance(t, SetCons):
        rest = ground_value(t.rest, env)
        if not isinstance(rest, frozenset):
            raise _Kind()
        return rest | {ground_value(t.elem, env)}
    if isinstance(t, Ris):
        dom = ground_value(t.domain, env)
        if not isinstance(dom, frozenset):
            raise _Kind()
        inner = dict(env) if env else {}
        out = set()
        for x in dom:
            inner[t.bound] = x
            if holds(t.filter, inner):
                out.add(x)
        return frozenset(out)
    raise OracleError(f"not a term: {t!r}")


def _is_relation(r):
    return isinstance(r, frozenset) and all(
        isinstance(p, tuple) and p[0] == "tup" and len(p[1]) == 2 for p in r)


def _compose(r, s):
    return frozenset(("tup", (x, z))
                     for (_, (x, y)) in r for (_, (y2, z)) in s if y == y2)


def _rel_dom(r):
    return frozenset(p[1][0] for p in r)


def _rel_ran(r):
    return frozenset(p[1][1] for p in r)


def _is_pfun(f):
    return _is_relation(f) and len(_rel_dom(f)) == len(f)


def holds(f, env=None) -> bool:
    """Direct evaluation of a formula whose variables env makes ground."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, And):
        return holds(f.left, env) and holds(f.right, env)
    if isinstance(f, Or):
        return holds(f.left, env) or holds(f.right, env)
    if isinstance(f, Delayed):
        return holds(f.inner, env)
    if isinstance(f, Call):
        raise OracleError(f"unresolved clause call {f.name}/{len(f.args)} "
                          "(inline with a clause database first)")
    if isinstance(f, Prim):
        try:
            return _prim_holds(f, env)
        except _Kind:
            return False
    raise OracleError(f"not a formula: {f!r}")


def _prim_holds(f, env) -> bool:
    name = f.name
    if name == "foreach":
        r = f.args[0]
        dom = ground_value(r.domain, env)
        if not isinstance(dom, frozenset):
            return False
        inner = dict(env) if env else {}
        for x in dom:
            inner[r.bound] = x
            if not holds(r.filter, inner):
                return False
        return True
    vals = [ground_value(a, env) for a in f.args]
    if name == "=":
        return vals[0] == vals[1]
    if name == "neq":
        return vals[0] != vals[1]
    if name == "in":
        return isinstance(vals[1], frozenset) and vals[0] in vals[1]
    if name == "nin":
        return isinstance(vals[1], frozenset) and vals[0] not in vals[1]
    if name in ("un", "nun", "inters", "subset"):
        sets = [v for v in vals if isinstance(v, frozenset)]
        if len(sets) != len(vals):
            return False
        if name == "un":
            return vals[2] == vals[0] | vals[1]
        if name == "nun":
            return vals[2] != vals[0] | vals[1]
        if name == "inters":
            return vals[2] == vals[0] & vals[1]
        return vals[0] <= vals[1]
    if name == "dom":
        return _is_relation(vals[0]) and isinstance(vals[1], frozenset) \
            and vals[1] == _rel_dom(vals[0])
    if name == "ran":
        return _is_relation(vals[0]) and isinstance(vals[1], frozenset) \
            and vals[1] == _rel_ran(vals[0])
    if name == "comp":
        return _is_relation(vals[0]) and _is_relation(vals[1]) \
            and vals[2] == _compose(vals[0], vals[1])
    if name == "ncomp":
        return _is_relation(vals[0]) and _is_relation(vals[1]) \
            and vals[2] != _compose(vals[0], vals[1])
    if name == "pfun":
        return _is_pfun(vals[0])
    if name == "apply":
        return _is_pfun(vals[0]) and ("tup", (vals[1], vals[2])) in vals[0]
    if name in ("=<", "<", ">=", ">"):
        a, b = vals
        if not isinstance(a, int) or not isinstance(b, int):
            return False
        if name == "=<":
            return a <= b
        if name == "<":
            return a < b
        if name == ">=":
            return a >= b
        return a > b
    raise OracleError(f"unknown constraint {name!r}")


# ---------------------------------------------------------------------------
# Clause inlining

def inline_calls(f, db, budget=500):
    """Replace every clause call by its renamed body conjoined with
    formal = actual equations. Fails when the unfolding budget runs out
    (recursive programs)."""
    count = [budget]

    def go(g):
        if isinstance(g, (TrueF, FalseF, Prim)):
            return g
        if isinstance(g, Delayed):
            return Delayed(go(g.inner))
        if isinstance(g, And):
            return And(go(g.left), go(g.right))
        if isinstance(g, Or):
            return Or(go(g.left), go(g.right))
        if isinstance(g, Call):
            count[0] -= 1
            if count[0] < 0:
                raise OracleBudgetError("clause inlining budget exhausted")
            clause = db.lookup(g.name, len(g.args))
            body, mapping = rename_formula(clause.body)
            params = [_rename_term_with(p, mapping) for p in clause.params]
            eqs = [Prim("=", (p, a)) for p, a in zip(params, g.args)]
            return go(conj(eqs + [body]))
        raise OracleError(f"not a formula: {g!r}")

    return go(f)


def _rename_term_with(t, mapping):
    f, _ = rename_formula(Prim("=", (t, t)), mapping)
    return f.args[0]


# ---------------------------------------------------------------------------
# Sorts and candidate pools

_ANY, _SCALAR, _ATOM, _INT, _PAIR = "any", "scalar", "atom", "int", "pair"
_SET_ANY, _SET_S, _REL, _SET_SS = "set_any", "set_s", "rel", "set_ss"
_CONFLICT = "conflict"

_PARENTS = {
    _ATOM: (_SCALAR, _ANY), _INT: (_SCALAR, _ANY), _SCALAR: (_ANY,),
    _PAIR: (_ANY,), _SET_S: (_SET_ANY, _ANY), _REL: (_SET_ANY, _ANY),
    _SET_SS: (_SET_ANY, _ANY), _SET_ANY: (_ANY,), _ANY: (),
}


def _below(a, b) -> bool:
    return a == b or b in _PARENTS.get(a, ())


def _meet(a, b):
    if a == _CONFLICT or b == _CONFLICT:
        return _CONFLICT
    if _below(a, b):
        return a
    if _below(b, a):
        return b
    return _CONFLICT


def _setof(s):
    return {_ATOM: _SET_S, _INT: _SET_S, _SCALAR: _SET_S, _PAIR: _REL,
            _SET_S: _SET_SS, _ANY: _ANY, _SET_ANY: _ANY}.get(s, _CONFLICT)


def _elem(s):
    return {_SET_S: _SCALAR, _REL: _PAIR, _SET_SS: _SET_S,
            _SET_ANY: _ANY, _ANY: _ANY}.get(s, _CONFLICT)


@dataclass
class Pools:
    scalars: list
    pairs: list
    sets_s: list
    rels: list
    sets_ss: list

    def for_sort(self, s):
        if s == _ANY:
            return (self.scalars + self.pairs + self.sets_s + self.rels
                    + self.sets_ss)
        if s == _SCALAR:
            return list(self.scalars)
        if s == _ATOM:
            return [v for v in self.scalars if not isinstance(v, int)]
        if s == _INT:
            return [v for v in self.scalars if isinstance(v, int)]
        if s == _PAIR:
            return list(self.pairs)
        if s == _SET_ANY:
            return self.sets_s + self.rels + self.sets_ss
        if s == _SET_S:
            return list(self.sets_s)
        if s == _REL:
            return list(self.rels)
        if s == _SET_SS:
            return list(self.sets_ss)
        return None  # conflict: not enumerable


def build_pools(universe, depth) -> Pools:
    """Candidate values over the universe up to the given set-nesting depth.

    Two surplus atoms extend every layer: negative constraints (neq, nun)
    can demand an element outside the universe, and a goal of at most four
    constraints never needs more than two such witnesses.
    """
    scalars = []
    for u in universe:
        if isinstance(u, Int):
            scalars.append(u.value)
        elif isinstance(u, Atom):
            scalars.append(("atom", u.name))
        elif isinstance(u, (int, str)):
            scalars.append(u if isinstance(u, int) else ("atom", u))
        else:
            raise OracleError(f"universe members must be atoms or ints: {u!r}")
    if len(scalars) > 4:
        raise OracleBudgetError("universe too large to enumerate")
    surplus = [("atom", "surplus1"), ("atom", "surplus2")]
    pairs = [("tup", (a, b)) for a in scalars for b in scalars]
    extra_pairs = [("tup", (s, s)) for s in surplus]
    sets_s, rels, sets_ss = [], [], []
    if depth >= 1:
        sets_s = _with_surplus(_powerset(scalars), surplus)
        rels = _with_surplus(_powerset(pairs), extra_pairs)
    if depth >= 2:
        base = _powerset(scalars)
        sets_ss = [s for s in _with_surplus(
            _powerset(base), [frozenset({a}) for a in surplus]) if s]
        # frozenset() already appears in sets_s; keep one copy overall.
    return Pools(scalars + surplus, pairs + extra_pairs, sets_s, rels,
                 sets_ss)


def _powerset(items):
    out = [frozenset()]
    for it in items:
        out += [s | {it} for s in out]
    return out


def _with_surplus(base, extras):
    out = list(base)
    for s in base:
        for ex in extras:
            out.append(s | {ex})
        out.append(s | set(extras))
    return out


def _top_conjuncts(f):
    if isinstance(f, And):
        return _top_conjuncts(f.left) + _top_conjuncts(f.right)
    if isinstance(f, Delayed):
        return _top_conjuncts(f.inner)
    return [f]


def _term_sort(t, sorts):
    if isinstance(t, Var):
        return sorts.get(t, _ANY)
    if isinstance(t, Int):
        return _INT
    if isinstance(t, Atom):
        return _ATOM
    if isinstance(t, Tuple):
        return _PAIR if len(t.items) == 2 else _CONFLICT
    if isinstance(t, Ctor):
        return _INT if is_arith_op(t) else _CONFLICT
    if isinstance(t, EmptySet):
        return _SET_ANY
    if isinstance(t, SetCons):
        s = _SET_ANY
        node = t
        while isinstance(node, SetCons):
            s = _meet(s, _setof(_term_sort(node.elem, sorts)))
            node = node.rest
        return _meet(s, _term_sort(node, sorts))
    if isinstance(t, Ris):
        return _SET_ANY
    raise OracleError(f"not a term: {t!r}")


def _infer_sorts(conjuncts, variables):
    """Fixpoint sort assignment; sorts only descend in the lattice."""
    sorts = {v: _ANY for v in variables}

    def meet_var(v, s):
        if isinstance(v, Var) and v in sorts:
            sorts[v] = _meet(sorts[v], s)

    def meet_term(t, s):
        if isinstance(t, Var):
            meet_var(t, s)

    groups = []  # same-sort variable groups

    for c in conjuncts:
        if not isinstance(c, Prim):
            continue
        a = c.args
        if c.name == "=":
            groups.append([x for x in a if isinstance(x, Var)])
        elif c.name in ("un", "inters", "subset"):
            groups.append([x for x in a if isinstance(x, Var)])
            for x in a:
                meet_term(x, _SET_ANY)
        elif c.name == "nun":
            for x in a:
                meet_term(x, _SET_ANY)
        elif c.name in ("dom", "ran"):
            meet_term(a[0], _REL)
            meet_term(a[1], _SET_S)
        elif c.name in ("comp", "ncomp"):
            for x in a[:2]:
                meet_term(x, _REL)
            meet_term(a[2], _SET_ANY)
            if c.name == "comp":
                meet_term(a[2], _REL)
        elif c.name == "pfun":
            meet_term(a[0], _REL)
        elif c.name == "apply":
            meet_term(a[0], _REL)
            meet_term(a[1], _SCALAR)
            meet_term(a[2], _SCALAR)
        elif c.name in ("=<", "<", ">=", ">"):
            for x in a:
                for v in formula_vars(Prim("=", (x, x))):
                    meet_var(v, _INT)
        elif c.name in ("in", "nin"):
            meet_term(a[1], _SET_ANY)

    for _ in range(16):
        before = dict(sorts)
        for c in conjuncts:
            if not isinstance(c, Prim):
                continue
            a = c.args
            if c.name == "=":
                s1 = _term_sort(a[0], sorts)
                s2 = _term_sort(a[1], sorts)
                meet_term(a[0], s2)
                meet_term(a[1], s1)
            elif c.name == "in":
                meet_term(a[1], _setof(_term_sort(a[0], sorts)))
                meet_term(a[0], _elem(_term_sort(a[1], sorts)))
            elif c.name in ("un", "inters", "subset", "nun"):
                if c.name != "nun":
                    s = _SET_ANY
                    for x in a:
                        s = _meet(s, _term_sort(x, sorts))
                    for x in a:
                        meet_term(x, s)
        for group in groups:
            s = _ANY
            for v in group:
                s = _meet(s, sorts.get(v, _ANY))
            for v in group:
                meet_var(v, s)
        if sorts == before:
            break
    return sorts


# ---------------------------------------------------------------------------
# Enumeration

_DETERMINED_POS = {"un": 2, "inters": 2, "comp": 2, "dom": 1, "ran": 1}


def _determiners(conjuncts):
    """var -> list of (needed vars, compute fn, source constraint)."""
    out = {}

    def add(v, needs, fn):
        out.setdefault(v, []).append((needs, fn))

    for c in conjuncts:
        if not isinstance(c, Prim):
            continue
        a = c.args
        if c.name == "=":
            for i, j in ((0, 1), (1, 0)):
                if isinstance(a[i], Var):
                    other = a[j]
                    needs = formula_vars(Prim("=", (other, other)))
                    add(a[i], needs,
                        lambda env, other=other: ground_value(other, env))
        elif c.name in _DETERMINED_POS:
            pos = _DETERMINED_POS[c.name]
            tgt = a[pos]
            if isinstance(tgt, Var):
                srcs = [a[k] for k in range(len(a)) if k != pos]
                needs = set()
                for s in srcs:
                    needs |= formula_vars(Prim("=", (s, s)))
                name = c.name

                def fn(env, srcs=srcs, name=name):
                    vals = [ground_value(s, env) for s in srcs]
                    if name == "un":
                        if not all(isinstance(v, frozenset) for v in vals):
                            raise _Kind()
                        return vals[0] | vals[1]
                    if name == "inters":
                        if not all(isinstance(v, frozenset) for v in vals):
                            raise _Kind()
                        return vals[0] & vals[1]
                    if name == "comp":
                        if not (_is_relation(vals[0]) and _is_relation(vals[1])):
                            raise _Kind()
                        return _compose(vals[0], vals[1])
                    if name == "dom":
                        if not _is_relation(vals[0]):
                            raise _Kind()
                        return _rel_dom(vals[0])
                    if not _is_relation(vals[0]):
                        raise _Kind()
                    return _rel_ran(vals[0])

                add(tgt, needs, fn)
    return out


def _memberships(conjuncts):
    """var -> list of (needed vars, set term) from `X in S` conjuncts."""
    out = {}
    for c in conjuncts:
        if isinstance(c, Prim) and c.name == "in" and isinstance(c.args[0], Var):
            s = c.args[1]
            needs = formula_vars(Prim("=", (s, s)))
            out.setdefault(c.args[0], []).append((needs, s))
    return out


def oracle_check(goal, universe, depth, db=None, budget=3_000_000,
                 inline_budget=500) -> str:
    """'sat' iff some assignment of the goal's free variables over the
    bounded universe satisfies it; 'unsat' after exhausting the space.
    Raises OracleBudgetError instead of guessing."""
    if db is not None:
        goal = inline_calls(goal, db, inline_budget)
    variables = sorted(formula_vars(goal), key=lambda v: v.id)
    if not variables:
        return "sat" if holds(goal, {}) else "unsat"

    pools = build_pools(universe, depth)
    conjuncts = _top_conjuncts(goal)
    sorts = _infer_sorts(conjuncts, variables)
    dets = _determiners(conjuncts)
    members = _memberships(conjuncts)

    # Build the assignment plan: determined, membership-restricted, or
    # enumerated, greedily until every variable is scheduled.
    plan = []
    scheduled = set()
    remaining = list(variables)
    space = 1
    while remaining:
        pick = None
        for v in remaining:
            for needs, fn in dets.get(v, ()):
                if needs <= scheduled:
                    pick = ("det", v, fn)
                    break
            if pick:
                break
        if pick is None:
            for v in remaining:
                for needs, sterm in members.get(v, ()):
                    if needs <= scheduled:
                        pick = ("member", v, sterm)
                        break
                if pick:
                    break
        if pick is None:
            best, best_pool = None, None
            for v in remaining:
                pool = pools.for_sort(sorts[v])
                if pool is None:
                    continue
                if best_pool is None or len(pool) < len(best_pool):
                    best, best_pool = v, pool
            if best is None:
                raise OracleBudgetError(
                    "variable kind outside the representable pools")
            space *= max(len(best_pool), 1)
            if space > budget:
                raise OracleBudgetError(
                    f"assignment space exceeds budget ({space} > {budget})")
            pick = ("enum", best, best_pool)
        plan.append(pick)
        scheduled.add(pick[1])
        remaining.remove(pick[1])

    # Constraints first checkable after each plan step (vars all assigned).
    checks = []
    seen = set()
    done = []
    for step in plan:
        seen.add(step[1])
        now = [c for c in conjuncts
               if c not in done and formula_vars(c) <= seen]
        done += now
        checks.append(now)

    evals = [0]

    def dfs(i, env):
        evals[0] += 1
        if evals[0] > budget:
            raise OracleBudgetError("evaluation budget exhausted")
        if i == len(plan):
            return holds(goal, env)
        kind, v, data = plan[i]
        if kind == "det":
            try:
                candidates = [data(env)]
            except _Kind:
                return False
        elif kind == "member":
            try:
                sval = ground_value(data, env)
            except _Kind:
                return False
            if not isinstance(sval, frozenset):
                return False
            candidates = sorted(sval, key=repr)
        else:
            candidates = data
        for val in candidates:
            env[v] = val
            ok = True
            for c in checks[i]:
                if not holds(c, env):
                    ok = False
                    break
            if ok and dfs(i + 1, env):
                return True
            del env[v]
        return False

    return "sat" if dfs(0, {}) else "unsat"
