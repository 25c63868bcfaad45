import itertools
import random

import pytest

from setsolve.oracle import ground_value
from setsolve.syntax import parse_term
from setsolve.terms import (
    EMPTY, Atom, Int, SetCons, Substitution, Tuple, Var, fresh_var,
    is_ground, set_term, term_vars,
)
from setsolve.unify import UnifyBudgetError, unify


def _solutions(t1, t2, universe=(Int(0), Int(1))):
    """Ground the query variables of every branch over a small universe
    and collect the satisfying assignments as oracle values."""
    qvars = sorted(term_vars(t1) | term_vars(t2), key=lambda v: v.id)
    out = set()
    outcome = unify(t1, t2)
    for subst, residual in outcome.branches:
        assert not residual
        free = sorted({v for t in [subst.apply(t1)]
                       for v in term_vars(t)} |
                      term_vars(subst.apply(t2)), key=lambda v: v.id)
        pool = _values(universe)
        for combo in itertools.product(pool, repeat=len(free)):
            env = dict(zip(free, combo))
            full = subst
            ok = True
            for v, val in env.items():
                full = full.bind(v, val)
                if full is None:
                    ok = False
                    break
            if not ok:
                continue
            l, r = full.apply(t1), full.apply(t2)
            if not (is_ground(l) and is_ground(r)):
                continue
            if ground_value(l) == ground_value(r):
                out.add(tuple(ground_value(full.apply(v)) for v in qvars))
    return out


def _values(universe):
    vals = list(universe)
    sets = [set_term(c) for n in range(len(universe) + 1)
            for c in itertools.combinations(universe, n)]
    return vals + sets


def test_permutation_invariance():
    out = unify(parse_term("{1,2}"), parse_term("{2,1}"))
    assert out.branches


def test_singleton_vs_doubleton_unsat():
    # {X} = {1,2} can never hold: brute-forced over all X
    out = unify(parse_term("{X/{}}"), parse_term("{1,2}"))
    assert not out.branches


def test_elem_and_rest_solution_set():
    # {X/A} = {1}: exactly X=1 with A={} and X=1 with A={1}
    x, a = fresh_var("X"), fresh_var("A")
    got = _solutions(SetCons(x, a), set_term([Int(1)]), universe=(Int(1),))
    assert got == {(1, frozenset()), (1, frozenset({1}))}


def test_branch_order_deterministic():
    x, a = fresh_var("X"), fresh_var("A")
    out = unify(SetCons(x, a), set_term([Int(1)]))
    first, _ = out.branches[0]
    assert first.apply(x) == Int(1)
    assert first.apply(a) == EMPTY


def test_var_binds_with_occurs_check():
    x = fresh_var("X")
    assert not unify(x, set_term([x])).branches
    assert unify(x, set_term([Int(1)])).branches


def test_tail_rotation_allows_self_containing_rest():
    # X = {1 / X} just says 1 is in X
    x = fresh_var("X")
    out = unify(x, SetCons(Int(1), x))
    assert len(out.branches) == 1
    bound = out.branches[0][0].apply(x)
    assert isinstance(bound, SetCons) and bound.elem == Int(1)
    assert isinstance(bound.rest, Var)


def test_free_constructors_componentwise():
    t1 = parse_term("goodT([X,1])")
    t2 = parse_term("goodT([noT,Y])")
    out = unify(t1, t2)
    assert len(out.branches) == 1
    s = out.branches[0][0]
    assert s.apply(term_vars(t1).pop()) == Atom("noT")


def test_kind_clashes_fail():
    assert not unify(parse_term("{1}"), parse_term("[1,2]")).branches
    assert not unify(parse_term("a"), parse_term("1")).branches
    assert not unify(parse_term("{}"), parse_term("{1}")).branches
    assert not unify(parse_term("f(1)"), parse_term("g(1)")).branches


def test_shared_tail_equation():
    # {1/N} = {2/N} forces both heads into the tail
    n = fresh_var("N")
    out = unify(SetCons(Int(1), n), SetCons(Int(2), n))
    assert len(out.branches) == 1
    bound = out.branches[0][0].apply(n)
    elems = set()
    while isinstance(bound, SetCons):
        elems.add(bound.elem)
        bound = bound.rest
    assert elems == {Int(1), Int(2)}


def _rnd_ground_set(rng, universe, depth):
    n = rng.randint(0, 2)
    elems = []
    for _ in range(n):
        if depth > 1 and rng.random() < 0.4:
            elems.append(_rnd_ground_set(rng, universe, depth - 1))
        else:
            elems.append(Int(rng.choice(universe)))
    return set_term(elems)


def test_ground_completeness_matches_extensional_equality():
    # all ground set terms over {0,1} of nesting depth <= 2
    rng = random.Random(99)
    pool = [_rnd_ground_set(rng, [0, 1], 2) for _ in range(60)]
    for t1 in pool[:25]:
        for t2 in pool[:25]:
            expected = ground_value(t1) == ground_value(t2)
            got = bool(unify(t1, t2).branches)
            assert got == expected


def _rnd_open_set(rng, depth):
    kind = rng.choice(["set", "set", "var"])
    if kind == "var":
        return fresh_var(rng.choice("AB"))
    n = rng.randint(0, 2)
    elems = []
    for _ in range(n):
        r = rng.random()
        if r < 0.3:
            elems.append(fresh_var(rng.choice("XY")))
        elif r < 0.6 and depth > 1:
            elems.append(_rnd_open_set(rng, depth - 1))
        else:
            elems.append(Int(rng.choice([0, 1])))
    tail = fresh_var("R") if rng.random() < 0.3 else EMPTY
    return set_term(elems, tail)


def test_soundness_on_fuzzed_pairs():
    # every branch, ground-completed, satisfies the equation
    rng = random.Random(4242)
    for _ in range(200):
        t1, t2 = _rnd_open_set(rng, 2), _rnd_open_set(rng, 2)
        outcome = unify(t1, t2)
        for subst, residual in outcome.branches[:6]:
            assert not residual
            l, r = subst.apply(t1), subst.apply(t2)
            free = sorted(term_vars(l) | term_vars(r), key=lambda v: v.id)
            full = subst
            for v in free:
                full = full.bind(v, EMPTY)
                assert full is not None
            assert ground_value(full.apply(t1)) == \
                ground_value(full.apply(t2))


def test_branch_count_bounded():
    rng = random.Random(777)
    for _ in range(200):
        t1, t2 = _rnd_open_set(rng, 2), _rnd_open_set(rng, 2)
        outcome = unify(t1, t2)

        def size(t):
            n = 1
            while isinstance(t, SetCons):
                n += 1
                t = t.rest
            return n

        bound = 4 ** min(size(t1) + 2, size(t2) + 2)
        assert len(outcome.branches) <= bound


def test_termination_budget_never_hit_in_fuzzing():
    rng = random.Random(31415)
    for _ in range(300):
        t1, t2 = _rnd_open_set(rng, 2), _rnd_open_set(rng, 2)
        unify(t1, t2, budget=100_000)  # raises UnifyBudgetError if wrong


def test_residual_for_ris_equations():
    t1 = parse_term("ris(X in D, 0 < X)")
    t2 = parse_term("{1,2}")
    out = unify(t1, t2)
    assert len(out.branches) == 1
    _, residual = out.branches[0]
    assert len(residual) == 1
