import pytest

from setsolve.engine import ClauseDB
from setsolve.oracle import (
    OracleBudgetError, OracleError, ground_value, holds, inline_calls,
    oracle_check,
)
from setsolve.syntax import parse_goal, parse_program, parse_term


def g(text):
    return parse_goal(text)


def test_union_over_singleton_universe():
    assert oracle_check(g("un(A,B,{1})."), [1], 1) == "sat"


def test_commutativity_negation_unsat():
    assert oracle_check(g("un(A,B,C) & nun(B,A,C)."), [0, 1], 1) == "unsat"


def test_pfun_violation():
    assert oracle_check(g("pfun({[a,1],[a,2]})."), ["a"], 1) == "unsat"


def test_ground_semantics_spot_checks():
    assert holds(g("un({1},{2},{1,2})."))
    assert not holds(g("un({1},{2},{1})."))
    assert holds(g("inters({1,2},{2,3},{2})."))
    assert holds(g("dom({[a,1],[b,2]},{a,b})."))
    assert holds(g("ran({[a,1],[b,2]},{1,2})."))
    assert holds(g("comp({[1,2]},{[2,3]},{[1,3]})."))
    assert holds(g("ncomp({[1,2]},{[2,3]},{})."))
    assert holds(g("subset({1},{1,2})."))
    assert holds(g("apply({[a,1]},a,1)."))
    assert not holds(g("apply({[a,1],[a,2]},a,1)."))
    assert holds(g("foreach(X in {1,2}, 0 < X)."))
    assert not holds(g("foreach(X in {1,-2}, 0 < X)."))
    assert holds(g("5 = 5 & 4 < 5 & 5 =< 5 & 5 >= 4 & 5 > 4."))


def test_duplicates_absorbed():
    assert ground_value(parse_term("{1,1,2}")) == frozenset({1, 2})
    assert holds(g("{1,1} = {1}."))


def test_kind_mismatch_is_false_not_error():
    assert not holds(g("1 in 2."))
    assert not holds(g("dom({1},{})."))
    assert not holds(g("a =< 1."))


def test_ris_value():
    v = ground_value(parse_term("ris(X in {1,2,3}, 1 < X)"))
    assert v == frozenset({2, 3})


def test_enumeration_finds_witness():
    assert oracle_check(g("X in {1,2} & X neq 1."), [1, 2], 1) == "sat"
    assert oracle_check(g("X in {1} & X neq 1."), [1], 1) == "unsat"


def test_relational_enumeration():
    assert oracle_check(g("dom(R,{0}) & pfun(R)."), [0, 1], 1) == "sat"
    assert oracle_check(
        g("dom(R,{0,1}) & pfun(R) & comp(R,R,{})."), [0, 1], 1) == "sat"


def test_budget_refusal():
    goal = g("un(A,B,C) & un(C,D,E).")
    with pytest.raises(OracleBudgetError):
        oracle_check(goal, [0, 1, 2], 2, budget=100)


def test_inline_calls():
    db = ClauseDB.load([parse_program("p(X) :- X in {1,2}.")])
    inlined = inline_calls(g("p(Y) & Y neq 1."), db)
    assert oracle_check(inlined, [1, 2], 1) == "sat"
    assert oracle_check(g("p(Y) & Y neq 1."), [1, 2], 1, db=db) == "sat"


def test_recursive_inline_budget():
    db = ClauseDB.load([parse_program("loop(X) :- loop(X).")])
    with pytest.raises(OracleBudgetError):
        oracle_check(g("loop(Y)."), [1], 1, db=db)


def test_unresolved_call_is_an_error():
    with pytest.raises(OracleError):
        holds(g("mystery(X)."), {})
