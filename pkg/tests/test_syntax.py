import random

import pytest

from setsolve.syntax import (
    SyntaxError_, alpha_equal, parse_goal, parse_manifest, parse_program,
    parse_term, print_formula, print_term,
)
from setsolve.terms import (
    EMPTY, And, Atom, Call, Ctor, Delayed, EmptySet, Int, Or, Prim, Ris,
    SetCons, Tuple, Var, fresh_var, set_term,
)


def test_minimal_clause():
    prog = parse_program("p(X) :- X in {1,2}.")
    assert len(prog.clauses) == 1
    c = prog.clauses[0]
    assert c.name == "p" and c.arity == 1


def test_update_clause_parses_with_underscore_variable():
    prog = parse_program(
        "update(F,X,Y,F_,Error) :- F = {[X,V]/F1} & [X,V] nin F1 & "
        "F_ = {[X,Y]/F1} & Error = ok.")
    c = prog.clauses[0]
    assert c.name == "update" and c.arity == 5
    # F_ is an ordinary variable
    assert isinstance(c.params[3], Var) and c.params[3].name == "F_"


def test_truncated_input_is_a_syntax_error():
    with pytest.raises(SyntaxError_) as err:
        parse_program("q(X) :- X in {1,")
    assert "end of input" in str(err.value) or "expected" in str(err.value)


def test_error_carries_position():
    with pytest.raises(SyntaxError_) as err:
        parse_program("p(X) :-\n  X in $ .")
    assert err.value.line == 2


def test_duplicate_clause_rejected():
    with pytest.raises(SyntaxError_) as err:
        parse_program("p(X).\np(Y).")
    assert "duplicate" in str(err.value)


def test_goal_conjunction_of_constraints():
    g = parse_goal("un(A,B,C) & nun(B,A,C).")
    assert isinstance(g, And)
    assert g.left.name == "un" and g.right.name == "nun"


def test_goal_single_equality():
    g = parse_goal("X = {}.")
    assert isinstance(g, Prim) and g.name == "="
    assert g.args[1] == EMPTY


def test_foreach_goal():
    g = parse_goal("foreach(X in {1,2}, 0 < X).")
    assert isinstance(g, Prim) and g.name == "foreach"
    r = g.args[0]
    assert isinstance(r, Ris)
    assert isinstance(r.filter, Prim) and r.filter.name == "<"


def test_set_sugar_desugars_to_nested_cons():
    t = parse_term("{a,b/R}")
    assert isinstance(t, SetCons)
    assert t.elem == Atom("a")
    assert isinstance(t.rest, SetCons) and t.rest.elem == Atom("b")
    assert isinstance(t.rest.rest, Var)


def test_rest_of_set_must_be_set_valued():
    for bad in ("{a/1}", "{a/[1,2]}", "{a/b}"):
        with pytest.raises(SyntaxError_):
            parse_term(bad)


def test_tuples_need_two_elements():
    with pytest.raises(SyntaxError_):
        parse_term("[a]")


def test_anonymous_underscore_is_fresh_per_occurrence():
    g = parse_goal("[_,_] in F.")
    pair = g.args[0]
    assert pair.items[0] != pair.items[1]


def test_named_variables_shared_within_goal():
    g = parse_goal("X in A & X in B.")
    assert g.left.args[0] == g.right.args[0]


def test_precedence_and_binds_tighter_than_or():
    g = parse_goal("a1 & b1 or c1.")
    assert isinstance(g, Or)
    assert isinstance(g.left, And)


def test_right_associativity():
    g = parse_goal("a1 or b1 or c1.")
    assert isinstance(g, Or) and isinstance(g.right, Or)
    g = parse_goal("a1 & b1 & c1.")
    assert isinstance(g, And) and isinstance(g.right, And)


def test_delay_requires_literal_false():
    g = parse_goal("delay(p(X), false).")
    assert isinstance(g, Delayed) and isinstance(g.inner, Call)
    with pytest.raises(SyntaxError_):
        parse_goal("delay(p(X), true).")


def test_zero_arity_call():
    g = parse_goal("property3.")
    assert isinstance(g, Call) and g.args == ()


def test_reserved_words_rejected_as_atoms():
    with pytest.raises(SyntaxError_):
        parse_goal("X = ris.")


def test_negative_integers():
    t = parse_term("{1,-2}")
    elems = [t.elem, t.rest.elem]
    assert Int(-2) in elems


def test_arith_precedence():
    t = parse_term("A + B * 2")
    assert isinstance(t, Ctor) and t.name == "+"
    assert isinstance(t.args[1], Ctor) and t.args[1].name == "*"


# --- printing ---------------------------------------------------------

def test_print_set_insertion_order():
    t = set_term([Int(1), Int(2)])
    assert print_term(t) == "{1,2}"


def test_print_tuple():
    assert print_term(Tuple((Atom("hello"), Atom("world")))) == \
        "[hello,world]"


def test_print_ctor():
    v = fresh_var("T")
    assert print_term(Ctor("goodT", (v,))) == "goodT(T)"


def _rnd_term(rng, depth=2):
    kinds = ["var", "int", "atom"]
    if depth > 0:
        kinds += ["tuple", "ctor", "set", "set", "ris"]
    k = rng.choice(kinds)
    if k == "var":
        return fresh_var(rng.choice("XYZW"))
    if k == "int":
        return Int(rng.randint(-5, 5))
    if k == "atom":
        return Atom(rng.choice(["a", "b", "foo"]))
    if k == "tuple":
        return Tuple(tuple(_rnd_term(rng, depth - 1)
                           for _ in range(rng.randint(2, 3))))
    if k == "ctor":
        return Ctor(rng.choice(["f", "g"]),
                    tuple(_rnd_term(rng, depth - 1)
                          for _ in range(rng.randint(1, 2))))
    if k == "set":
        rest = rng.choice([EMPTY, fresh_var("R")])
        return set_term([_rnd_term(rng, depth - 1)
                         for _ in range(rng.randint(0, 3))], rest) \
            if rng.random() > 0.2 or rest is EMPTY else rest
    bound = fresh_var("B")
    return Ris(bound, rng.choice([EMPTY, fresh_var("D")]),
               Prim("<", (Int(0), bound)))


def _rnd_formula(rng, depth=2):
    k = rng.choice(["prim", "prim", "call", "and", "or", "delay"]
                   if depth > 0 else ["prim", "call"])
    if k == "prim":
        op = rng.choice(["=", "neq", "in", "nin"])
        return Prim(op, (_rnd_term(rng, 1), _rnd_term(rng, 1)
                         if op in ("=", "neq") else
                         rng.choice([EMPTY, fresh_var("S"),
                                     set_term([Int(1)])])))
    if k == "call":
        return Call(rng.choice(["p", "q"]),
                    tuple(_rnd_term(rng, 1)
                          for _ in range(rng.randint(0, 2))))
    if k == "delay":
        return Delayed(Call("p", (_rnd_term(rng, 1),)))
    left = _rnd_formula(rng, depth - 1)
    right = _rnd_formula(rng, depth - 1)
    return And(left, right) if k == "and" else Or(left, right)


def test_round_trip_terms():
    rng = random.Random(2024)
    for _ in range(300):
        t = _rnd_term(rng)
        back = parse_term(print_term(t))
        assert alpha_equal(t, back), f"{print_term(t)} vs {print_term(back)}"


def test_round_trip_formulas():
    rng = random.Random(2025)
    for _ in range(300):
        f = _rnd_formula(rng)
        back = parse_goal(print_formula(f) + ".")
        assert alpha_equal(f, back), print_formula(f)


# --- manifests --------------------------------------------------------

MANIFEST = """
% a comment
#obligation ex2 expect=unsat category=property
un(A,B,C) &
nun(B,A,C).

#obligation little expect=sat category=op-sat
X in {1}.
"""


def test_manifest_parses():
    m = parse_manifest(MANIFEST)
    assert [e.name for e in m.entries] == ["ex2", "little"]
    assert m.entries[0].expect == "unsat"
    assert m.entries[1].category == "op-sat"


def test_manifest_duplicate_name_rejected():
    bad = MANIFEST + "\n#obligation ex2 expect=sat category=op-sat\nX = 1.\n"
    with pytest.raises(SyntaxError_):
        parse_manifest(bad)


def test_manifest_bad_header_rejected():
    with pytest.raises(SyntaxError_):
        parse_manifest("#obligation broken expect=maybe category=property\n"
                       "X = 1.\n")
