import random

from setsolve.syntax import parse_goal, parse_term
from setsolve.terms import (
    EMPTY, Atom, Int, Prim, Ris, SetCons, Substitution, Tuple, Var,
    apply_subst, formula_vars, fresh_var, is_ground, is_set_positioned,
    occurs, rename_formula, set_term, term_vars,
)


def test_apply_binds_through_sets():
    x = fresh_var("X")
    s = Substitution({x: Int(1)})
    t = set_term([x, Int(2)])
    assert apply_subst(s, t) == set_term([Int(1), Int(2)])


def test_empty_substitution_is_identity():
    t = parse_term("{[a,1]/R}")
    assert Substitution().apply(t) == t


def test_apply_in_argument_position():
    f = fresh_var("F")
    rest = fresh_var("R")
    s = Substitution({f: SetCons(Tuple((Atom("a"), Int(1))), rest)})
    assert s.apply(f) == SetCons(Tuple((Atom("a"), Int(1))), rest)


def test_ris_bound_variable_is_not_substituted():
    g = parse_goal("X in ris(Y in D, Y = X).")
    r = g.args[1]
    s = Substitution({r.bound: Int(7)})
    assert s.apply(r) == r


def test_fresh_vars_distinct():
    a, b = fresh_var("N"), fresh_var("N")
    assert a != b and a.id != b.id


def test_fresh_never_collides_with_parsed():
    g = parse_goal("X = Y.")
    parsed = formula_vars(g)
    fresh = {fresh_var("X") for _ in range(10)}
    assert not (parsed & fresh)


def test_rename_apart_twice_disjoint():
    g = parse_goal("F = {[X,V]/F1} & [X,V] nin F1.")
    r1, _ = rename_formula(g)
    r2, _ = rename_formula(g)
    assert not (formula_vars(r1) & formula_vars(r2))


def test_is_ground():
    assert is_ground(parse_term("{1,2}"))
    assert not is_ground(parse_term("{X/{}}"))
    assert is_ground(parse_goal("X in ris(Y in {1,2}, 0 < Y).").args[1])
    assert not is_ground(parse_goal("X in ris(Y in {1,2}, Z < Y).").args[1])


def test_occurs_check_bind_fails():
    x = fresh_var("X")
    assert Substitution().bind(x, set_term([x])) is None


def test_occurs_through_ris_filter():
    x = fresh_var("X")
    bound = fresh_var("B")
    r = Ris(bound, EMPTY, Prim("=", (bound, x)))
    assert occurs(x, r)
    assert not occurs(bound, r)


def _rnd_ground(rng, depth):
    k = rng.choice(["int", "atom", "set"] if depth else ["int", "atom"])
    if k == "int":
        return Int(rng.randint(0, 2))
    if k == "atom":
        return Atom(rng.choice("ab"))
    return set_term([_rnd_ground(rng, depth - 1)
                     for _ in range(rng.randint(0, 2))])


def test_composition_associative_on_application():
    rng = random.Random(7)
    for _ in range(200):
        xs = [fresh_var(n) for n in "XYZ"]
        s1 = Substitution({xs[0]: rng.choice([xs[1], _rnd_ground(rng, 1)])})
        s2 = Substitution({xs[1]: _rnd_ground(rng, 2),
                           xs[2]: _rnd_ground(rng, 1)})
        t = set_term([xs[0], xs[2]], rng.choice([EMPTY, fresh_var("R")]))
        via_compose = s1.compose(s2).apply(t)
        via_apply = s2.apply(s1.apply(t))
        assert via_compose == via_apply


def test_subst_preserves_set_positions():
    rng = random.Random(8)
    for _ in range(100):
        tail = fresh_var("T")
        t = set_term([_rnd_ground(rng, 1)], tail)
        s = Substitution({tail: rng.choice(
            [EMPTY, set_term([Int(1)]), fresh_var("U")])})
        out = s.apply(t)
        assert is_set_positioned(out.rest)


def test_idempotent_after_bind():
    x, y = fresh_var("X"), fresh_var("Y")
    s = Substitution().bind(x, set_term([y]))
    s = s.bind(y, Int(3))
    t = s.apply(x)
    assert s.apply(t) == t == set_term([Int(3)])


def test_term_vars_excludes_ris_bound():
    g = parse_goal("A in ris(X in D, 0 < X).")
    names = {v.name for v in term_vars(g.args[1])}
    assert names == {"D"}
