import itertools
import random

import pytest

from setsolve.arith import (
    ArithStore, NonLinearError, arith_eval_ground, make_row,
)
from setsolve.syntax import parse_term
from setsolve.terms import Ctor, Int, Var, fresh_var


def _store(rows):
    st = ArithStore()
    for lhs, rel, rhs in rows:
        st.add(make_row(lhs, rel, rhs))
    return st


def test_contradictory_bounds():
    x = fresh_var("X")
    st = _store([(x, ">=", Int(0)), (x, "=<", Int(0)), (x, "=", Int(1))])
    assert not st.check().consistent


def test_even_coefficient_odd_constant_has_no_integer_point():
    x = fresh_var("X")
    st = _store([(Ctor("*", (Int(2), x)), "=", Int(3)),
                 (x, ">=", Int(0)), (x, "=<", Int(5))])
    assert not st.check().consistent


def test_clock_sum():
    # 5 + 4 gives 9, then 9 + 10 gives 19
    lt, at = fresh_var("LT"), fresh_var("AT")
    st = _store([(lt, "=", Ctor("+", (Int(5), Int(4)))),
                 (at, "=", Ctor("+", (lt, Int(10))))])
    res = st.check()
    assert res.consistent
    pinned = dict(st.determined())
    assert pinned[lt] == 9 and pinned[at] == 19


def test_eval_ground():
    assert arith_eval_ground(parse_term("9 + 10")) == 19
    assert arith_eval_ground(parse_term("0 - 0")) == 0
    assert arith_eval_ground(parse_term("7 * 3")) == 21


def test_nonlinear_rejected():
    x, y = fresh_var("X"), fresh_var("Y")
    with pytest.raises(NonLinearError):
        make_row(Ctor("*", (x, y)), "=", Int(1))
    with pytest.raises(NonLinearError):
        make_row(parse_term("foo"), "=<", Int(1))


def test_strict_cycle():
    x, y = fresh_var("X"), fresh_var("Y")
    st = _store([(x, "<", y), (y, "<", x)])
    assert not st.check().consistent


def test_disequality_squeeze():
    x = fresh_var("X")
    st = _store([(x, ">=", Int(0)), (x, "=<", Int(1)),
                 (x, "neq", Int(0)), (x, "neq", Int(1))])
    assert not st.check().consistent


def test_unbounded_is_rational_only():
    x = fresh_var("X")
    st = _store([(x, ">=", Int(0))])
    res = st.check()
    assert res.consistent and res.rational_only


def _enumerate_verdict(rows, variables, lo=-10, hi=10):
    for combo in itertools.product(range(lo, hi + 1), repeat=len(variables)):
        env = dict(zip(variables, combo))
        ok = True
        for coeffs, rel, const in rows:
            lhs = sum(c * env[v] for v, c in coeffs.items())
            good = {"=": lhs == const, "=<": lhs <= const,
                    "<": lhs < const, "neq": lhs != const}[rel]
            if not good:
                ok = False
                break
        if ok:
            return True
    return False


def test_fuzz_against_integer_enumeration():
    rng = random.Random(20260810)
    for _ in range(250):
        nvars = rng.randint(1, 3)
        variables = [fresh_var(f"X{i}") for i in range(nvars)]
        st = ArithStore()
        raw = []
        for v in variables:
            st.add(make_row(v, ">=", Int(-10)))
            st.add(make_row(v, "=<", Int(10)))
            raw.append(({v: 1}, "=<", 10))
            raw.append(({v: -1}, "=<", 10))
        for _ in range(rng.randint(1, 4)):
            coeffs = {}
            for v in variables:
                c = rng.randint(-3, 3)
                if c:
                    coeffs[v] = c
            if not coeffs:
                continue
            const = rng.randint(-5, 5)
            rel = rng.choice(["=", "=<", "<", "neq"])
            lhs = None
            for v, c in coeffs.items():
                part = v if c == 1 else Ctor("*", (Int(c), v))
                lhs = part if lhs is None else Ctor("+", (lhs, part))
            st.add(make_row(lhs, rel, Int(const)))
            raw.append((coeffs, rel, const))
        want = _enumerate_verdict(raw, variables)
        got = st.check()
        assert got.consistent == want, raw
        assert not got.rational_only


def test_assert_order_independence():
    rng = random.Random(5)
    x, y, z = (fresh_var(n) for n in "XYZ")
    rows = [make_row(x, ">=", Int(0)), make_row(x, "=<", Int(4)),
            make_row(y, "=", Ctor("+", (x, Int(2)))),
            make_row(z, "<", y), make_row(z, ">=", Int(0)),
            make_row(Ctor("+", (x, y)), "neq", Int(6))]
    base = None
    for _ in range(10):
        rng.shuffle(rows)
        st = ArithStore()
        for r in rows:
            st.add(r)
        res = st.check()
        if base is None:
            base = (res.consistent, res.rational_only)
        assert (res.consistent, res.rational_only) == base


def test_marked_variable_bound_to_non_integer_fails():
    from setsolve.terms import Atom
    x = fresh_var("X")
    st = _store([(x, ">=", Int(0))])
    res = st.check(walk=lambda v: Atom("a") if v == x else v)
    assert not res.consistent
