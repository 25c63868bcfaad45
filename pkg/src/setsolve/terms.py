"""Term and formula data model: hereditarily finite set terms, formulas,
substitutions, fresh variables, groundness.

Set terms use the extensional constructor SetCons(x, rest) denoting
{x} | rest, where rest must be set-positioned (a variable, EmptySet,
another SetCons, or a Ris). Duplicate elements are permitted and absorbed
semantically; nothing normalizes eagerly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

_var_ids = itertools.count(1)

# Arithmetic operator names; Ctor nodes with these names are interpreted
# (linear arithmetic), every other Ctor is a free constructor.
ARITH_OPS = ("+", "-", "*")


@dataclass(frozen=True, eq=False)
class Var:
    """A logic variable. Identity (and hashing) is by numeric id, so two
    variables with the same printable name are still distinct."""
    name: str
    id: int = field(default_factory=lambda: next(_var_ids))

    def __eq__(self, other):
        return isinstance(other, Var) and self.id == other.id

    def __hash__(self):
        return hash(("var", self.id))

    def __repr__(self):
        return f"Var({self.name}#{self.id})"


def fresh_var(hint: str = "N") -> Var:
    """A globally fresh variable; the printable name derives from hint."""
    return Var(hint)


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Tuple:
    """Ordered tuple, length >= 2; models pairs and schema bindings."""
    items: tuple

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("tuples need at least 2 elements")


@dataclass(frozen=True)
class Ctor:
    """Free-constructor application, e.g. goodT(Token); arity >= 1."""
    name: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("constructor applications need at least 1 argument")


@dataclass(frozen=True)
class EmptySet:
    pass


EMPTY = EmptySet()


@dataclass(frozen=True, eq=False)
class SetCons:
    """{elem / rest}: the set {elem} union rest."""
    elem: object
    rest: object

    def __eq__(self, other):
        return (
            isinstance(other, SetCons)
            and self.elem == other.elem
            and self.rest == other.rest
        )

    def __hash__(self):
        return hash(("setcons", self.elem, self.rest))


@dataclass(frozen=True, eq=False)
class Ris:
    """Restricted intensional set ris(bound in domain, filter):
    the set {x : x in domain and filter[bound := x]}."""
    bound: Var
    domain: object
    filter: object  # a Formula

    def __eq__(self, other):
        return (
            isinstance(other, Ris)
            and self.bound == other.bound
            and self.domain == other.domain
            and self.filter == other.filter
        )

    def __hash__(self):
        return hash(("ris", self.bound, self.domain))


# ---------------------------------------------------------------------------
# Formulas

@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Prim:
    """Primitive constraint from the fixed vocabulary."""
    name: str
    args: tuple


@dataclass(frozen=True)
class Call:
    """Clause call; resolved against the clause database at solve time."""
    name: str
    args: tuple


@dataclass(frozen=True)
class Delayed:
    """delay(inner, false): parked until ground or store stabilization."""
    inner: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


TRUE = TrueF()
FALSE = FalseF()


def conj(parts):
    """Right-nested conjunction of a formula list ([] is true)."""
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(parts):
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def set_term(elems, rest=EMPTY):
    """{e1,...,en / rest} as nested SetCons."""
    out = rest
    for e in reversed(list(elems)):
        out = SetCons(e, out)
    return out


def set_parts(t):
    """Split a SetCons chain into (listed elements, tail term)."""
    elems = []
    while isinstance(t, SetCons):
        elems.append(t.elem)
        t = t.rest
    return elems, t


def is_set_positioned(t) -> bool:
    return isinstance(t, (Var, EmptySet, SetCons, Ris))


def is_arith_op(t) -> bool:
    return isinstance(t, Ctor) and t.name in ARITH_OPS


# ---------------------------------------------------------------------------
# Substitutions

class Substitution:
    """Idempotent, occurs-checked finite map Var -> Term.

    bind() keeps idempotency by applying the new binding to all existing
    range terms, so apply() is a single structural pass.
    """

    __slots__ = ("_b",)

    def __init__(self, bindings=None):
        self._b = dict(bindings) if bindings else {}

    def __len__(self):
        return len(self._b)

    def __contains__(self, v):
        return v in self._b

    def items(self):
        return self._b.items()

    def lookup(self, v):
        return self._b.get(v)

    def copy(self) -> "Substitution":
        return Substitution(self._b)

    def walk(self, t):
        """Chase top-level variable bindings only."""
        while isinstance(t, Var):
            nxt = self._b.get(t)
            if nxt is None:
                return t
            t = nxt
        return t

    def apply(self, t):
        return apply_subst(self, t)

    def apply_formula(self, f):
        return apply_subst_formula(self, f)

    def bind(self, v: Var, t):
        """Extend with v -> t (t already applied). Returns the new
        substitution, or None if the occurs check fails."""
        if isinstance(t, Var) and t == v:
            return self
        if occurs(v, t):
            return None
        one = Substitution({v: t})
        nb = {}
        for u, r in self._b.items():
            nb[u] = one.apply(r)
        nb[v] = t
        return Substitution(nb)

    def compose(self, other: "Substitution") -> "Substitution":
        """compose(s1, s2).apply(t) == s2.apply(s1.apply(t))."""
        nb = {}
        for v, t in self._b.items():
            nb[v] = other.apply(t)
        for v, t in other._b.items():
            if v not in nb:
                nb[v] = t
        return Substitution(nb)

    def restrict(self, varset) -> "Substitution":
        return Substitution({v: t for v, t in self._b.items() if v in varset})

    def __repr__(self):
        inner = ", ".join(f"{v.name}#{v.id}->{t}" for v, t in self._b.items())
        return f"Substitution({inner})"


def apply_subst(s: Substitution, t):
    """Homomorphic application; RIS bound variables are never substituted."""
    t = s.walk(t)
    if isinstance(t, (Var, Int, Atom, EmptySet)):
        return t
    if isinstance(t, Tuple):
        return Tuple(tuple(apply_subst(s, x) for x in t.items))
    if isinstance(t, Ctor):
        return Ctor(t.name, tuple(apply_subst(s, x) for x in t.args))
    if isinstance(t, SetCons):
        return SetCons(apply_subst(s, t.elem), apply_subst(s, t.rest))
    if isinstance(t, Ris):
        inner = _without(s, t.bound)
        return Ris(t.bound, apply_subst(inner, t.domain),
                   apply_subst_formula(inner, t.filter))
    raise TypeError(f"not a term: {t!r}")


def _without(s: Substitution, v: Var) -> Substitution:
    if v not in s:
        return s
    return Substitution({u: r for u, r in s.items() if u != v})


def apply_subst_formula(s: Substitution, f):
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Prim):
        return Prim(f.name, tuple(apply_subst(s, a) for a in f.args))
    if isinstance(f, Call):
        return Call(f.name, tuple(apply_subst(s, a) for a in f.args))
    if isinstance(f, Delayed):
        return Delayed(apply_subst_formula(s, f.inner))
    if isinstance(f, And):
        return And(apply_subst_formula(s, f.left), apply_subst_formula(s, f.right))
    if isinstance(f, Or):
        return Or(apply_subst_formula(s, f.left), apply_subst_formula(s, f.right))
    raise TypeError(f"not a formula: {f!r}")


def occurs(v: Var, t) -> bool:
    """Does v occur anywhere in term t (RIS bound occurrences shadowed)?"""
    if isinstance(t, Var):
        return t == v
    if isinstance(t, (Int, Atom, EmptySet)):
        return False
    if isinstance(t, Tuple):
        return any(occurs(v, x) for x in t.items)
    if isinstance(t, Ctor):
        return any(occurs(v, x) for x in t.args)
    if isinstance(t, SetCons):
        return occurs(v, t.elem) or occurs(v, t.rest)
    if isinstance(t, Ris):
        if t.bound == v:
            return False
        return occurs(v, t.domain) or v in formula_vars(t.filter)
    raise TypeError(f"not a term: {t!r}")


def term_vars(t, acc=None) -> set:
    if acc is None:
        acc = set()
    if isinstance(t, Var):
        acc.add(t)
    elif isinstance(t, (Int, Atom, EmptySet)):
        pass
    elif isinstance(t, Tuple):
        for x in t.items:
            term_vars(x, acc)
    elif isinstance(t, Ctor):
        for x in t.args:
            term_vars(x, acc)
    elif isinstance(t, SetCons):
        term_vars(t.elem, acc)
        term_vars(t.rest, acc)
    elif isinstance(t, Ris):
        inner = term_vars(t.domain) | formula_vars(t.filter)
        inner.discard(t.bound)
        acc |= inner
    else:
        raise TypeError(f"not a term: {t!r}")
    return acc


def formula_vars(f, acc=None) -> set:
    if acc is None:
        acc = set()
    if isinstance(f, (TrueF, FalseF)):
        pass
    elif isinstance(f, (Prim, Call)):
        for a in f.args:
            term_vars(a, acc)
    elif isinstance(f, Delayed):
        formula_vars(f.inner, acc)
    elif isinstance(f, (And, Or)):
        formula_vars(f.left, acc)
        formula_vars(f.right, acc)
    else:
        raise TypeError(f"not a formula: {f!r}")
    return acc


def is_ground(t) -> bool:
    """True iff t has no free variable. A RIS is ground iff its domain is
    ground and its filter has no free variables beyond the bound one."""
    return not term_vars(t)


def rename_formula(f, mapping=None):
    """Rename all free variables apart (fresh ids, same name hints).
    Returns (renamed formula, mapping). RIS bound variables are renamed
    too, capture-free."""
    if mapping is None:
        mapping = {}

    def rv(v: Var) -> Var:
        if v not in mapping:
            mapping[v] = fresh_var(v.name)
        return mapping[v]

    def rt(t):
        if isinstance(t, Var):
            return rv(t)
        if isinstance(t, (Int, Atom, EmptySet)):
            return t
        if isinstance(t, Tuple):
            return Tuple(tuple(rt(x) for x in t.items))
        if isinstance(t, Ctor):
            return Ctor(t.name, tuple(rt(x) for x in t.args))
        if isinstance(t, SetCons):
            return SetCons(rt(t.elem), rt(t.rest))
        if isinstance(t, Ris):
            return Ris(rv(t.bound), rt(t.domain), rf(t.filter))
        raise TypeError(f"not a term: {t!r}")

    def rf(g):
        if isinstance(g, (TrueF, FalseF)):
            return g
        if isinstance(g, Prim):
            return Prim(g.name, tuple(rt(a) for a in g.args))
        if isinstance(g, Call):
            return Call(g.name, tuple(rt(a) for a in g.args))
        if isinstance(g, Delayed):
            return Delayed(rf(g.inner))
        if isinstance(g, And):
            return And(rf(g.left), rf(g.right))
        if isinstance(g, Or):
            return Or(rf(g.left), rf(g.right))
        raise TypeError(f"not a formula: {g!r}")

    return rf(f), mapping


def rename_term(t, mapping=None):
    f, mapping = rename_formula(Prim("=", (t, t)), mapping)
    return f.args[0], mapping
