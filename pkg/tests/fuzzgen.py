"""Random goal generator for solver-vs-oracle agreement checks.

Goals are conjunctions of up to four constraints over up to four
variables; ground terms are drawn from the universe {0,1,2} with set
nesting depth at most two. Variables are kept kind-consistent (a set of
scalars is never also used as a relation) so the bounded oracle's
candidate pools stay faithful; the oracle refuses odd cases anyway.
"""
import random

from setsolve.terms import (
    EMPTY, Atom, Int, Prim, Tuple, Var, conj, fresh_var, set_term,
)

SCALARS = [0, 1, 2]

SORTS = ["set_s", "set_s", "set_s", "rel", "rel", "set_ss", "scalar", "int"]


def _ground_scalar(rng):
    return Int(rng.choice(SCALARS))


def _ground_pair(rng):
    return Tuple((_ground_scalar(rng), _ground_scalar(rng)))


def _ground_of(sort, rng):
    if sort in ("scalar", "int"):
        return _ground_scalar(rng)
    if sort == "pair":
        return _ground_pair(rng)
    if sort == "set_s":
        n = rng.randint(0, 3)
        return set_term([_ground_scalar(rng) for _ in range(n)])
    if sort == "rel":
        n = rng.randint(0, 3)
        return set_term([_ground_pair(rng) for _ in range(n)])
    if sort == "set_ss":
        n = rng.randint(0, 2)
        return set_term([_ground_of("set_s", rng) for _ in range(n)])
    raise ValueError(sort)


ELEM_OF = {"set_s": "scalar", "rel": "pair", "set_ss": "set_s"}


class GoalGen:
    def __init__(self, seed):
        self.rng = random.Random(seed)

    def goal(self):
        rng = self.rng
        nvars = rng.choice([1, 2, 2, 3, 3, 4])
        sorts = {}
        pool = {}
        for i in range(nvars):
            v = fresh_var(f"V{i}")
            s = rng.choice(SORTS)
            sorts[v] = s
            pool.setdefault(s, []).append(v)

        def arg(sort, ground_bias=0.35):
            vs = pool.get(sort, [])
            if vs and rng.random() > ground_bias:
                return rng.choice(vs)
            return _ground_of(sort, rng)

        ncons = rng.choice([1, 2, 2, 3, 3, 4])
        cons = []
        for _ in range(ncons):
            kind = rng.choice([
                "=", "neq", "in", "nin", "un", "un", "nun", "inters",
                "subset", "subset", "dom", "comp", "pfun",
            ])
            if kind in ("=", "neq"):
                s = rng.choice(["set_s", "set_s", "rel", "set_ss", "scalar"])
                cons.append(Prim(kind, (arg(s), arg(s))))
            elif kind in ("in", "nin"):
                s = rng.choice(["set_s", "set_s", "rel", "set_ss"])
                cons.append(Prim(kind, (arg(ELEM_OF[s]), arg(s))))
            elif kind in ("un", "nun", "inters"):
                s = rng.choice(["set_s", "set_s", "set_s", "rel", "set_ss"])
                cons.append(Prim(kind, (arg(s), arg(s), arg(s))))
            elif kind == "subset":
                s = rng.choice(["set_s", "set_s", "rel", "set_ss"])
                cons.append(Prim(kind, (arg(s), arg(s))))
            elif kind == "dom":
                name = rng.choice(["dom", "ran"])
                cons.append(Prim(name, (arg("rel"), arg("set_s"))))
            elif kind == "comp":
                # avoid repeating one variable across slots: T = R ; T is a
                # fixpoint equation the rewrite system does not decide
                args = []
                for _ in range(3):
                    a = arg("rel")
                    while isinstance(a, Var) and a in args:
                        a = arg("rel", ground_bias=0.7)
                    args.append(a)
                cons.append(Prim("comp", tuple(args)))
            else:
                cons.append(Prim("pfun", (arg("rel"),)))
        return conj(cons)
