"""Concrete syntax: lexer, parser and printer for the constraint language.

Programs (.slog) are clause lists; goals are formulas terminated by a dot;
obligation manifests (.obl) interleave `#obligation` headers with goals.

Grammar sketch:

    program  = { clause }
    clause   = head [ ":-" formula ] "."
    head     = name [ "(" termlist ")" ]
    formula  = disj
    disj     = conj { "or" conj }              (right associative)
    conj     = atom { "&" atom }               (right associative)
    atom     = "(" formula ")" | "true" | "false"
             | "delay" "(" clausecall "," "false" ")"
             | "foreach" "(" VAR "in" term "," formula ")"
             | term INFIXOP term | clausecall
    term     = sum                              (+, -, * with usual precedence)
    primary  = VAR | "_" | INT | "-" INT | name | name "(" termlist ")"
             | "[" termlist "]" | "{" "}" | "{" termlist [ "/" term ] "}"
             | "ris" "(" VAR "in" term "," formula ")" | "(" sum ")"

Comments run from `%` to end of line. `{a,b/R}` desugars to {a/{b/R}}.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .terms import (
    EMPTY, And, Atom, Call, Ctor, Delayed, EmptySet, FalseF, Int, Or, Prim,
    Ris, SetCons, TrueF, Tuple, Var, fresh_var, is_arith_op,
    is_set_positioned, set_parts, set_term,
)

# Infix constraint operators (token text -> canonical Prim name).
INFIX_CONSTRAINTS = {"=": "=", "neq": "neq", "in": "in", "nin": "nin",
                     "=<": "=<", "<": "<", ">=": ">=", ">": ">"}

# Prefix constraint predicates with their arities.
PREFIX_CONSTRAINTS = {
    "un": 3, "nun": 3, "inters": 3, "subset": 2, "dom": 2, "ran": 2,
    "comp": 3, "ncomp": 3, "pfun": 1, "apply": 3,
}

# Names that cannot be used as atoms, constructors or clause names.
RESERVED = {"or", "in", "nin", "neq", "ris", "delay", "foreach",
            "true", "false"}

EXPECTS = ("sat", "unsat")
CATEGORIES = ("invariance", "op-sat", "init-sat", "neg-consistency", "property")


class SyntaxError_(Exception):
    """Syntax error with source position."""

    def __init__(self, message, file="<input>", line=0, col=0):
        self.message = message
        self.file = file
        self.line = line
        self.col = col
        super().__init__(f"{file}:{line}:{col}: {message}")


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int


@dataclass(frozen=True)
class Clause:
    name: str
    params: tuple
    body: object
    span: Span

    @property
    def arity(self):
        return len(self.params)

    @property
    def key(self):
        return (self.name, self.arity)


@dataclass
class SourceProgram:
    clauses: list
    file: str = "<input>"


@dataclass(frozen=True)
class ObligationEntry:
    name: str
    expect: str       # sat | unsat
    category: str
    goal: object
    span: Span


@dataclass
class ObligationManifest:
    entries: list = field(default_factory=list)
    file: str = "<input>"


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<WS>\s+)
  | (?P<COMMENT>%[^\n]*)
  | (?P<COLONDASH>:-)
  | (?P<LE>=<)
  | (?P<GE>>=)
  | (?P<INT>\d+)
  | (?P<VAR>[A-Z_][A-Za-z0-9_]*)
  | (?P<NAME>[a-z][A-Za-z0-9_]*)
  | (?P<SYM>[()\[\]{},/.&=<>+\-*])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str   # INT, VAR, NAME, or the literal symbol text
    text: str
    line: int
    col: int


def tokenize(text, file="<input>"):
    toks = []
    line, linestart = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            col = pos - linestart + 1
            raise SyntaxError_(f"illegal character {text[pos]!r}", file, line, col)
        kind = m.lastgroup
        tok_text = m.group()
        col = m.start() - linestart + 1
        if kind in ("WS", "COMMENT"):
            nl = tok_text.count("\n")
            if nl:
                line += nl
                linestart = m.start() + tok_text.rindex("\n") + 1
        elif kind in ("INT", "VAR", "NAME"):
            toks.append(Token(kind, tok_text, line, col))
        else:
            toks.append(Token(tok_text, tok_text, line, col))
        pos = m.end()
    toks.append(Token("EOF", "", line, len(text) - linestart + 1))
    return toks


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens, file="<input>"):
        self.toks = tokens
        self.i = 0
        self.file = file
        self.scope = {}          # variable name -> Var, per clause/goal
        self.scope_stack = []    # shadowed entries for RIS bounds

    # token helpers

    def peek(self, ahead=0) -> Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, kind) -> bool:
        return self.peek().kind == kind

    def expect(self, kind) -> Token:
        t = self.peek()
        if t.kind != kind:
            self.error(f"expected {kind!r}, found {t.text!r}" if t.kind != "EOF"
                       else f"expected {kind!r}, found end of input", t)
        return self.next()

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise SyntaxError_(message, self.file, tok.line, tok.col)

    def fresh_scope(self):
        self.scope = {}
        self.scope_stack = []

    def var_for(self, name) -> Var:
        if name == "_":
            return fresh_var("_")
        if name not in self.scope:
            self.scope[name] = fresh_var(name)
        return self.scope[name]

    def push_ris_bound(self, name) -> Var:
        self.scope_stack.append((name, self.scope.get(name)))
        v = fresh_var(name)
        self.scope[name] = v
        return v

    def pop_ris_bound(self):
        name, old = self.scope_stack.pop()
        if old is None:
            del self.scope[name]
        else:
            self.scope[name] = old

    # program / clauses

    def parse_program(self) -> SourceProgram:
        clauses = []
        seen = {}
        while not self.at("EOF"):
            c = self.parse_clause()
            if c.key in seen:
                prev = seen[c.key]
                self.error(
                    f"duplicate clause {c.name}/{c.arity} "
                    f"(first defined at {prev.span.file}:{prev.span.line})",
                    Token("NAME", c.name, c.span.line, c.span.col))
            seen[c.key] = c
            clauses.append(c)
        return SourceProgram(clauses, self.file)

    def parse_clause(self) -> Clause:
        head_tok = self.expect("NAME")
        if head_tok.text in RESERVED:
            self.error(f"{head_tok.text!r} is reserved", head_tok)
        self.fresh_scope()
        params = ()
        if self.at("("):
            self.next()
            params = tuple(self.parse_termlist())
            self.expect(")")
        if self.at(":-"):
            self.next()
            body = self.parse_formula()
        else:
            body = TrueF()
        self.expect(".")
        span = Span(self.file, head_tok.line, head_tok.col)
        return Clause(head_tok.text, params, body, span)

    def parse_goal(self):
        self.fresh_scope()
        f = self.parse_formula()
        self.expect(".")
        return f

    # formulas

    def parse_formula(self):
        left = self.parse_conj()
        if self.at("NAME") and self.peek().text == "or":
            self.next()
            return Or(left, self.parse_formula())
        return left

    def parse_conj(self):
        left = self.parse_atom()
        if self.at("&"):
            self.next()
            return And(left, self.parse_conj())
        return left

    def parse_atom(self):
        t = self.peek()
        if t.kind == "(":
            self.next()
            f = self.parse_formula()
            self.expect(")")
            return f
        if t.kind == "NAME":
            if t.text == "true":
                self.next()
                return TrueF()
            if t.text == "false":
                self.next()
                return FalseF()
            if t.text == "delay" and self.peek(1).kind == "(":
                return self.parse_delay()
            if t.text == "foreach" and self.peek(1).kind == "(":
                return self.parse_foreach()
        term = self.parse_term()
        op_tok = self.peek()
        op = None
        if op_tok.kind in ("=", "<", ">", "=<", ">="):
            op = op_tok.kind
        elif op_tok.kind == "NAME" and op_tok.text in ("neq", "in", "nin"):
            op = op_tok.text
        if op is not None:
            self.next()
            rhs = self.parse_term()
            return Prim(INFIX_CONSTRAINTS[op], (term, rhs))
        # No infix operator: must be a clause call or prefix constraint.
        if isinstance(term, Atom):
            return Call(term.name, ())
        if isinstance(term, Ctor) and not is_arith_op(term):
            arity = PREFIX_CONSTRAINTS.get(term.name)
            if arity is not None:
                if arity != len(term.args):
                    self.error(f"{term.name} takes {arity} arguments, "
                               f"got {len(term.args)}", t)
                return Prim(term.name, term.args)
            return Call(term.name, term.args)
        self.error("expected a constraint or clause call", t)

    def parse_delay(self):
        self.next()  # delay
        self.expect("(")
        tok = self.peek()
        inner = self.parse_atom()
        if not isinstance(inner, (Call, Prim)):
            self.error("delay expects a clause call or constraint", tok)
        self.expect(",")
        flag = self.expect("NAME")
        if flag.text != "false":
            self.error("the second argument of delay must be the literal "
                       "'false'", flag)
        self.expect(")")
        return Delayed(inner)

    def parse_foreach(self):
        self.next()  # foreach
        self.expect("(")
        vtok = self.expect("VAR")
        bound = self.push_ris_bound(vtok.text)
        intok = self.expect("NAME")
        if intok.text != "in":
            self.error("expected 'in'", intok)
        # The domain is parsed outside the bound variable's scope.
        self.pop_ris_bound()
        domain = self.parse_term()
        bound2 = self.push_ris_bound(vtok.text)
        self.expect(",")
        body = self.parse_formula()
        self.pop_ris_bound()
        self.expect(")")
        self._check_set_position(domain, vtok)
        return Prim("foreach", (Ris(bound2, domain, body),))

    # terms

    def parse_termlist(self):
        items = [self.parse_term()]
        while self.at(","):
            self.next()
            items.append(self.parse_term())
        return items

    def parse_term(self):
        return self.parse_sum()

    def parse_sum(self):
        left = self.parse_product()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            right = self.parse_product()
            left = Ctor(op, (left, right))
        return left

    def parse_product(self):
        left = self.parse_primary()
        while self.at("*"):
            self.next()
            right = self.parse_primary()
            left = Ctor("*", (left, right))
        return left

    def parse_primary(self):
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return Int(int(t.text))
        if t.kind == "-":
            self.next()
            n = self.expect("INT")
            return Int(-int(n.text))
        if t.kind == "VAR":
            self.next()
            return self.var_for(t.text)
        if t.kind == "NAME":
            if t.text == "ris" and self.peek(1).kind == "(":
                return self.parse_ris()
            self.next()
            if self.at("("):
                if t.text in RESERVED:
                    self.error(f"{t.text!r} is reserved", t)
                self.next()
                args = tuple(self.parse_termlist())
                self.expect(")")
                return Ctor(t.text, args)
            if t.text in RESERVED:
                self.error(f"{t.text!r} is reserved", t)
            return Atom(t.text)
        if t.kind == "[":
            self.next()
            items = self.parse_termlist()
            self.expect("]")
            if len(items) < 2:
                self.error("tuples need at least 2 elements", t)
            return Tuple(tuple(items))
        if t.kind == "{":
            return self.parse_set()
        if t.kind == "(":
            self.next()
            inner = self.parse_sum()
            self.expect(")")
            return inner
        self.error(f"expected a term, found "
                   f"{t.text!r}" if t.kind != "EOF" else
                   "expected a term, found end of input", t)

    def parse_set(self):
        open_tok = self.expect("{")
        if self.at("}"):
            self.next()
            return EMPTY
        elems = [self.parse_term()]
        while self.at(","):
            self.next()
            elems.append(self.parse_term())
        rest = EMPTY
        if self.at("/"):
            self.next()
            rtok = self.peek()
            rest = self.parse_term()
            self._check_set_position(rest, rtok)
        self.expect("}")
        return set_term(elems, rest)

    def parse_ris(self):
        self.next()  # ris
        self.expect("(")
        vtok = self.expect("VAR")
        intok = self.expect("NAME")
        if intok.text != "in":
            self.error("expected 'in'", intok)
        domain = self.parse_term()
        self._check_set_position(domain, vtok)
        bound = self.push_ris_bound(vtok.text)
        self.expect(",")
        body = self.parse_formula()
        self.pop_ris_bound()
        self.expect(")")
        return Ris(bound, domain, body)

    def _check_set_position(self, t, tok):
        if not is_set_positioned(t):
            self.error("set position must be set-valued ({}, a variable, "
                       "an extensional set, or a ris term)", tok)


def parse_program(text: str, file="<input>") -> SourceProgram:
    return _Parser(tokenize(text, file), file).parse_program()


def parse_goal(text: str, file="<goal>"):
    p = _Parser(tokenize(text, file), file)
    f = p.parse_goal()
    if not p.at("EOF"):
        p.error("trailing input after goal")
    return f


def parse_term(text: str, file="<term>"):
    p = _Parser(tokenize(text, file), file)
    p.fresh_scope()
    t = p.parse_term()
    if not p.at("EOF"):
        p.error("trailing input after term")
    return t


_OBL_HEADER = re.compile(
    r"^#obligation\s+(?P<name>[A-Za-z0-9_]+)"
    r"\s+expect=(?P<expect>sat|unsat)"
    r"\s+category=(?P<category>[A-Za-z][A-Za-z0-9_-]*)\s*$")


def parse_manifest(text: str, file="<manifest>") -> ObligationManifest:
    """Parse a `.obl` manifest: `#obligation` header lines, each followed by
    one goal formula terminated by a dot."""
    manifest = ObligationManifest(file=file)
    seen = set()
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        raw = lines[i]
        stripped = raw.strip()
        if not stripped or stripped.startswith("%"):
            i += 1
            continue
        if not stripped.startswith("#"):
            raise SyntaxError_("expected an #obligation header", file, i + 1, 1)
        m = _OBL_HEADER.match(stripped)
        if not m:
            raise SyntaxError_(
                "malformed header; expected "
                "'#obligation <name> expect=<sat|unsat> category=<word>'",
                file, i + 1, 1)
        name = m.group("name")
        if name in seen:
            raise SyntaxError_(f"duplicate obligation name {name!r}",
                               file, i + 1, 1)
        seen.add(name)
        category = m.group("category")
        if category not in CATEGORIES:
            raise SyntaxError_(
                f"unknown category {category!r} (expected one of "
                f"{', '.join(CATEGORIES)})", file, i + 1, 1)
        header_line = i + 1
        # Collect goal lines until the chunk tokenizes to a DOT-terminated
        # formula.
        chunk = []
        i += 1
        while i < len(lines):
            chunk.append(lines[i])
            i += 1
            body = "\n".join(chunk)
            if re.sub(r"%[^\n]*", "", body).rstrip().endswith("."):
                break
        else:
            raise SyntaxError_(f"obligation {name!r} has no goal",
                               file, header_line, 1)
        goal = parse_goal("\n".join(chunk), file)
        manifest.entries.append(ObligationEntry(
            name=name, expect=m.group("expect"), category=category,
            goal=goal, span=Span(file, header_line, 1)))
    return manifest


# ---------------------------------------------------------------------------
# Printing

def print_term(t) -> str:
    return _pt(t, 0, _display_names(term=t))


def _display_names(term=None, formula=None):
    """Stable display names; distinct variables sharing a name get an id
    suffix so printing stays invertible."""
    from .terms import formula_vars, term_vars
    if term is not None:
        vs = term_vars(term) | _ris_bounds_term(term)
    else:
        vs = formula_vars(formula) | _ris_bounds_formula(formula)
    names = {}
    used = set()
    for v in sorted(vs, key=lambda u: u.id):
        base = v.name if v.name != "_" else f"_{v.id}"
        name = base if base not in used else f"{base}_{v.id}"
        names[v] = name
        used.add(name)
    return names


def _ris_bounds_term(t, acc=None):
    acc = set() if acc is None else acc
    if isinstance(t, (Tuple,)):
        for x in t.items:
            _ris_bounds_term(x, acc)
    elif isinstance(t, Ctor):
        for x in t.args:
            _ris_bounds_term(x, acc)
    elif isinstance(t, SetCons):
        _ris_bounds_term(t.elem, acc)
        _ris_bounds_term(t.rest, acc)
    elif isinstance(t, Ris):
        acc.add(t.bound)
        _ris_bounds_term(t.domain, acc)
        _ris_bounds_formula(t.filter, acc)
    return acc


def _ris_bounds_formula(f, acc=None):
    acc = set() if acc is None else acc
    if isinstance(f, (Prim, Call)):
        for a in f.args:
            _ris_bounds_term(a, acc)
    elif isinstance(f, Delayed):
        _ris_bounds_formula(f.inner, acc)
    elif isinstance(f, (And, Or)):
        _ris_bounds_formula(f.left, acc)
        _ris_bounds_formula(f.right, acc)
    return acc


# precedence levels: 0 none, 1 sum, 2 product
def _pt(t, prec, names) -> str:
    if isinstance(t, Var):
        got = names.get(t)
        if got is not None:
            return got
        return t.name if t.name != "_" else f"_{t.id}"
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Tuple):
        return "[" + ",".join(_pt(x, 0, names) for x in t.items) + "]"
    if isinstance(t, EmptySet):
        return "{}"
    if isinstance(t, SetCons):
        elems, tail = set_parts(t)
        inner = ",".join(_pt(x, 0, names) for x in elems)
        if isinstance(tail, EmptySet):
            return "{" + inner + "}"
        return "{" + inner + "/" + _pt(tail, 0, names) + "}"
    if isinstance(t, Ris):
        return (f"ris({_pt(t.bound, 0, names)} in {_pt(t.domain, 0, names)}, "
                f"{_pf(t.filter, 0, names)})")
    if isinstance(t, Ctor):
        if t.name in ("+", "-") and len(t.args) == 2:
            s = f"{_pt(t.args[0], 1, names)} {t.name} {_pt(t.args[1], 2, names)}"
            return f"({s})" if prec >= 2 else s
        if t.name == "*" and len(t.args) == 2:
            s = f"{_pt(t.args[0], 2, names)}*{_pt(t.args[1], 3, names)}"
            return f"({s})" if prec >= 3 else s
        return t.name + "(" + ",".join(_pt(x, 0, names) for x in t.args) + ")"
    raise TypeError(f"not a term: {t!r}")


_INFIX_PRINT = {"=", "neq", "in", "nin", "=<", "<", ">=", ">"}


def print_formula(f) -> str:
    return _pf(f, 0, _display_names(formula=f))


# precedence: 0 or-level, 1 and-level, 2 atom
def _pf(f, prec, names) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Or):
        s = f"{_pf(f.left, 1, names)} or {_pf(f.right, 0, names)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(f, And):
        s = f"{_pf(f.left, 2, names)} & {_pf(f.right, 1, names)}"
        return f"({s})" if prec >= 2 else s
    if isinstance(f, Delayed):
        return f"delay({_pf(f.inner, 2, names)},false)"
    if isinstance(f, Call):
        if not f.args:
            return f.name
        return f.name + "(" + ",".join(_pt(a, 0, names) for a in f.args) + ")"
    if isinstance(f, Prim):
        if f.name in _INFIX_PRINT:
            return (f"{_pt(f.args[0], 0, names)} {f.name} "
                    f"{_pt(f.args[1], 0, names)}")
        if f.name == "foreach":
            r = f.args[0]
            return (f"foreach({_pt(r.bound, 0, names)} in "
                    f"{_pt(r.domain, 0, names)}, {_pf(r.filter, 0, names)})")
        return f.name + "(" + ",".join(_pt(a, 0, names) for a in f.args) + ")"
    raise TypeError(f"not a formula: {f!r}")


def alpha_equal(a, b) -> bool:
    """Structural equality up to variable renaming (terms or formulas)."""
    fwd, bwd = {}, {}

    def vt(x, y):
        if x in fwd:
            return fwd[x] == y and bwd.get(y) == x
        if y in bwd:
            return False
        fwd[x] = y
        bwd[y] = x
        return True

    def eq(x, y):
        if isinstance(x, Var) or isinstance(y, Var):
            return isinstance(x, Var) and isinstance(y, Var) and vt(x, y)
        if type(x) is not type(y):
            return False
        if isinstance(x, (Int, Atom, EmptySet, TrueF, FalseF)):
            return x == y
        if isinstance(x, Tuple):
            return len(x.items) == len(y.items) and all(
                eq(a, b) for a, b in zip(x.items, y.items))
        if isinstance(x, Ctor):
            return x.name == y.name and len(x.args) == len(y.args) and all(
                eq(a, b) for a, b in zip(x.args, y.args))
        if isinstance(x, SetCons):
            return eq(x.elem, y.elem) and eq(x.rest, y.rest)
        if isinstance(x, Ris):
            return eq(x.domain, y.domain) and eq(x.bound, y.bound) \
                and eq(x.filter, y.filter)
        if isinstance(x, (Prim, Call)):
            return x.name == y.name and len(x.args) == len(y.args) and all(
                eq(a, b) for a, b in zip(x.args, y.args))
        if isinstance(x, Delayed):
            return eq(x.inner, y.inner)
        if isinstance(x, (And, Or)):
            return eq(x.left, y.left) and eq(x.right, y.right)
        raise TypeError(f"cannot compare {x!r}")

    return eq(a, b)
