"""Modal formulas over variables and parameters.

Formulas are hash-consed immutable trees over three primitives: falsum,
implication and box.  Every derived connective is stored as its primitive
expansion, so structural equality is object identity and hashing is cheap.
The printer recognises the expansions again and prints them with the usual
sugar.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping


class ClxError(Exception):
    """Base class for user-facing errors."""


class ParseError(ClxError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos
        self.text = text


class ResourceCap(ClxError):
    """A configured search limit was exceeded."""


VAR, PAR, BOT, IMP, BOX = "var", "par", "bot", "imp", "box"


class Formula:
    __slots__ = ("op", "a", "b", "name", "size", "_h", "__weakref__")

    op: str
    a: "Formula | None"
    b: "Formula | None"
    name: str | None
    size: int

    def __repr__(self) -> str:
        return f"Formula({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)

    def __hash__(self) -> int:
        return self._h

    def __reduce__(self):
        return (_rebuild, (self.op, self.a, self.b, self.name))

    @property
    def is_atom(self) -> bool:
        return self.op in (VAR, PAR)


_table: dict[tuple, Formula] = {}


def _mk(op: str, a=None, b=None, name=None) -> Formula:
    key = (op, id(a), id(b), name)
    f = _table.get(key)
    if f is None:
        f = object.__new__(Formula)
        f.op, f.a, f.b, f.name = op, a, b, name
        f.size = 1 + (a.size if a is not None else 0) + (b.size if b is not None else 0)
        f._h = hash((op, name, a._h if a is not None else 0, b._h if b is not None else 0))
        _table[key] = f
    return f


def _rebuild(op, a, b, name):
    return _mk(op, a, b, name)


def Var(name: str) -> Formula:
    if not name:
        raise ClxError("empty atom name")
    return _mk(VAR, name=name)


def Par(name: str) -> Formula:
    if not name:
        raise ClxError("empty atom name")
    return _mk(PAR, name=name)


FALSE = _mk(BOT)


def imp(a: Formula, b: Formula) -> Formula:
    return _mk(IMP, a, b)


def box(a: Formula) -> Formula:
    return _mk(BOX, a)


TRUE = imp(FALSE, FALSE)


def neg(a: Formula) -> Formula:
    return imp(a, FALSE)


def conj(a: Formula, b: Formula) -> Formula:
    return neg(imp(a, neg(b)))


def disj(a: Formula, b: Formula) -> Formula:
    return imp(neg(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return conj(imp(a, b), imp(b, a))


def dia(a: Formula) -> Formula:
    return neg(box(neg(a)))


def boxdot(a: Formula) -> Formula:
    return conj(a, box(a))


def diadot(a: Formula) -> Formula:
    return disj(a, dia(a))


def conj_all(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = conj(f, out)
    return out


def disj_all(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return FALSE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = disj(f, out)
    return out


def literal(params: Iterable[str], true_set: Iterable[str]) -> Formula:
    """The conjunction P^e fixing every parameter in `params`."""
    ts = set(true_set)
    return conj_all(Par(p) if p in ts else neg(Par(p)) for p in sorted(params))


# ---------------------------------------------------------------- matching

def match_neg(f: Formula):
    if f.op == IMP and f.b is FALSE:
        return f.a
    return None


def match_conj(f: Formula):
    x = match_neg(f)
    if x is not None and x.op == IMP:
        y = match_neg(x.b)
        if y is not None:
            return x.a, y
    return None


def match_disj(f: Formula):
    if f.op == IMP and f.b is not FALSE:
        x = match_neg(f.a)
        if x is not None:
            return x, f.b
    return None


def match_iff(f: Formula):
    c = match_conj(f)
    if c and c[0].op == IMP and c[1].op == IMP and c[0].a is c[1].b and c[0].b is c[1].a:
        return c[0].a, c[0].b
    return None


def match_dia(f: Formula):
    x = match_neg(f)
    if x is not None and x.op == BOX:
        y = match_neg(x.a)
        if y is not None:
            return y
    return None


def match_boxdot(f: Formula):
    c = match_conj(f)
    if c and c[1].op == BOX and c[1].a is c[0]:
        return c[0]
    return None


def match_diadot(f: Formula):
    d = match_disj(f)
    if d and match_dia(d[1]) is d[0]:
        return d[0]
    return None


def conjuncts(f: Formula) -> list[Formula]:
    out, stack = [], [f]
    while stack:
        g = stack.pop()
        c = match_conj(g)
        if c:
            stack.append(c[1])
            stack.append(c[0])
        elif g is not TRUE:
            out.append(g)
    return out


def disjuncts(f: Formula) -> list[Formula]:
    out, stack = [], [f]
    while stack:
        g = stack.pop()
        d = match_disj(g)
        if d:
            stack.append(d[1])
            stack.append(d[0])
        elif g is not FALSE:
            out.append(g)
    return out


# ---------------------------------------------------------------- printing

# precedence: iff 1, imp 2, or 3, and 4, unary 5
def _fmt(f: Formula, unicode: bool) -> tuple[str, int]:
    sym = _USYM if unicode else _ASYM
    if f.op == VAR:
        return f.name, 6
    if f.op == PAR:
        return "$" + f.name, 6
    if f is FALSE:
        return sym["false"], 6
    if f is TRUE:
        return sym["true"], 6
    for matcher, key in ((match_boxdot, "[.]"), (match_diadot, "<.>"), (match_dia, "<>")):
        x = matcher(f)
        if x is not None:
            return sym[key] + _wrap(x, 5, unicode), 5
    if f.op == BOX:
        return sym["[]"] + _wrap(f.a, 5, unicode), 5
    m = match_iff(f)
    if m:
        return f"{_wrap(m[0], 1, unicode)} {sym['<->']} {_wrap(m[1], 2, unicode)}", 1
    m = match_conj(f)
    if m:
        return f"{_wrap(m[0], 4, unicode)} {sym['&']} {_wrap(m[1], 5, unicode)}", 4
    x = match_neg(f)
    if x is not None:
        return sym["!"] + _wrap(x, 5, unicode), 5
    m = match_disj(f)
    if m and f.a is not TRUE and not (match_conj(f.a) or match_dia(f.a)):
        return f"{_wrap(m[0], 3, unicode)} {sym['|']} {_wrap(m[1], 4, unicode)}", 3
    return f"{_wrap(f.a, 3, unicode)} {sym['->']} {_wrap(f.b, 2, unicode)}", 2


def _wrap(f: Formula, need: int, unicode: bool) -> str:
    s, p = _fmt(f, unicode)
    return s if p >= need else f"({s})"


_ASYM = {"false": "false", "true": "true", "[.]": "[.]", "<.>": "<.>", "<>": "<>", "[]": "[]",
         "<->": "<->", "&": "&", "|": "|", "!": "!", "->": "->"}
_USYM = {"false": "⊥", "true": "⊤", "[.]": "⊡", "<.>": "⟐", "<>": "◇", "[]": "□",
         "<->": "↔", "&": "∧", "|": "∨", "!": "¬", "->": "→"}


def to_text(f: Formula, unicode: bool = False) -> str:
    return _fmt(f, unicode)[0]


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(<->|->|\[\.\]|<\.>|\[\]|<>|[!&|()/,$]|[A-Za-z_][A-Za-z0-9_']*)")


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks, i = [], 0
    while True:
        while i < len(text) and text[i].isspace():
            i += 1
        if i >= len(text):
            break
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", i, text)
        toks.append((m.group(1), m.start(1)))
        i = m.end()
    toks.append(("<eof>", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, params: frozenset[str]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.params = params

    def peek(self) -> str:
        return self.toks[self.i][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, tok: str) -> None:
        if self.peek() != tok:
            raise ParseError(f"expected {tok!r}, found {self.peek()!r}", self.pos(), self.text)
        self.i += 1

    def fla(self) -> Formula:
        f = self.imp()
        while self.peek() == "<->":
            self.i += 1
            f = iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.or_()
        if self.peek() == "->":
            self.i += 1
            return imp(f, self.imp())
        return f

    def or_(self) -> Formula:
        f = self.and_()
        while self.peek() == "|":
            self.i += 1
            f = disj(f, self.and_())
        return f

    def and_(self) -> Formula:
        f = self.un()
        while self.peek() == "&":
            self.i += 1
            f = conj(f, self.un())
        return f

    def un(self) -> Formula:
        t = self.peek()
        ops = {"!": neg, "[]": box, "<>": dia, "[.]": boxdot, "<.>": diadot}
        if t in ops:
            self.i += 1
            return ops[t](self.un())
        return self.atom()

    def atom(self) -> Formula:
        t, p = self.toks[self.i]
        if t == "true":
            self.i += 1
            return TRUE
        if t == "false":
            self.i += 1
            return FALSE
        if t == "(":
            self.i += 1
            f = self.fla()
            self.take(")")
            return f
        if t == "$":
            self.i += 1
            name = self.peek()
            if not _is_ident(name):
                raise ParseError("expected parameter name after '$'", self.pos(), self.text)
            self.i += 1
            return Par(name)
        if _is_ident(t):
            self.i += 1
            return Par(t) if t in self.params else Var(t)
        raise ParseError(f"unexpected token {t!r}", p, self.text)

    def flalist(self, stop: set[str]) -> list[Formula]:
        out: list[Formula] = []
        if self.peek() in stop:
            return out
        out.append(self.fla())
        while self.peek() == ",":
            self.i += 1
            out.append(self.fla())
        return out


def _is_ident(t: str) -> bool:
    return bool(t) and (t[0].isalpha() or t[0] == "_") and t not in ("true", "false")


def parse(text: str, declared_params: Iterable[str] = ()) -> Formula:
    """Parse one formula.  `$name` and declared names become parameters."""
    p = _Parser(text, frozenset(declared_params))
    f = p.fla()
    if p.peek() != "<eof>":
        raise ParseError(f"unexpected token {p.peek()!r}", p.pos(), text)
    return f


@dataclass(frozen=True)
class Rule:
    premises: tuple[Formula, ...]
    conclusions: tuple[Formula, ...]

    def __init__(self, premises: Iterable[Formula], conclusions: Iterable[Formula]):
        object.__setattr__(self, "premises", _dedup(premises))
        object.__setattr__(self, "conclusions", _dedup(conclusions))

    def __str__(self) -> str:
        return rule_text(self)

    def formulas(self) -> tuple[Formula, ...]:
        return self.premises + self.conclusions


def _dedup(fs: Iterable[Formula]) -> tuple[Formula, ...]:
    seen: dict[Formula, None] = {}
    for f in fs:
        seen.setdefault(f, None)
    return tuple(seen)


def parse_rule(text: str, declared_params: Iterable[str] = ()) -> Rule:
    """Parse `prem, ... / concl, ...`; either side may be empty."""
    p = _Parser(text, frozenset(declared_params))
    prem = p.flalist({"/"})
    p.take("/")
    concl = p.flalist({"<eof>"})
    if p.peek() == "/":
        raise ParseError("more than one top-level '/'", p.pos(), text)
    if p.peek() != "<eof>":
        raise ParseError(f"unexpected token {p.peek()!r}", p.pos(), text)
    return Rule(prem, concl)


def rule_text(r: Rule, unicode: bool = False) -> str:
    left = ", ".join(to_text(f, unicode) for f in r.premises)
    right = ", ".join(to_text(f, unicode) for f in r.conclusions)
    return f"{left} / {right}".strip()


# ---------------------------------------------------------------- substitutions

class Substitution:
    """A finite map from variable names to formulas, identity elsewhere."""

    __slots__ = ("map",)

    def __init__(self, mapping: Mapping[str, Formula] | None = None):
        m = {}
        for k, v in (mapping or {}).items():
            if isinstance(k, Formula):
                if k.op != VAR:
                    raise ClxError("substitutions act on variables only")
                k = k.name
            if v is not Var(k):
                m[k] = v
        self.map = m

    def __call__(self, f: Formula) -> Formula:
        return apply(self, f)

    def __getitem__(self, x: str) -> Formula:
        return self.map.get(x) or Var(x)

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self.map == other.map

    def __hash__(self) -> int:
        return hash(frozenset(self.map.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k} -> {to_text(v)}" for k, v in sorted(self.map.items()))
        return "{" + inner + "}"

    def to_json(self) -> dict[str, str]:
        return {k: to_text(v) for k, v in sorted(self.map.items())}


IDENTITY = Substitution()


def apply(sigma: Substitution, f: Formula, _memo: dict | None = None) -> Formula:
    if not sigma.map:
        return f
    memo = {} if _memo is None else _memo

    def go(g: Formula) -> Formula:
        r = memo.get(g)
        if r is not None:
            return r
        if g.op == VAR:
            r = sigma.map.get(g.name, g)
        elif g.op == IMP:
            r = imp(go(g.a), go(g.b))
        elif g.op == BOX:
            r = box(go(g.a))
        else:
            r = g
        memo[g] = r
        return r

    return go(f)


def compose(sigma: Substitution, tau: Substitution) -> Substitution:
    """The substitution x -> sigma(tau(x))."""
    out = {x: apply(sigma, t) for x, t in tau.map.items()}
    for x, t in sigma.map.items():
        out.setdefault(x, t)
    return Substitution(out)


# ---------------------------------------------------------------- statistics

def _walk(f: Formula, seen: set) -> None:
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        if g.a is not None:
            stack.append(g.a)
        if g.b is not None:
            stack.append(g.b)


def subformulas(gamma: Iterable[Formula]) -> list[Formula]:
    """Sub(gamma) in the primitive encoding, children before parents."""
    seen: set[Formula] = set()
    for f in gamma:
        _walk(f, seen)
    return sorted(seen, key=lambda g: (g.size, to_text(g)))


def atoms(gamma: Iterable[Formula] | Formula) -> list[Formula]:
    if isinstance(gamma, Formula):
        gamma = [gamma]
    return [g for g in subformulas(gamma) if g.is_atom]


def variables(gamma) -> list[str]:
    return sorted({a.name for a in atoms(gamma) if a.op == VAR})


def parameters(gamma) -> list[str]:
    return sorted({a.name for a in atoms(gamma) if a.op == PAR})


def boxed(gamma: Iterable[Formula]) -> list[Formula]:
    return [g for g in subformulas(gamma) if g.op == BOX]


@dataclass(frozen=True)
class ComplexityStats:
    b: int
    m: int
    n: int
    delta: int

    @property
    def bound(self) -> int:
        """Size bound 3*2^b*(2^m + |Delta|) for admissibility countermodels."""
        return 3 * 2 ** self.b * (2 ** self.m + self.delta)


def stats(gamma: Iterable[Formula], delta: Iterable[Formula] = ()) -> ComplexityStats:
    gamma, delta = list(gamma), list(delta)
    b = len(boxed(gamma + delta))
    sig = subformulas(gamma)
    mset = {g for g in sig if g.op == PAR}
    for g in sig:
        if g.op == BOX:
            mset.add(g)
            mset.add(g.a)
    n = sum(f.size for f in gamma + delta)
    return ComplexityStats(b=b, m=len(mset), n=n, delta=len(delta))


# ---------------------------------------------------------------- simplify

def classical_value(f: Formula, val: Mapping[Formula, bool]) -> bool:
    """Evaluate treating atoms and boxed formulas as propositional letters."""
    if f is FALSE:
        return False
    if f.op == IMP:
        return (not classical_value(f.a, val)) or classical_value(f.b, val)
    return val[f]


def _letters(f: Formula, out: dict) -> None:
    if f.op in (VAR, PAR, BOX):
        out.setdefault(f, None)
    elif f.op == IMP:
        _letters(f.a, out)
        _letters(f.b, out)


def simplify(f: Formula) -> Formula:
    """Equivalence-preserving cleanup: constants, duplicates, absorption.

    Works bottom-up; boxed subformulas are simplified inside.  Small Boolean
    combinations that are classically constant collapse to true/false.
    """
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        r = memo.get(g)
        if r is not None:
            return r
        if g.op == BOX:
            a = go(g.a)
            r = TRUE if a is TRUE else box(a)
        elif g.op == IMP and match_neg(g) is not None and match_neg(g.a) is not None:
            r = go(g.a.a)
        elif g.op == IMP:
            c = match_conj(g)
            d = match_disj(g) if c is None else None
            if c is not None:
                parts = _dedup(go(x) for x in conjuncts(g))
                if FALSE in parts:
                    r = FALSE
                else:
                    parts = tuple(x for x in parts if x is not TRUE)
                    parts = _absorb(parts, conjunctive=True)
                    r = FALSE if any(neg(x) in parts for x in parts) else conj_all(parts)
            elif d is not None:
                parts = _dedup(go(x) for x in disjuncts(g))
                if TRUE in parts:
                    r = TRUE
                else:
                    parts = tuple(x for x in parts if x is not FALSE)
                    parts = _absorb(parts, conjunctive=False)
                    r = TRUE if any(neg(x) in parts for x in parts) else disj_all(parts)
            else:
                a, b = go(g.a), go(g.b)
                if a is FALSE or b is TRUE or a is b:
                    r = TRUE
                elif a is TRUE:
                    r = b
                elif b is FALSE and match_neg(a) is not None:
                    r = match_neg(a)
                else:
                    r = imp(a, b)
            r = _fold_constant(r)
        else:
            r = g
        memo[g] = r
        return r

    return go(f)


def _absorb(parts: tuple[Formula, ...], conjunctive: bool) -> tuple[Formula, ...]:
    # a & (a | b) = a ; a | (a & b) = a
    inner = disjuncts if conjunctive else conjuncts
    keep = []
    pset = set(parts)
    for x in parts:
        sub = inner(x)
        if len(sub) > 1 and any(s in pset and s is not x for s in sub):
            continue
        keep.append(x)
    return tuple(keep)


def _fold_constant(f: Formula) -> Formula:
    letters: dict = {}
    _letters(f, letters)
    if len(letters) > 6 or f.op != IMP:
        return f
    ls = list(letters)
    vals = {classical_value(f, dict(zip(ls, bits))) for bits in product((False, True), repeat=len(ls))}
    if vals == {True}:
        return TRUE
    if vals == {False}:
        return FALSE
    return f
