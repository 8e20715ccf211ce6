"""Extension rules, their variants, bases of admissible rules and PExt instances."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

from .formula import (FALSE, TRUE, ClxError, Formula, Rule, Var, box, boxdot, conj, conj_all, dia, disj, disj_all, imp,
                      literal, parameters, subformulas)
from .kripke import INF, IRR, param_sets
from .logic import EC, LogicSpec, base, bounded_branching, has_type_frame, is_linear, tp_member
from .typecore import tautology

FAMILIES = ("Ext", "ExtEq", "ExtVee", "ExtBot", "PExt")


@dataclass(frozen=True)
class RuleSchemaId:
    """Identifies one rule of a family.

    `inner` names the wrapped family for ExtVee/ExtBot ("Ext" or "ExtEq").
    """

    family: str
    polarity: str                    # "irr" or "refl"
    n: int
    E: tuple[frozenset, ...]
    P: tuple[str, ...] = ()
    e0: frozenset | None = None
    inner: str = "Ext"

    def __str__(self) -> str:
        es = ",".join(_e_text(self.P, e) for e in self.E)
        pol = "•" if self.polarity == "irr" else "◦"
        s = f"{self.family}[{pol},{self.n},{{{es}}}"
        if self.e0 is not None:
            s += f",{_e_text(self.P, self.e0)}"
        if self.family in ("ExtVee", "ExtBot"):
            s += f",{self.inner}"
        return s + "]"

    def to_json(self) -> dict:
        return {"family": self.family, "polarity": self.polarity, "n": self.n,
                "E": [sorted(e) for e in self.E], "params": list(self.P),
                "e0": None if self.e0 is None else sorted(self.e0), "inner": self.inner}

    def validate(self) -> None:
        if self.family not in FAMILIES[:4]:
            raise ClxError(f"unknown rule family {self.family!r}")
        if self.polarity not in ("irr", "refl"):
            raise ClxError(f"unknown polarity {self.polarity!r}")
        if self.n < 0:
            raise ClxError("n must be nonnegative")
        if not self.E:
            raise ClxError("E must be nonempty")
        allowed = set(param_sets(self.P))
        if any(e not in allowed for e in self.E) or len(set(self.E)) != len(self.E):
            raise ClxError("E must be a set of parameter assignments over P")
        inner = self.inner if self.family in ("ExtVee", "ExtBot") else self.family
        if inner not in ("Ext", "ExtEq"):
            raise ClxError(f"unknown inner family {self.inner!r}")
        if self.polarity == "irr" and len(self.E) != 1:
            raise ClxError("irreflexive rules take exactly one parameter assignment")
        if self.polarity == "refl" and inner == "Ext" and self.e0 not in self.E:
            raise ClxError("reflexive extension rules need e0 in E")
        if self.polarity == "refl" and inner == "ExtEq" and self.n == 1:
            raise ClxError("reflexive ExtEq rules are defined for n != 1 only")


def _e_text(P, e) -> str:
    if not P:
        return "⊤"
    return "".join(("" if p in e else "¬") + p for p in P)


def _pimp(P, e, f: Formula) -> Formula:
    return f if not P else imp(literal(P, e), f)


def _pconj(P, e, fs: Sequence[Formula]) -> list[Formula]:
    return ([literal(P, e)] if P else []) + list(fs)


def _xs(n: int) -> list[Formula]:
    return [Var(f"x{i}") for i in range(n)]


Y, Z = Var("y"), Var("z")


def _refl_core(P, E) -> list[Formula]:
    a = boxdot(imp(Y, disj_all(box(_pimp(P, e, Y)) for e in E)))
    bs = [boxdot(imp(box(_pimp(P, e, box(Y))), Y)) for e in E]
    return [a] + bs


def _base_rule(rid: RuleSchemaId, family: str) -> Rule:
    P, n, xs = rid.P, rid.n, _xs(rid.n)
    if rid.polarity == "irr":
        ante = conj_all(_pconj(P, rid.E[0], [box(Y)]))
    elif family == "Ext":
        ante = conj_all(_pconj(P, rid.e0, _refl_core(P, rid.E)))
    else:
        ante = conj_all(_refl_core(P, rid.E))
    prem = imp(ante, disj_all(box(x) for x in xs))
    if family == "Ext":
        concl = [imp(boxdot(Y), x) for x in xs]
    else:
        concl = [imp(boxdot(conj_all([Y] + [xs[j] for j in range(n) if j != i])), xs[i]) for i in range(n)]
    return Rule([prem], concl)


def vee(rule: Rule, side: Formula = Z) -> Rule:
    """Box side | [](premises) / side | []conclusions, for a fresh side variable."""
    prem = disj(box(side), conj_all(box(g) for g in rule.premises))
    return Rule([prem], [disj(side, disj_all(box(d) for d in rule.conclusions))])


def bot(rule: Rule) -> Rule:
    return Rule(rule.premises, list(rule.conclusions) + [FALSE])


def ext_rule(rid: RuleSchemaId) -> Rule:
    rid.validate()
    if rid.family in ("Ext", "ExtEq"):
        return _base_rule(rid, rid.family)
    inner = _base_rule(rid, rid.inner)
    return vee(inner) if rid.family == "ExtVee" else bot(inner)


# ---------------------------------------------------------------- bases

def _e_key(P, e) -> tuple:
    return tuple(p in e for p in P)


def _E_sets(P, sizes: Iterable[int]) -> list[tuple[frozenset, ...]]:
    es = sorted(param_sets(P), key=lambda e: _e_key(P, e))
    out = []
    for k in sizes:
        out += list(combinations(es, k))
    return out


def _T(L: LogicSpec, P, n_max: int) -> list[tuple[object, int]]:
    """Conditions <C,n> with a type-<C,n> frame and |C| <= 2^|P|, n <= n_max."""
    out = []
    kmax = 1 << len(P)
    for n in range(n_max + 1):
        if has_type_frame(L, EC(IRR, n)):
            out.append((IRR, n))
        for k in range(1, kmax + 1):
            if has_type_frame(L, EC(k, n)):
                out.append((k, n))
    return out


def _n_max(L: LogicSpec, n_cap: int | None) -> int:
    b = bounded_branching(L) if L.finite_params else None
    if b is not None:
        return b if n_cap is None else min(b, n_cap)
    if n_cap is None:
        raise ClxError("this logic has unbounded branching or infinite parameters: give an n cap")
    return n_cap


def _params(L: LogicSpec, params: Sequence[str] | None) -> tuple[str, ...]:
    if params is not None:
        return tuple(sorted(params))
    if L.params is None:
        return ()
    return tuple(sorted(L.params))


def _contains(L: LogicSpec, f: Formula) -> bool:
    return tautology(L, f)


S4_AXIOM = imp(box(Var("x")), Var("x"))
D41_AXIOM = conj(dia(TRUE), imp(box(dia(Var("x"))), dia(box(Var("x")))))


def _sorted_ids(ids: Iterable[RuleSchemaId]) -> list[RuleSchemaId]:
    def key(r: RuleSchemaId):
        return (r.n, len(r.E), [_e_key(r.P, e) for e in r.E], r.polarity != "irr",
                () if r.e0 is None else _e_key(r.P, r.e0))
    return sorted(set(ids), key=key)


def _mc_ids(T, P) -> list[RuleSchemaId]:
    ids = []
    for c, n in T:
        if c == IRR:
            ids += [RuleSchemaId("Ext", "irr", n, (e,), P) for e in param_sets(P)]
        else:
            for E in _E_sets(P, range(1, c + 1)):
                ids += [RuleSchemaId("Ext", "refl", n, E, P, e0) for e0 in E]
    return _sorted_ids(ids)


def _indep_ids(L: LogicSpec, T, P) -> list[RuleSchemaId]:
    ids = []
    s4 = None
    for c, n in T:
        if c == IRR:
            ids += [RuleSchemaId("ExtEq", "irr", n, (e,), P) for e in param_sets(P)]
        elif n != 1:
            ids += [RuleSchemaId("ExtEq", "refl", n, E, P) for E in _E_sets(P, [c])]
        else:
            if not P:
                s4 = _contains(L, S4_AXIOM) if s4 is None else s4
                if s4:
                    continue
            for E in _E_sets(P, [c]):
                ids += [RuleSchemaId("Ext", "refl", 1, E, P, e0) for e0 in E]
    return _sorted_ids(ids)


def _wrap(rid: RuleSchemaId, family: str) -> RuleSchemaId:
    return RuleSchemaId(family, rid.polarity, rid.n, rid.E, rid.P, rid.e0, rid.family)


def basis(L: LogicSpec, kind: str = "mc", n_cap: int | None = None,
          params: Sequence[str] | None = None) -> Iterator[tuple[RuleSchemaId, Rule]]:
    """Rules of a basis of L-admissible rules, in a deterministic order.

    kind is "mc" (multiple conclusion), "sc" (single conclusion), "indep"
    (independent, multiple conclusion) or "indep-sc".
    """
    P = _params(L, params)
    T = _T(L, P, _n_max(L, n_cap))
    if kind == "mc":
        ids = _mc_ids(T, P)
    elif kind == "sc":
        if is_linear(L):
            ids = [_wrap(r, "ExtBot") if r.n == 0 else r for r in _mc_ids(T, P) if r.n <= 1]
        else:
            ids = [_wrap(r, "ExtVee") for r in _mc_ids(T, P)]
    elif kind == "indep":
        ids = _indep_ids(L, T, P)
    elif kind == "indep-sc":
        if is_linear(L):
            raise ClxError("independent single-conclusion bases are built for non-linear logics")
        skip = not P and _contains(L, D41_AXIOM)
        ids = [_wrap(r, "ExtVee") for r in _indep_ids(L, T, P)
               if not (skip and r.polarity == "refl" and r.n == 0 and r.family == "ExtEq")]
    else:
        raise ClxError(f"unknown basis kind {kind!r}")
    for rid in ids:
        yield rid, ext_rule(rid)


def has_finite_basis(L: LogicSpec) -> bool:
    consistent = any(has_type_frame(L, EC(c, 0)) for c in (IRR, 1))
    if not consistent:
        return True
    if not L.finite_params:
        return False
    return bounded_branching(L) is not None


# ---------------------------------------------------------------- PExt

def _splits(B: Sequence[Formula]):
    for bits in product((True, False), repeat=len(B)):
        yield [f for f, b in zip(B, bits) if b], [f for f, b in zip(B, bits) if not b]


def _covers(Bm: Sequence[Formula], n: int):
    """n-tuples of subsets of Bm whose union is Bm, as sets of frozensets."""
    seen = set()
    for assign in product(range(1, 1 << n), repeat=len(Bm)):
        parts = tuple(frozenset(f for f, a in zip(Bm, assign) if a >> i & 1) for i in range(n))
        key = frozenset(parts)
        if key not in seen:
            seen.add(key)
            yield sorted(key, key=lambda s: sorted(map(str, s)))


def _dot_conj(Bp) -> Formula:
    return conj_all(boxdot(f) for f in Bp)


def _irr_premise(P, e, Bp, Bm) -> Formula:
    return imp(conj_all(_pconj(P, e, [box(f) for f in Bp])), disj_all(box(f) for f in Bm))


def _refl_premises(P, E, Bp, Bm, S) -> list[Formula]:
    prem = []
    for D, fs in _domain(Bp, E):
        for f in fs:
            e = S[(D, f)]
            rest = [g for g in Bp if g not in D]
            hit = [g for g, v in zip(D, f) if v == e]
            prem.append(imp(conj_all(_pconj(P, e, [boxdot(g) for g in rest])),
                            disj_all(hit + [box(g) for g in list(Bm) + list(D)])))
    return prem


def _domain(Bp, E):
    out = []
    for r in range(len(Bp) + 1):
        for D in combinations(Bp, r):
            out.append((D, list(product(E, repeat=len(D)))))
    return out


def _sigma_data(sigma: Iterable[Formula]):
    sub = subformulas(list(sigma))
    B = sorted({f.a for f in sub if f.op == "box"}, key=str)
    P = tuple(sorted(parameters(list(sigma))))
    return B, P


def pext_rules(L: LogicSpec, sigma: Iterable[Formula], max_b: int = 3) -> list[Rule]:
    """The rule instances PExt for T = base(L) over Sub(sigma)."""
    B, P = _sigma_data(sigma)
    if len(B) > max_b:
        raise ClxError(f"|B| = {len(B)} exceeds the PExt cap {max_b}")
    es = sorted(param_sets(P), key=lambda e: _e_key(P, e))
    out: dict[Rule, None] = {}
    for t in sorted(base(L), key=lambda t: (t.cluster != IRR, str(t))):
        if t.cluster == IRR:
            for e in es:
                for Bp, Bm in _splits(B):
                    if t.n == INF:
                        if Bm or not tp_member(L, EC(IRR, 0)):
                            out.setdefault(Rule([_irr_premise(P, e, Bp, Bm)], _inf_concl(Bp, Bm)), None)
                    else:
                        for parts in _part_lists(Bm, t.n):
                            concl = [imp(_dot_conj(Bp), disj_all(boxdot(g) for g in sorted(s, key=str)))
                                     for s in parts]
                            out.setdefault(Rule([_irr_premise(P, e, Bp, Bm)], concl), None)
            continue
        kmax = len(es) if t.cluster == INF else min(int(t.cluster), len(es))
        for k in range(1, kmax + 1):
            for E in combinations(es, k):
                for Bp, Bm in _splits(B):
                    if t.n == INF:
                        if not Bm and tp_member(L, EC(k, 0)):
                            continue
                        concls = [_inf_concl(Bp, Bm)]
                    else:
                        concls = [[imp(_dot_conj(Bp), disj_all(boxdot(g) for g in sorted(s, key=str)))
                                   for s in parts] for parts in _part_lists(Bm, t.n)]
                    dom = [(D, f) for D, fs in _domain(Bp, E) for f in fs]
                    for choice in product(E, repeat=len(dom)):
                        S = dict(zip(dom, choice))
                        prem = _refl_premises(P, E, Bp, Bm, S)
                        for c in concls:
                            out.setdefault(Rule(prem, c), None)
    return list(out)


def _inf_concl(Bp, Bm) -> list[Formula]:
    # Bm empty: the generators still form a nonempty set, so this is the n = 1 instance.
    # Only needed when <C,0> is not itself in tp(L).
    if not Bm:
        return [imp(_dot_conj(Bp), FALSE)]
    return [imp(_dot_conj(Bp), g) for g in Bm]


def _part_lists(Bm, n):
    if n == 0:
        if not Bm:
            yield []
        return
    yield from _covers(Bm, n)
