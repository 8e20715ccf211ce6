"""Projective formulas, Loewenheim substitutions and projective approximations.

A formula is projective iff it has the model extension property: every
configuration "new root cluster over models of phi" can be revalued on the
root cluster to satisfy phi.  At the type level a configuration is a root
specification (irreflexive with parameters e, or reflexive with parameter
sets E) over an achievable generator mask, and a revaluation is a choice of
variables for each root point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Sequence

from .formula import (FALSE, ClxError, Formula, Par, ResourceCap, Substitution, Var, apply, box, boxdot,
                      compose, conj, conj_all, disj, disj_all, literal, neg, parameters, simplify,
                      subformulas, variables)
from .kripke import IRR, Model, param_sets
from .logic import EC, LogicSpec, tp_member
from .typecore import DEFAULT_CAP, SigmaContext, Saturation, saturate

THETA_CAP = 8


# ---------------------------------------------------------------- Loewenheim substitutions

@dataclass(frozen=True)
class BooleanTable:
    """For every variable, the set of parameter assignments where d_x is true."""

    P: tuple[str, ...]
    table: tuple[tuple[str, frozenset], ...]

    def d(self, x: str) -> frozenset:
        return dict(self.table).get(x, frozenset())

    def value(self, x: str, e: frozenset) -> bool:
        return e in self.d(x)


def d_formula(P: Sequence[str], sets: Iterable[frozenset]) -> Formula:
    """Full disjunctive normal form over P of a Boolean function of the parameters."""
    sets = sorted(sets, key=lambda e: [p in e for p in P])
    return disj_all(literal(P, e) for e in sets)


def loewenheim(phi: Formula, D: BooleanTable) -> Substitution:
    """x -> ([.]phi & x) | (![.]phi & d_x) for every variable of phi."""
    bd = boxdot(phi)
    mp = {}
    for x in variables(phi):
        mp[x] = disj(conj(bd, Var(x)), conj(neg(bd), d_formula(D.P, D.d(x))))
    return Substitution(mp)


def tables(P: Sequence[str], V: Sequence[str]) -> list[BooleanTable]:
    """All Boolean tables in a fixed lexicographic order."""
    P, V = tuple(sorted(P)), tuple(sorted(V))
    es = param_sets(P)
    out = []
    for choice in product(range(1 << len(es)), repeat=len(V)):
        out.append(BooleanTable(P, tuple((x, frozenset(e for i, e in enumerate(es) if c >> i & 1))
                                         for x, c in zip(V, choice))))
    return out


def _check_theta_cap(P, V, cap: int) -> None:
    if len(V) * (1 << len(P)) > cap:
        raise ResourceCap(f"|V|*2^|P| = {len(V) * (1 << len(P))} exceeds the cap {cap}")


def theta(phi: Formula, cap: int = THETA_CAP) -> Substitution:
    P, V = parameters(phi), variables(phi)
    _check_theta_cap(P, V, cap)
    sigma = Substitution()
    for D in tables(P, V):
        sigma = compose(sigma, loewenheim(phi, D))
    return sigma


def N_bound(phi: Formula) -> int:
    B = {g.a for g in subformulas([phi]) if g.op == "box"}
    return (len(B) + 1) * (2 ** len(parameters(phi)) + 1)


def theta_chain(phi: Formula, N: int | None = None, cap: int = THETA_CAP) -> list[BooleanTable]:
    """The Loewenheim factors of theta(phi)^N, outermost first."""
    P, V = parameters(phi), variables(phi)
    _check_theta_cap(P, V, cap)
    N = N_bound(phi) if N is None else N
    return tables(P, V) * N


def chain_substitution(phi: Formula, chain: Sequence[BooleanTable]) -> Substitution:
    sigma = Substitution()
    for D in chain:
        sigma = compose(sigma, loewenheim(phi, D))
    return sigma


def chain_transform(M: Model, phi: Formula, chain: Sequence[BooleanTable]) -> Model:
    """The model sigma(M) for sigma the composed chain, by direct valuation rewriting."""
    P = chain[0].P if chain else ()
    for D in chain:
        ok = M.ext(boxdot(phi))
        atoms = dict(M.atoms)
        for x in variables(phi):
            m = M.atoms.get(Var(x), 0) & ok
            for u in range(M.n):
                if not ok >> u & 1 and M.params_at(u, P) in D.d(x):
                    m |= 1 << u
            atoms[Var(x)] = m
        M = M.with_atoms(atoms)
    return M


# ---------------------------------------------------------------- exact verification of chains

class ChainCheck:
    """Level saturation for sigma = chain: level j is the model after j rewrites.

    `extra` formulas are evaluated at every level; the checks below look at
    level 0 (the original model) and the last level (sigma applied).
    """

    def __init__(self, L: LogicSpec, phi: Formula, chain: Sequence[BooleanTable],
                 extra: Iterable[Formula] = (), premise: Formula | None = None, cap: int = DEFAULT_CAP):
        extra = list(extra)
        fs = [phi, box(phi)] + extra + ([premise] if premise is not None else [])
        self.ctx = ctx = SigmaContext(fs, cap=10 ** 6)
        self.phi = phi
        ip, ib = ctx.index[phi], ctx.index[box(phi)]
        xs = [i for i, f in enumerate(ctx.atoms) if f.op == "var" and f.name in set(variables(phi))]

        def make(D: BooleanTable):
            def step(c: SigmaContext, a: int, b: int) -> int:
                ev = c.evaluate(a, b)
                if ev >> ip & 1 and ev >> ib & 1:
                    return a
                e = c.params_of(a) & frozenset(D.P)
                out = a
                for i in xs:
                    if D.value(c.atoms[i].name, e):
                        out |= 1 << i
                    else:
                        out &= ~(1 << i)
                return out
            return step

        allowed = None
        if premise is not None:
            k = ctx.index[premise]
            allowed = lambda t: bool(ctx.evaluate(*t[0]) >> k & 1)
        self.sat = Saturation(L, ctx, allowed, [make(D) for D in chain], cap)

    def _last(self, f: Formula):
        i = self.ctx.index[f]
        return [bool(self.ctx.evaluate(*t[-1]) >> i & 1) for t in self.sat.types]

    def valid_after(self, f: Formula) -> bool:
        """|-_L sigma(f)."""
        return all(self._last(f))

    def refuted_after(self, f: Formula) -> bool:
        return not all(self._last(f))

    def fixes_variables(self) -> bool:
        """sigma(x) <-> x holds for every variable x at every realized point."""
        ctx = self.ctx
        xs = [i for i, f in enumerate(ctx.atoms) if f.op == "var"]
        return all((t[0][0] >> i & 1) == (t[-1][0] >> i & 1) for t in self.sat.types for i in xs)


def verify_unifier_chain(L: LogicSpec, phi: Formula, chain: Sequence[BooleanTable], cap: int = DEFAULT_CAP) -> bool:
    """Both clauses of the projectivity equation for the composed chain."""
    if not ChainCheck(L, phi, chain, cap=cap).valid_after(phi):
        return False
    return ChainCheck(L, phi, chain, premise=phi, cap=cap).fixes_variables()


# ---------------------------------------------------------------- the model extension property

@dataclass(frozen=True)
class ExtConfig:
    """A root specification over a set of generators that cannot be revalued."""

    kind: str                      # "irr" or "refl"
    E: tuple[frozenset, ...]
    n: int
    mask: int
    generators: tuple = ()

    def describe(self, ctx: SigmaContext | None = None) -> str:
        es = ", ".join("{" + ",".join("$" + p for p in sorted(e)) + "}" for e in self.E)
        root = "irreflexive root" if self.kind == "irr" else f"reflexive root cluster of size {len(self.E)}"
        s = f"{root} with parameter sets [{es}] over {self.n} generator(s)"
        if ctx is not None and self.generators:
            s += ": " + "; ".join(ctx.describe(*t[0]) for t in self.generators)
        return s


def root_specs(L: LogicSpec, P: Sequence[str], n: int):
    es = param_sets(P)
    if tp_member(L, EC(IRR, n)):
        for e in es:
            yield "irr", (e,)
    for k in range(1, len(es) + 1):
        if not tp_member(L, EC(k, n)):
            break
        for E in combinations(es, k):
            yield "refl", E


def solve_config(ctx: SigmaContext, U, gm: int, kind: str, E: Sequence[frozenset]) -> list[int] | None:
    """Variable choices for the root points making every root type a member of U."""
    vs = [ctx.atoms_from(e, ()) for e in E]
    vchoices = [ctx.atoms_from((), xs) for xs in _var_sets(ctx.V)]
    if kind == "irr":
        for v in vchoices:
            a = vs[0] | v
            if (a, gm) in U:
                return [a]
        return None
    per = []
    for base in vs:
        per.append([base | v for v in vchoices])
    for atoms in product(*per):
        b = ctx.cluster(gm, atoms, True)
        if all((a, b) in U for a in atoms):
            return list(atoms)
    return None


def _var_sets(V: Sequence[str]) -> list[frozenset]:
    return [frozenset(x for x, bit in zip(V, bs) if bit) for bs in product((False, True), repeat=len(V))]


def mep_failure(L: LogicSpec, ctx: SigmaContext, U: set, sat: Saturation | None = None) -> ExtConfig | None:
    """First configuration over models of U that no root revaluation fixes, if any."""
    if sat is None:
        sat = saturate(L, ctx, lambda a, b: (a, b) in U)
    for gm, n, gens in sat.configs():
        for kind, E in root_specs(L, ctx.P, n):
            if solve_config(ctx, U, gm, kind, E) is None:
                return ExtConfig(kind, tuple(E), n, gm, tuple(gens))
    return None


@dataclass
class Projectivity:
    projective: bool
    unifier: Substitution | None = None
    chain: list = field(default_factory=list)
    config: ExtConfig | None = None
    ctx: SigmaContext | None = None

    def __bool__(self) -> bool:
        return self.projective


def _type_set(ctx: SigmaContext, phi: Formula) -> set:
    i = ctx.index[phi]
    return {(a, b) for a in range(1 << ctx.na) for b in range(1 << ctx.nb) if ctx.evaluate(a, b) >> i & 1}


def find_unifier_chain(L: LogicSpec, phi: Formula, extra_valid: Sequence[Formula] = (),
                       cap: int = DEFAULT_CAP, theta_cap: int = THETA_CAP) -> list[BooleanTable]:
    """A sub-chain of theta^N that is verified to be a projective unifier of phi.

    Short chains are tried first (single factors, then one full pass, then
    more passes up to N); a chain is accepted only after exact verification.
    """
    P, V = parameters(phi), variables(phi)
    _check_theta_cap(P, V, theta_cap)
    if not V:
        return []
    ts = tables(P, V)
    cands: list[list[BooleanTable]] = [[D] for D in ts]
    cands += [[D1, D2] for D1 in ts for D2 in ts if D1 != D2] if len(ts) <= 4 else []
    cands += [ts * k for k in range(1, N_bound(phi) + 1)]
    for ch in cands:
        if verify_unifier_chain(L, phi, ch, cap) and \
                all(ChainCheck(L, phi, ch, extra=[g], cap=cap).valid_after(g) for g in extra_valid):
            return ch
    raise ClxError("no verified Loewenheim chain up to theta^N; the formula is not projective")


def projective(L: LogicSpec, phi: Formula, cap: int = DEFAULT_CAP, unifier: bool = True) -> Projectivity:
    L.check_params([phi])
    ctx = SigmaContext([phi])
    U = _type_set(ctx, phi)
    bad = mep_failure(L, ctx, U)
    if bad is not None:
        return Projectivity(False, config=bad, ctx=ctx)
    if not unifier:
        return Projectivity(True, ctx=ctx)
    ch = find_unifier_chain(L, phi, cap=cap)
    return Projectivity(True, simplify_substitution(chain_substitution(phi, ch)), ch, ctx=ctx)


def simplify_substitution(s: Substitution) -> Substitution:
    return Substitution({x: simplify(f) for x, f in s.map.items()})


# ---------------------------------------------------------------- projective approximations

def realized(L: LogicSpec, ctx: SigmaContext, U: set, cap: int = DEFAULT_CAP) -> tuple[frozenset, Saturation]:
    sat = saturate(L, ctx, lambda a, b: (a, b) in U, cap)
    return frozenset(t[0] for t in sat.types), sat


def maximal_projective_sets(L: LogicSpec, ctx: SigmaContext, U0: set, cap: int = DEFAULT_CAP,
                            limit: int = 5000) -> list[frozenset]:
    """All maximal U within U0 whose models have the model extension property.

    A failing configuration can only disappear if every realized type with
    the boxdot-profile of one of its generators is dropped, so the search
    branches over those profile classes.
    """
    seen: dict[frozenset, None] = {}
    found: list[frozenset] = []
    stack = [frozenset(U0)]
    while stack:
        U = stack.pop()
        R, sat = realized(L, ctx, set(U), cap)
        if R in seen:
            continue
        seen[R] = None
        if len(seen) > limit:
            raise ResourceCap("projective approximation search exceeded its limit")
        if not R:
            continue
        if any(R <= F for F in found):
            continue
        bad = mep_failure(L, ctx, set(R), sat)
        if bad is None:
            found.append(R)
            continue
        if bad.n == 0:
            continue
        for g in bad.generators:
            prof = ctx.boxdot(*g[0])
            stack.append(frozenset(t for t in R if ctx.boxdot(*t) != prof))
    found = [F for F in found if not any(F < G for G in found)]
    found.sort(key=lambda F: (-len(F), sorted(F)))
    return found


def type_set_formula(L: LogicSpec, ctx: SigmaContext, U: Iterable, minimize: bool = True) -> Formula:
    """A Boolean combination of atoms and boxes of Sigma true exactly on the types in U.

    Types that no L-model realizes are used as don't-cares when minimizing.
    """
    U = sorted(set(U))
    if not U:
        return FALSE
    letters = list(ctx.atoms) + list(ctx.boxes)
    nv = len(letters)
    if not minimize or nv > 8:
        return disj_all(ctx.formula(a, b) for a, b in U)
    from sympy import symbols
    from sympy.logic import SOPform

    every, _ = realized(L, ctx, {(a, b) for a in range(1 << ctx.na) for b in range(1 << ctx.nb)})
    syms = symbols(f"v0:{nv}")

    def row(a, b):
        return [a >> i & 1 for i in range(ctx.na)] + [b >> i & 1 for i in range(ctx.nb)]

    Us = set(U)
    dont = [row(a, b) for a in range(1 << ctx.na) for b in range(1 << ctx.nb)
            if (a, b) not in every and (a, b) not in Us]
    expr = SOPform(syms, [row(a, b) for a, b in U], dont)
    return _from_sympy(expr, dict(zip(syms, letters)))


def _from_sympy(expr, table) -> Formula:
    from sympy.logic.boolalg import And, BooleanFalse, BooleanTrue, Not, Or
    if isinstance(expr, BooleanTrue):
        return neg(FALSE)
    if isinstance(expr, BooleanFalse):
        return FALSE
    if isinstance(expr, Not):
        return neg(_from_sympy(expr.args[0], table))
    if isinstance(expr, And):
        return conj_all(_from_sympy(a, table) for a in sorted(expr.args, key=str))
    if isinstance(expr, Or):
        return disj_all(_from_sympy(a, table) for a in sorted(expr.args, key=str))
    return table[expr]


@dataclass(frozen=True)
class ApproxMember:
    types: frozenset
    formula: Formula


def projective_approximation(L: LogicSpec, phi: Formula, cap: int = DEFAULT_CAP) -> list[ApproxMember]:
    L.check_params([phi])
    ctx = SigmaContext([phi])
    U0 = _type_set(ctx, phi)
    return [ApproxMember(U, type_set_formula(L, ctx, U)) for U in maximal_projective_sets(L, ctx, U0, cap)]
