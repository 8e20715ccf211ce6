"""Admissibility of rules, unification and certificates.

Two independent decision routes are provided.  Engine A looks for a
projective type set of the premises that implies no conclusion; its mgu then
unifies the premises and no conclusion.  Engine B looks for a finite model
that is pseudoextensible for the premises' subformulas and refutes the rule.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Sequence

from .formula import (ClxError, Formula, ResourceCap, Rule, Substitution, Var, box, boxdot, conj_all, dia,
                      diadot, imp, parameters, subformulas)
from .kripke import IRR, Model, param_sets
from .logic import EC, LogicSpec, is_l_frame, is_linear, tp_member
from .projective import (ChainCheck, chain_substitution, find_unifier_chain, maximal_projective_sets, realized,
                         simplify_substitution, type_set_formula)
from .typecore import DEFAULT_CAP, SigmaContext, consequence, saturate, tautology


class Verdict(enum.Enum):
    ADMISSIBLE = "Admissible"
    NOT_ADMISSIBLE = "NotAdmissible"
    UNDECIDED = "Undecided"

    def __str__(self) -> str:
        return self.value


@dataclass
class Decision:
    verdict: Verdict
    unifier: Substitution | None = None
    model: Model | None = None
    engine: str = ""
    note: str = ""

    @property
    def admissible(self) -> bool:
        return self.verdict is Verdict.ADMISSIBLE


# ---------------------------------------------------------------- pseudoextensibility core

@dataclass(frozen=True)
class _Pt:
    """What the tpp conditions see of a point: parameters and box/dot/body bits over B."""
    e: frozenset
    box: int
    dot: int
    body: int


@dataclass(frozen=True)
class PseudoFailure:
    kind: str
    E: tuple
    mask: int
    n: int
    generators: tuple


def _and_masks(profiles: Iterable[int], full: int) -> dict[int, tuple[int, tuple]]:
    """Every AND of a nonempty set of profiles, with a least such set."""
    best: dict[int, tuple[int, tuple]] = {}
    profs = sorted(set(profiles))
    frontier = []
    for p in profs:
        best[p] = (1, (p,))
        frontier.append(p)
    while frontier:
        nxt = []
        for m in frontier:
            c, g = best[m]
            for p in profs:
                k = m & p
                if k not in best or best[k][0] > c + 1:
                    best[k] = (c + 1, g + (p,))
                    nxt.append(k)
        frontier = nxt
    return best


def pseudo_failure(L: LogicSpec, P: Sequence[str], nb: int, pts: Iterable[_Pt]) -> PseudoFailure | None:
    """First generator set and root specification without a tpp among pts."""
    pts = sorted(set(pts), key=lambda p: (sorted(p.e), p.box, p.body))
    full = (1 << nb) - 1
    configs = [(full, 0, ())]
    configs += sorted(((m, c, g) for m, (c, g) in _and_masks((p.dot for p in pts), full).items()),
                      key=lambda x: (x[1], -x[0]))
    by_e: dict[frozenset, list[_Pt]] = {}
    for p in pts:
        by_e.setdefault(p.e, []).append(p)
    es = param_sets(P)
    for g, n, gens in configs:
        if tp_member(L, EC(IRR, n)):
            for e in es:
                if not any(p.box == g for p in by_e.get(e, ())):
                    return PseudoFailure("irr", (e,), g, n, gens)
        for k in range(1, len(es) + 1):
            if not tp_member(L, EC(k, n)):
                break
            for E in combinations(es, k):
                if not _refl_tpp(g, [by_e.get(e, []) for e in E]):
                    return PseudoFailure("refl", E, g, n, gens)
    return None


def _refl_tpp(g: int, cands: list[list[_Pt]]) -> bool:
    if any(not c for c in cands):
        return False
    for choice in product(*cands):
        b = g
        for p in choice:
            b &= p.body
        if all(p.box == b for p in choice):
            return True
    return False


def _box_data(sigma: Sequence[Formula]):
    boxes = sorted({f for f in subformulas(list(sigma)) if f.op == "box"}, key=str)
    P = tuple(sorted(parameters(list(sigma))))
    return boxes, P


def model_points(M: Model, sigma: Sequence[Formula]) -> tuple[tuple, int, list[_Pt]]:
    boxes, P = _box_data(sigma)
    memo: dict = {}
    bx = [M.ext(b, memo) for b in boxes]
    bd = [M.ext(b.a, memo) for b in boxes]
    pts = []
    for u in range(M.n):
        e = M.params_at(u, P)
        box_bits = sum(1 << i for i, m in enumerate(bx) if m >> u & 1)
        body_bits = sum(1 << i for i, m in enumerate(bd) if m >> u & 1)
        pts.append(_Pt(e, box_bits, box_bits & body_bits, body_bits))
    return P, len(boxes), pts


def pseudoextensible(L: LogicSpec, M: Model, sigma: Sequence[Formula]) -> bool:
    """Whether M is base(L)-pseudoextensible with respect to Sub(sigma)."""
    P, nb, pts = model_points(M, sigma)
    missing = set(P) - set(M.params)
    if missing:
        raise ClxError(f"undeclared parameters in the model: {sorted(missing)}")
    return pseudo_failure(L, P, nb, pts) is None


def certificate_bound(rule: Rule) -> int:
    b = sum(1 for f in subformulas(list(rule.formulas())) if f.op == "box")
    sig = subformulas(list(rule.premises))
    m = len(parameters(list(rule.premises))) + 2 * sum(1 for f in sig if f.op == "box")
    return 3 * 2 ** b * (2 ** m + len(rule.conclusions))


def check_certificate(L: LogicSpec, rule: Rule, M: Model) -> bool:
    fs = rule.formulas()
    missing = (set(parameters(list(fs))) - set(M.params))
    if missing:
        raise ClxError(f"undeclared parameters in the model: {sorted(missing)}")
    if not is_l_frame(L, M):
        return False
    memo: dict = {}
    if any(M.ext(g, memo) != M.full for g in rule.premises):
        return False
    if any(M.ext(d, memo) == M.full for d in rule.conclusions):
        return False
    if M.n == 0:
        return False
    return pseudoextensible(L, M, rule.premises)


# ---------------------------------------------------------------- engine A

class _Project:
    """Projection of Sigma+ types to the premise context, and the premise filter."""

    def __init__(self, big: SigmaContext, small: SigmaContext):
        self.big, self.small = big, small
        self.amap = [big.atom_index[f] for f in small.atoms]
        self.bmap = [big.box_index[f] for f in small.boxes]

    def __call__(self, a: int, b: int) -> tuple[int, int]:
        a2 = sum(1 << i for i, j in enumerate(self.amap) if a >> j & 1)
        b2 = sum(1 << i for i, j in enumerate(self.bmap) if b >> j & 1)
        return a2, b2


def _premise_types(ctx: SigmaContext, gamma: Sequence[Formula]) -> set:
    idx = [ctx.index[g] for g in gamma]
    out = set()
    for a in range(1 << ctx.na):
        for b in range(1 << ctx.nb):
            ev = ctx.evaluate(a, b)
            if all(ev >> i & 1 for i in idx):
                out.add((a, b))
    return out


def _implies(L: LogicSpec, big: SigmaContext, proj: _Project, U: frozenset, delta: Formula, cap: int) -> bool:
    """psi_U |-_L delta, decided on Sigma+ types."""
    sat = saturate(L, big, lambda a, b: proj(a, b) in U, cap)
    i = big.index[delta]
    return all(big.evaluate(*t[0]) >> i & 1 for t in sat.types)


def _contexts(L: LogicSpec, rule: Rule):
    L.check_params(rule.formulas())
    gamma = list(rule.premises)
    small = SigmaContext(gamma) if gamma else SigmaContext([])
    big = SigmaContext(gamma + list(rule.conclusions))
    return gamma, small, big, _Project(big, small)


def projective_sets(L: LogicSpec, gamma: Sequence[Formula], cap: int = DEFAULT_CAP):
    ctx = SigmaContext(list(gamma))
    return ctx, maximal_projective_sets(L, ctx, _premise_types(ctx, gamma), cap)


def witness_unifier(L: LogicSpec, ctx: SigmaContext, U: frozenset, rule: Rule, cap: int = DEFAULT_CAP) -> Substitution:
    """The verified projective unifier of psi_U, re-checked against the rule."""
    psi = type_set_formula(L, ctx, U)
    ch = find_unifier_chain(L, psi, cap=cap)
    chk = ChainCheck(L, psi, ch, extra=list(rule.formulas()), cap=cap)
    if not all(chk.valid_after(g) for g in rule.premises):
        raise ClxError("internal: projective unifier does not unify the premises")
    if not all(chk.refuted_after(d) for d in rule.conclusions):
        raise ClxError("internal: projective unifier unifies a conclusion")
    return simplify_substitution(chain_substitution(psi, ch))


def engine_a(L: LogicSpec, rule: Rule, cap: int = DEFAULT_CAP, witness: bool = True) -> Decision:
    gamma, small, big, proj = _contexts(L, rule)
    _, sets = projective_sets(L, gamma, cap)
    for U in sets:
        if not any(_implies(L, big, proj, U, d, cap) for d in rule.conclusions):
            sigma = witness_unifier(L, small, U, rule, cap) if witness else None
            return Decision(Verdict.NOT_ADMISSIBLE, unifier=sigma, engine="A")
    return Decision(Verdict.ADMISSIBLE, engine="A")


# ---------------------------------------------------------------- engine B

def engine_b(L: LogicSpec, rule: Rule, cap: int = DEFAULT_CAP, limit: int = 5000) -> Decision:
    gamma, small, big, proj = _contexts(L, rule)
    boxes, P = _box_data(gamma)
    bi = [big.index[b] for b in boxes]
    ai = [big.index[b.a] for b in boxes]
    pidx = {p: i for i, p in enumerate(big.atoms) if p.op == "par"}

    def info(a: int, b: int) -> _Pt:
        ev = big.evaluate(a, b)
        e = frozenset(p.name for p, i in pidx.items() if p.name in P and a >> i & 1)
        bx = sum(1 << k for k, i in enumerate(bi) if ev >> i & 1)
        bd = sum(1 << k for k, i in enumerate(ai) if ev >> i & 1)
        return _Pt(e, bx, bx & bd, bd)

    didx = [big.index[d] for d in rule.conclusions]
    seen: set = set()
    stack = [frozenset(_premise_types(big, gamma))]
    while stack:
        U = stack.pop()
        S, sat = realized(L, big, set(U), cap)
        if S in seen or not S:
            continue
        seen.add(S)
        if len(seen) > limit:
            raise ResourceCap("engine B search exceeded its limit")
        if not all(any(not big.evaluate(*t) >> i & 1 for t in S) for i in didx):
            continue
        pinfo = {t: info(*t) for t in S}
        bad = pseudo_failure(L, P, len(boxes), pinfo.values())
        if bad is None:
            M, _ = sat.materialize(sorted(sat.types))
            return Decision(Verdict.NOT_ADMISSIBLE, model=M, engine="B")
        if bad.n == 0:
            continue
        for g in bad.generators:
            stack.append(frozenset(t for t in S if pinfo[t].dot != g))
    return Decision(Verdict.ADMISSIBLE, engine="B")


# ---------------------------------------------------------------- facade

def admissible(L: LogicSpec, rule: Rule, engine: str = "both", cap: int = DEFAULT_CAP) -> Decision:
    engine = engine.lower()
    if engine not in ("a", "b", "both"):
        raise ClxError(f"unknown engine {engine!r}")
    try:
        if engine == "a":
            return engine_a(L, rule, cap)
        if engine == "b":
            return engine_b(L, rule, cap)
        da, db = engine_a(L, rule, cap), engine_b(L, rule, cap)
    except ResourceCap as e:
        return Decision(Verdict.UNDECIDED, engine=engine, note=str(e))
    if da.verdict is not db.verdict:
        raise ClxError(f"engines disagree on {rule}: A says {da.verdict}, B says {db.verdict}")
    return Decision(da.verdict, da.unifier, db.model, "both")


def derivable(L: LogicSpec, rule: Rule, cap: int = DEFAULT_CAP) -> bool:
    return any(consequence(L, rule.premises, d, cap) for d in rule.conclusions)


def unifiable(L: LogicSpec, gamma: Iterable[Formula], cap: int = DEFAULT_CAP) -> bool:
    gamma = list(gamma)
    L.check_params(gamma)
    _, sets = projective_sets(L, gamma, cap)
    return bool(sets)


def unify(L: LogicSpec, gamma: Iterable[Formula], cap: int = DEFAULT_CAP) -> list[Substitution]:
    """Projective unifiers of the members of a projective approximation: a complete set."""
    gamma = list(gamma)
    L.check_params(gamma)
    ctx, sets = projective_sets(L, gamma, cap)
    out = []
    for U in sets:
        psi = type_set_formula(L, ctx, U)
        ch = find_unifier_chain(L, psi, extra_valid=gamma, cap=cap)
        out.append(simplify_substitution(chain_substitution(psi, ch)))
    return out


class UnificationType(enum.Enum):
    UNITARY = "unitary"
    FINITARY = "finitary"

    def __str__(self) -> str:
        return self.value


def unification_type(L: LogicSpec) -> UnificationType:
    return UnificationType.UNITARY if is_linear(L) else UnificationType.FINITARY


K42 = imp(dia(boxdot(Var("x"))), box(diadot(Var("x"))))


def directed(L: LogicSpec) -> bool:
    return tautology(L, K42)
