"""Brute-force reference implementations used only by the tests.

Everything here enumerates explicit finite frames and valuations; nothing is
shared with the type-level engines under test.
"""
from __future__ import annotations

import random
from functools import lru_cache
from itertools import product

from clxadm.formula import (FALSE, TRUE, Formula, Par, Var, box, conj, dia, disj, iff, imp, neg,
                            parameters, variables)
from clxadm.kripke import Model, bits, frames, popcount

# ---------------------------------------------------------------- frame conditions, coded directly

def _clusters(up):
    n = len(up)
    seen, out = set(), []
    for u in range(n):
        if u in seen:
            continue
        c = [v for v in range(n) if v == u or (up[u] >> v & 1 and up[v] >> u & 1)]
        seen.update(c)
        out.append(c)
    return out


def _refl(up, u):
    return bool(up[u] >> u & 1)


def _strict_succ(up, u):
    return [v for v in bits(up[u]) if not up[v] >> u & 1]


def _final(up, c):
    u = c[0]
    return not _strict_succ(up, u)


def depth(up):
    n = len(up)
    memo = {}

    def h(u):
        if u not in memo:
            memo[u] = 1 + max((h(v) for v in _strict_succ(up, u)), default=0)
        return memo[u]
    return max((h(u) for u in range(n)), default=0)


def width_le1(up):
    # strict successors of every point are pairwise comparable
    n = len(up)
    for u in range(n):
        s = _strict_succ(up, u)
        for a in s:
            for b in s:
                if a != b and not (up[a] >> b & 1 or up[b] >> a & 1):
                    return False
    return True


def max_branching(up):
    best = 0
    for u in range(len(up)):
        s = _strict_succ(up, u)
        imm = [v for v in s if not any(w != v and up[w] >> v & 1 and not up[v] >> w & 1 for w in s)]
        cl = {min(c for c in range(len(up)) if c == v or (up[v] >> c & 1 and up[c] >> v & 1)) for v in imm}
        best = max(best, len(cl))
    return best


def table1(name: str, up) -> bool:
    n = len(up)
    cls = _clusters(up)
    refl = all(_refl(up, u) for u in range(n))
    irr = not any(_refl(up, u) for u in range(n))
    small = all(len(c) == 1 for c in cls)
    final_small = all(len(c) == 1 for c in cls if _final(up, c))
    d1 = depth(up) <= 1
    if name == "K4":
        return True
    if name == "S4":
        return refl
    if name == "D4":
        return all(_refl(up, c[0]) for c in cls if _final(up, c))
    if name == "GL":
        return irr
    if name == "K4Grz":
        return small
    if name == "S4Grz":
        return refl and small
    if name == "K4.1":
        return final_small
    if name == "S4.1":
        return refl and final_small
    if name == "K4.3":
        return width_le1(up)
    if name == "GL.3":
        return irr and width_le1(up)
    if name == "S4.3":
        return refl and width_le1(up)
    if name == "K4B":
        return d1
    if name == "S5":
        return refl and d1
    if name == "Triv":
        return refl and d1 and small
    if name == "Verum":
        return irr and d1
    if name == "Form":
        return n == 0
    if name == "S4.1.4":
        return refl and all(len(c) == 1 for c in cls if not _final(up, c))
    if name.startswith("K4BB_"):
        return max_branching(up) <= int(name[5:])
    if name.startswith("K4BC_"):
        return all(len(c) <= int(name[5:]) for c in cls)
    raise KeyError(name)


# ---------------------------------------------------------------- models

def frames_upto(k: int):
    for n in range(1, k + 1):
        yield from frames(n)


def all_models(up, atoms):
    """Every valuation of the given atom formulas on the frame."""
    n = len(up)
    for masks in product(range(1 << n), repeat=len(atoms)):
        yield Model(up, dict(zip(atoms, masks)), check=False)


def brute_consequence(L_frame, gamma, phi, max_points=4):
    """None if no countermodel up to max_points, else a countermodel."""
    fs = list(gamma) + [phi]
    ats = [Par(p) for p in parameters(fs)] + [Var(x) for x in variables(fs)]
    for up in frames_upto(max_points):
        if not L_frame(up):
            continue
        for M in all_models(up, ats):
            memo = {}
            if all(M.ext(g, memo) == M.full for g in gamma) and M.ext(phi, memo) != M.full:
                return M
    return None


# ---------------------------------------------------------------- random formulas

def random_formula(rng: random.Random, depth: int, vars=("x", "y"), params=("p",), boxes=True) -> Formula:
    leaves = [Var(v) for v in vars] + [Par(p) for p in params] + [FALSE, TRUE]
    if depth <= 0 or rng.random() < 0.25:
        return rng.choice(leaves)
    ops = ["neg", "and", "or", "imp"] + (["box", "dia", "box"] if boxes else [])
    op = rng.choice(ops)
    a = random_formula(rng, depth - 1, vars, params, boxes)
    if op == "neg":
        return neg(a)
    if op == "box":
        return box(a)
    if op == "dia":
        return dia(a)
    b = random_formula(rng, depth - 1, vars, params, boxes)
    return {"and": conj, "or": disj, "imp": imp}[op](a, b)


# ---------------------------------------------------------------- bit-sliced evaluation

@lru_cache(maxsize=None)
def _pattern(i, total):
    return sum(1 << v for v in range(1 << total) if v >> i & 1)


def sliced(up, f, base, memo=None):
    """Per-point truth of f as integers over all valuations; base maps atoms to per-point vectors."""
    memo = {} if memo is None else memo
    n = len(up)
    ALL = base["__all__"]

    def go(g):
        r = memo.get(g)
        if r is not None:
            return r
        if g.op in ("var", "par"):
            r = base[g]
        elif g.op == "bot":
            r = [0] * n
        elif g.op == "imp":
            a, b = go(g.a), go(g.b)
            r = [(ALL ^ a[u]) | b[u] for u in range(n)]
        else:
            a = go(g.a)
            r = []
            for u in range(n):
                acc = ALL
                for v in range(n):
                    if up[u] >> v & 1:
                        acc &= a[v]
                r.append(acc)
        memo[g] = r
        return r
    return go(f)


def _root_cluster(up):
    n = len(up)
    for u in range(n):
        if all(v == u or up[u] >> v & 1 for v in range(n)):
            return [v for v in range(n) if v == u or (up[u] >> v & 1 and up[v] >> u & 1)]
    return None


def brute_mep(L_frame, phi, max_points=4):
    """True iff every rooted L-model up to max_points whose points off the root
    cluster satisfy phi can be revalued on the root cluster to satisfy phi."""
    xs = [Var(x) for x in variables(phi)]
    ps = [Par(p) for p in parameters(phi)]
    for up in frames_upto(max_points):
        R = _root_cluster(up)
        if R is None or not L_frame(up):
            continue
        n = len(up)
        rest = [u for u in range(n) if u not in R]
        # valuation bits: root variables first, then everything else
        order = [(x, u) for x in xs for u in R] + [(x, u) for x in xs for u in rest] + \
                [(p, u) for p in ps for u in range(n)]
        r = len(xs) * len(R)
        total = len(order)
        ALL = (1 << (1 << total)) - 1
        base = {"__all__": ALL}
        for a in xs + ps:
            base[a] = [0] * n
        for i, (a, u) in enumerate(order):
            base[a][u] = _pattern(i, total)
        val = sliced(up, phi, base)
        outside = ALL
        for u in rest:
            outside &= val[u]
        every = outside
        for u in R:
            every &= val[u]

        def fold(X):
            for i in range(r):
                X |= X >> (1 << i)
            return X
        low = sum(1 << (k << r) for k in range(1 << (total - r)))
        if fold(outside) & ~fold(every) & low:
            return False
    return True


def theta_unifies(L_frame, phi, chain, max_points=4):
    """Whether the Loewenheim chain, applied as valuation rewrites, makes phi
    valid on every L-model up to max_points.  chain items map each variable
    to the set of parameter sets where d_x is true."""
    xs = [Var(x) for x in variables(phi)]
    ps = sorted(parameters(phi))
    pv = [Par(p) for p in ps]
    bd = conj(phi, box(phi))
    for up in frames_upto(max_points):
        if not L_frame(up):
            continue
        n = len(up)
        order = [(a, u) for a in xs + pv for u in range(n)]
        total = len(order)
        ALL = (1 << (1 << total)) - 1
        base = {"__all__": ALL}
        for a in xs + pv:
            base[a] = [0] * n
        for i, (a, u) in enumerate(order):
            base[a][u] = _pattern(i, total)
        # parameter assignment indicator per point: vector true where the point has exactly e
        ind = {}
        for e in product((False, True), repeat=len(ps)):
            key = frozenset(p for p, b in zip(ps, e) if b)
            ind[key] = []
            for u in range(n):
                acc = ALL
                for p, b in zip(pv, e):
                    acc &= base[p][u] if b else ALL ^ base[p][u]
                ind[key].append(acc)
        for D in chain:
            ok = sliced(up, bd, base)
            new = dict(base)
            for x in xs:
                dx = [0] * n
                for e in D.get(x.name, ()):
                    for u in range(n):
                        dx[u] |= ind[e][u]
                new[x] = [(ok[u] & base[x][u]) | ((ALL ^ ok[u]) & dx[u]) for u in range(n)]
            base = new
        val = sliced(up, phi, base)
        for u in range(n):
            if val[u] != ALL:
                return False
    return True


def small_formulas(atoms, k):
    """All formulas over the atoms (and false) with at most k subformulas."""
    fs = {a: frozenset([a]) for a in list(atoms) + [FALSE]}
    changed = True
    while changed:
        changed = False
        items = list(fs.items())
        for f, s in items:
            g = box(f)
            if g not in fs and len(s) + 1 <= k:
                fs[g] = s | {g}
                changed = True
            for h, t in items:
                g = imp(f, h)
                u = s | t | {g}
                if g not in fs and len(u) <= k:
                    fs[g] = u
                    changed = True
    return sorted(fs, key=lambda f: (len(fs[f]), str(f)))
