"""Sigma-types and the saturation engine.

A Sigma-type is a truth assignment to a subformula-closed set Sigma.  It is
fixed by the atoms and the boxed members of Sigma, so a type is stored as a
pair (a, b) of bitmasks: `a` over the atoms, `b` over the boxes.

Saturation builds finite rooted models bottom-up.  A new root cluster only
sees its generators through one number per box: whether the body holds
everywhere in their cones.  The engine therefore works with "what the root
sees" masks and never with the models themselves, keeping just enough
provenance to materialise a witness on demand.

The engine optionally runs a chain of valuation rewrites in lock-step
("levels"): level j+1 has the same frame as level j and variables recomputed
from the level-j type of the same point.  This is how Loewenheim unifiers are
verified without expanding their formulas.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .formula import (BOT, BOX, IMP, PAR, VAR, ClxError, Formula, ResourceCap, box, conj_all, neg,
                      subformulas, to_text)
from .kripke import IRR, Model, bits
from .logic import EC, LogicSpec, tp_member

DEFAULT_CAP = 20000
SIGMA_CAP = 16


class SigmaContext:
    """Sigma (sorted so subformulas come first) with its atoms and boxes."""

    def __init__(self, formulas: Iterable[Formula], cap: int = SIGMA_CAP):
        self.sigma = tuple(subformulas(list(formulas)))
        self.index = {f: i for i, f in enumerate(self.sigma)}
        ats = [f for f in self.sigma if f.op in (PAR, VAR)]
        ats.sort(key=lambda f: (f.op != PAR, f.name))
        self.atoms = tuple(ats)
        self.atom_index = {f: i for i, f in enumerate(self.atoms)}
        self.P = tuple(f.name for f in ats if f.op == PAR)
        self.V = tuple(f.name for f in ats if f.op == VAR)
        self.boxes = tuple(f for f in self.sigma if f.op == BOX)
        self.box_index = {f: i for i, f in enumerate(self.boxes)}
        self.bodies = tuple(g.a for g in self.boxes)
        self.na = len(self.atoms)
        self.nb = len(self.boxes)
        if self.na + self.nb > cap:
            raise ResourceCap(f"Sigma has {self.na} atoms and {self.nb} boxes, over the cap {cap}")
        self.box_all = (1 << self.nb) - 1
        self.par_mask = sum(1 << i for i, f in enumerate(self.atoms) if f.op == PAR)
        self._ops = []
        for f in self.sigma:
            if f.op in (PAR, VAR):
                self._ops.append((0, self.atom_index[f], 0))
            elif f.op == BOT:
                self._ops.append((1, 0, 0))
            elif f.op == IMP:
                self._ops.append((2, self.index[f.a], self.index[f.b]))
            else:
                self._ops.append((3, self.box_index[f], self.index[f.a]))
        self._eval: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self.sigma)

    # a type's full truth vector over Sigma, as a bitmask
    def evaluate(self, a: int, b: int) -> int:
        key = (a, b)
        r = self._eval.get(key)
        if r is not None:
            return r
        r = 0
        for i, (k, x, y) in enumerate(self._ops):
            if k == 0:
                v = a >> x & 1
            elif k == 1:
                v = 0
            elif k == 2:
                v = (not (r >> x & 1)) or (r >> y & 1)
            else:
                v = b >> x & 1
            if v:
                r |= 1 << i
        self._eval[key] = r
        return r

    def value(self, a: int, b: int, f: Formula) -> bool:
        return bool(self.evaluate(a, b) >> self.index[f] & 1)

    def psi(self, a: int, b: int) -> int:
        """Bits i with the body of box i true."""
        ev = self.evaluate(a, b)
        out = 0
        for i, g in enumerate(self.bodies):
            if ev >> self.index[g] & 1:
                out |= 1 << i
        return out

    def boxdot(self, a: int, b: int) -> int:
        return b & self.psi(a, b)

    def cluster(self, gm: int, atoms: Sequence[int], reflexive: bool) -> int:
        """Box bits shared by a new root cluster with the given atoms over mask gm."""
        if not reflexive:
            return gm
        vals = [0] * len(atoms)
        b = 0
        for i, (k, x, y) in enumerate(self._ops):
            if k == 3:
                v = (gm >> x & 1) and all(vp >> y & 1 for vp in vals)
                if v:
                    b |= 1 << x
                for p in range(len(vals)):
                    if v:
                        vals[p] |= 1 << i
                continue
            for p, a in enumerate(atoms):
                if k == 0:
                    v = a >> x & 1
                elif k == 1:
                    v = 0
                else:
                    r = vals[p]
                    v = (not (r >> x & 1)) or (r >> y & 1)
                if v:
                    vals[p] |= 1 << i
        return b

    def params_of(self, a: int) -> frozenset[str]:
        return frozenset(f.name for i, f in enumerate(self.atoms) if f.op == PAR and a >> i & 1)

    def atoms_from(self, params: Iterable[str], vars: Iterable[str]) -> int:
        s = set(params) | set(vars)
        return sum(1 << i for i, f in enumerate(self.atoms) if f.name in s)

    def formula(self, a: int, b: int) -> Formula:
        """The characteristic conjunction of atom and box literals."""
        lits = []
        for i, f in enumerate(self.atoms):
            lits.append(f if a >> i & 1 else neg(f))
        for i, g in enumerate(self.boxes):
            lits.append(g if b >> i & 1 else neg(g))
        return conj_all(lits)

    def describe(self, a: int, b: int) -> str:
        parts = [to_text(f) if a >> i & 1 else "!" + to_text(f) for i, f in enumerate(self.atoms)]
        parts += [to_text(g) if b >> i & 1 else "!" + to_text(g) for i, g in enumerate(self.boxes)]
        return "{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class SigmaType:
    a: int
    b: int

    def value(self, ctx: SigmaContext, f: Formula) -> bool:
        return ctx.value(self.a, self.b, f)


@dataclass(frozen=True)
class TypePair:
    root_types: frozenset
    reflexive: bool
    cone: frozenset


# ---------------------------------------------------------------- the engine

# a (level) type is a tuple of (a_j, b_j), one entry per level
Ext = tuple


@dataclass
class _Witness:
    reflexive: bool
    atoms: tuple[int, ...]       # level-0 atoms of the cluster points
    types: tuple                  # the ext types of those points
    gens: tuple                   # generator ext types


def _hitting(a: int, kill: dict, A: Sequence[int], kmax: int) -> tuple[int, ...] | None:
    """A cluster of at most kmax atoms containing a that refutes every box in kill."""
    need = [s for s in kill.values() if a not in s]
    if len(need) <= kmax - 1:
        return tuple(sorted({a} | {min(s) for s in need}))
    for r in range(1, kmax):
        for C in combinations(A, r):
            if all(any(c in s for c in C) for s in need):
                return tuple(sorted({a, *C}))
    return None


class Saturation:
    """Least fixpoint of root attachment, restricted to `allowed` types.

    `transitions[j](ctx, a, b)` gives the level-(j+1) atoms of a point whose
    level-j type is (a, b).
    """

    def __init__(self, L: LogicSpec, ctx: SigmaContext, allowed: Callable[[Ext], bool] | None = None,
                 transitions: Sequence[Callable[[SigmaContext, int, int], int]] = (),
                 cap: int = DEFAULT_CAP):
        self.L, self.ctx, self.cap = L, ctx, cap
        self.allowed = allowed or (lambda t: True)
        self.trans = tuple(transitions)
        self.levels = len(self.trans) + 1
        nb = ctx.nb
        self.full_mask = 0
        for j in range(self.levels):
            self.full_mask |= ctx.box_all << (j * nb)
        self.types: dict[Ext, _Witness] = {}
        self.masks: dict[int, tuple[int, tuple]] = {}
        self.gen_masks: dict[int, Ext] = {}
        self._configs: list[tuple[int, int]] = [(self.full_mask, 0)]
        self._kmax_cache: dict[int, int] = {}
        self._run()

    # -------------------------------------------------------------- helpers

    def dmask(self, t: Ext) -> int:
        nb = self.ctx.nb
        m = 0
        for j, (a, b) in enumerate(t):
            m |= self.ctx.boxdot(a, b) << (j * nb)
        return m

    def _level_mask(self, gm: int, j: int) -> int:
        return gm >> (j * self.ctx.nb) & self.ctx.box_all

    def build(self, gm: int, atoms0: Sequence[int], reflexive: bool) -> list[Ext]:
        """Ext types of a new root cluster with the given level-0 atoms."""
        ctx = self.ctx
        cur = list(atoms0)
        per = [[] for _ in cur]
        for j in range(self.levels):
            b = ctx.cluster(self._level_mask(gm, j), cur, reflexive)
            for p, a in enumerate(cur):
                per[p].append((a, b))
            if j < self.levels - 1:
                cur = [self.trans[j](ctx, a, b) for a in cur]
        return [tuple(x) for x in per]

    def _kmax(self, n: int) -> int:
        r = self._kmax_cache.get(n)
        if r is None:
            lim = 1 << self.ctx.na
            r = 0
            while r < lim and tp_member(self.L, EC(r + 1, n)):
                r += 1
            self._kmax_cache[n] = r
        return r

    def _clusters_by_mask(self, gm: int, kmax: int):
        """Reflexive root clusters over gm, one family per shared box mask b.

        A point fits a cluster with box bits b iff every boxed body in b holds
        there; each box of gm outside b must be refuted by some member.  All
        fitting atoms can share one cluster when kmax allows.
        """
        if kmax == 0:
            return
        ctx = self.ctx
        sub = gm
        while True:
            b = sub
            A = [a for a in range(1 << ctx.na) if ctx.psi(a, b) & b == b and self.allowed(((a, b),))]
            if A:
                kill = {i: {a for a in A if not ctx.psi(a, b) >> i & 1} for i in bits(gm & ~b)}
                if all(kill.values()):
                    if len(A) <= kmax:
                        yield tuple(A)
                    else:
                        for a in A:
                            S = _hitting(a, kill, A, kmax)
                            if S is not None:
                                yield S
            if sub == 0:
                break
            sub = (sub - 1) & gm

    def _check_cap(self) -> None:
        if len(self.types) + len(self.masks) > self.cap:
            raise ResourceCap(f"saturation exceeded {self.cap} entries")

    # -------------------------------------------------------------- fixpoint

    def _run(self) -> None:
        ctx = self.ctx
        todo = self._configs
        seen_cfg: dict[int, int] = {}
        while todo:
            gm, n = todo.pop()
            if n > 0:
                n = self.masks[gm][0]
                if gm in seen_cfg and seen_cfg[gm] <= n:
                    continue
                seen_cfg[gm] = n
            gens = () if n == 0 else self.masks[gm][1]
            new_gens: list[tuple[int, Ext]] = []
            if tp_member(self.L, EC(IRR, n)):
                for a in range(1 << ctx.na):
                    t = self.build(gm, [a], False)[0]
                    if t not in self.types and self.allowed(t):
                        self.types[t] = _Witness(False, (a,), (t,), gens)
                        new_gens.append((self.dmask(t), t))
            kmax = self._kmax(n)
            clusters = self._clusters_by_mask(gm, kmax) if self.levels == 1 else \
                (S for k in range(1, kmax + 1) for S in combinations(range(1 << ctx.na), k))
            for S in clusters:
                ts = self.build(gm, S, True)
                if all(t in self.types for t in ts):
                    continue
                if not all(self.allowed(t) for t in ts):
                    continue
                w = _Witness(True, tuple(S), tuple(ts), gens)
                m = self.full_mask
                for t in ts:
                    self.types.setdefault(t, w)
                    m &= self.dmask(t)
                new_gens.append((m, ts[0]))
            self._check_cap()
            for m, t in new_gens:
                self._add_gen(m, t, todo)

    def _add_gen(self, m: int, t: Ext, todo: list) -> None:
        if m in self.gen_masks:
            return
        self.gen_masks[m] = t
        cands = [(m, 1, (t,))]
        cands += [(m & k, c + 1, g + (t,)) for k, (c, g) in list(self.masks.items())]
        while cands:
            key, c, g = cands.pop()
            old = self.masks.get(key)
            if old is not None and old[0] <= c:
                continue
            self.masks[key] = (c, g)
            todo.append((key, c))
            for gm2, t2 in self.gen_masks.items():
                if t2 not in g:
                    cands.append((key & gm2, c + 1, g + (t2,)))
        self._check_cap()

    # -------------------------------------------------------------- queries

    def configs(self) -> list[tuple[int, int, tuple]]:
        """Achievable (mask, least generator count, generators), plus the empty set."""
        out = [(self.full_mask, 0, ())]
        out += sorted(((m, c, g) for m, (c, g) in self.masks.items()), key=lambda x: (x[1], -x[0]))
        return out

    def realized(self) -> set[Ext]:
        return set(self.types)

    def pair_of(self, t: Ext) -> TypePair:
        w = self.types[t]
        return TypePair(frozenset(w.types), w.reflexive, frozenset(self.cone(t)))

    def cone(self, t: Ext) -> set[Ext]:
        out: set = set()
        stack = [t]
        while stack:
            u = stack.pop()
            if u in out:
                continue
            w = self.types[u]
            out.update(w.types)
            stack.extend(w.gens)
        return out

    def materialize(self, roots: Iterable[Ext], level: int = 0) -> tuple[Model, dict]:
        """A finite model realizing the given types, built from the witnesses.

        Points are shared between witnesses, so the result is a DAG of
        clusters rather than a tree; every point realizes the ext type it was
        built for.  Returns the model and the map from ext types to points.
        """
        ctx = self.ctx
        point_of: dict[Ext, int] = {}
        clusters: list[tuple[_Witness, list[int]]] = []
        order: list[_Witness] = []
        done: set[int] = set()

        def visit(t: Ext) -> None:
            stack = [(t, False)]
            while stack:
                u, expanded = stack.pop()
                w = self.types[u]
                if id(w) in done:
                    continue
                if expanded:
                    done.add(id(w))
                    order.append(w)
                    continue
                stack.append((u, True))
                for g in w.gens:
                    if id(self.types[g]) not in done:
                        stack.append((g, False))

        for t in roots:
            visit(t)
        npts = 0
        for w in order:
            pts = list(range(npts, npts + len(w.atoms)))
            npts += len(w.atoms)
            clusters.append((w, pts))
            for t, p in zip(w.types, pts):
                point_of.setdefault(t, p)
        up = [0] * npts
        for w, pts in clusters:
            m = 0
            for g in w.gens:
                gp = point_of[g]
                m |= up[gp] | (1 << gp)
            if w.reflexive:
                for p in pts:
                    m |= 1 << p
            for p in pts:
                up[p] = m
        atoms: dict[Formula, int] = {f: 0 for f in ctx.atoms}
        for w, pts in clusters:
            for t, p in zip(w.types, pts):
                a = t[level][0]
                for i, f in enumerate(ctx.atoms):
                    if a >> i & 1:
                        atoms[f] |= 1 << p
        ids = [f"w{i}" for i in range(npts)]
        return Model(up, atoms, ctx.P, ctx.V, ids, check=False), point_of


# ---------------------------------------------------------------- facade

def saturate(L: LogicSpec, ctx: SigmaContext, allowed: Callable[[int, int], bool] | None = None,
             cap: int = DEFAULT_CAP) -> Saturation:
    pred = None if allowed is None else (lambda t: allowed(*t[0]))
    return Saturation(L, ctx, pred, cap=cap)


def pairs(sat: Saturation) -> list[TypePair]:
    seen = {}
    for t, w in sat.types.items():
        if id(w) not in seen:
            seen[id(w)] = sat.pair_of(t)
    return sorted(seen.values(), key=lambda p: (len(p.cone), sorted(p.root_types)))


def realizable_type_sets(L: LogicSpec, ctx: SigmaContext, allowed=None, cap: int = DEFAULT_CAP):
    """(generators, realized cone union, generator count) per achievable root view."""
    sat = saturate(L, ctx, allowed, cap)
    out = []
    for m, c, g in sat.configs():
        union = set()
        for t in g:
            union |= sat.cone(t)
        out.append((g, frozenset(x[0] for x in union), c))
    out.sort(key=lambda x: (len(x[1]), x[2], sorted(x[1])))
    return out


def _premise_filter(ctx: SigmaContext, gamma: Sequence[Formula]):
    idx = [ctx.index[g] for g in gamma]

    def ok(a: int, b: int) -> bool:
        ev = ctx.evaluate(a, b)
        return all(ev >> i & 1 for i in idx)
    return ok


def _setup(L: LogicSpec, gamma: Iterable[Formula], phi: Formula, cap: int):
    gamma = list(gamma)
    L.check_params(gamma + [phi])
    ctx = SigmaContext(gamma + [phi], cap=SIGMA_CAP)
    sat = saturate(L, ctx, _premise_filter(ctx, gamma), cap)
    return ctx, sat


def _refuters(ctx: SigmaContext, sat: Saturation, phi: Formula) -> list[Ext]:
    i = ctx.index[phi]
    bad = [t for t in sat.types if not ctx.evaluate(*t[0]) >> i & 1]
    bad.sort(key=lambda t: (len(sat.cone(t)), t))
    return bad


def consequence(L: LogicSpec, gamma: Iterable[Formula], phi: Formula, cap: int = DEFAULT_CAP) -> bool:
    """Global consequence: phi holds in every L-model where gamma holds everywhere."""
    ctx, sat = _setup(L, gamma, phi, cap)
    return not _refuters(ctx, sat, phi)


def tautology(L: LogicSpec, phi: Formula, cap: int = DEFAULT_CAP) -> bool:
    return consequence(L, (), phi, cap)


def countermodel(L: LogicSpec, gamma: Iterable[Formula], phi: Formula, cap: int = DEFAULT_CAP,
                 minimize: bool = True) -> Model | None:
    """A rooted L-model with gamma everywhere and phi false at the root."""
    gamma = list(gamma)
    ctx, sat = _setup(L, gamma, phi, cap)
    bad = _refuters(ctx, sat, phi)
    if not bad:
        return None
    W, point_of = sat.materialize([bad[0]])
    r = point_of[bad[0]]
    W, _ = W.generated(r)
    if not minimize:
        return W
    return filtrate(W, gamma, phi)


# ---------------------------------------------------------------- selective filtration

def filtrate(W: Model, gamma: Sequence[Formula], phi: Formula) -> Model:
    """Selective filtration of a finite countermodel into a small tree of clusters.

    W must satisfy gamma everywhere and refute phi somewhere.  The result is
    rooted, refutes phi at its root, satisfies gamma everywhere, and has at
    most b nested clusters of size at most b, where b counts the boxed
    subformulas of gamma together with box phi.
    """
    sigma = subformulas(list(gamma) + [phi])
    B = [phi] + [g.a for g in sigma if g.op == BOX and g.a is not phi]
    memo: dict = {}
    ext = {f: W.ext(f, memo) for f in set(B) | {box(f) for f in B}}
    n = W.n
    bd = []
    for u in range(n):
        s = 0
        for i, f in enumerate(B):
            if ext[f] >> u & 1 and ext[box(f)] >> u & 1:
                s |= 1 << i
        bd.append(s)
    strict = W.strict
    allB = (1 << len(B)) - 1

    def crit(u: int) -> int:
        c = allB
        for v in bits(strict[u]):
            c &= bd[v]
        return c & ~bd[u]

    # root: a cluster whose critical set contains phi
    root = next(u for u in range(n) if crit(u) & 1)

    new_pts: list[tuple[int, bool]] = []      # (source point, reflexive)
    clusters: list[list[int]] = []
    children: list[list[int]] = []

    def make(D: int) -> int:
        """Copy of the cluster of D; returns the cluster index."""
        cl = bits(W.cluster[D])
        refl = W.reflexive(D)
        cr = crit(D)
        chosen = [D] if not cr else None
        if chosen is None:
            # a smallest subset of the cluster refuting each critical formula
            for k in range(1, len(cl) + 1):
                for sub in combinations(cl, k):
                    miss = cr
                    for u in sub:
                        for i in bits(cr):
                            if not ext[B[i]] >> u & 1:
                                miss &= ~(1 << i)
                    if not miss:
                        chosen = list(sub)
                        break
                if chosen:
                    break
            # a refuter of phi first, so that the root refuting phi is point 0
            chosen.sort(key=lambda u: ext[phi] >> u & 1)
        idx = []
        for u in chosen:
            idx.append(len(new_pts))
            new_pts.append((u, refl))
        clusters.append(idx)
        children.append([])
        return len(clusters) - 1

    def succ_sets(D: int) -> list[int]:
        above = bits(strict[D])
        if not above:
            return []
        ds = {bd[v] for v in above}
        S = [d for d in ds if not any(e != d and e & d == e for e in ds)]
        S.sort()
        changed = True
        while changed and len(S) >= 2:
            changed = False
            for d in S:
                others = allB
                for e in S:
                    if e != d:
                        others &= e
                if d & others == others:
                    S.remove(d)
                    changed = True
                    break
        return S

    def pick(D: int, d: int) -> int:
        cands = [v for v in bits(strict[D]) if bd[v] == d]
        # a maximal cluster among them: nothing strictly above with the same bdt
        for v in cands:
            if not any(strict[v] >> w & 1 for w in cands):
                return v
        return cands[0]

    top = make(root)
    stack = [(top, root)]
    while stack:
        ci, D = stack.pop()
        for d in succ_sets(D):
            v = pick(D, d)
            cj = make(v)
            children[ci].append(cj)
            stack.append((cj, v))

    npts = len(new_pts)
    below: list[int] = [0] * len(clusters)

    def reach(ci: int) -> int:
        if below[ci]:
            return below[ci]
        m = 0
        for cj in children[ci]:
            for p in clusters[cj]:
                m |= 1 << p
            m |= reach(cj)
        below[ci] = m
        return m

    up = [0] * npts
    for ci, pts in enumerate(clusters):
        m = reach(ci)
        if new_pts[pts[0]][1]:
            for p in pts:
                m |= 1 << p
        for p in pts:
            up[p] = m
    atoms = {}
    for f, m in W.atoms.items():
        am = 0
        for p, (u, _) in enumerate(new_pts):
            if m >> u & 1:
                am |= 1 << p
        atoms[f] = am
    return Model(up, atoms, W.params, W.vars, [f"a{i}" for i in range(npts)], check=False)


def fmp_bounds(gamma: Sequence[Formula], phi: Formula) -> dict[str, int]:
    b = len({g for g in subformulas(list(gamma) + [box(phi)]) if g.op == BOX})
    return {"b": b, "size": 3 * 2 ** (b - 1), "depth": b + 1, "cluster": b, "branching": max(b - 1, 1)}


def within_bounds(M: Model, gamma: Sequence[Formula], phi: Formula) -> bool:
    bd = fmp_bounds(gamma, phi)
    return (M.n < bd["size"] and M.depth() <= bd["depth"] and M.max_cluster() <= bd["cluster"]
            and M.branching() <= bd["branching"])
