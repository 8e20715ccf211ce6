"""Finite transitive parametric Kripke models.

Points are indices 0..n-1.  The accessibility relation is stored closed under
transitivity as one bitmask per point, with a self-loop for every reflexive
point.  Truth sets of formulas are bitmasks as well, which keeps model
checking to a handful of integer operations per subformula.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, permutations, product
from typing import Iterable, Mapping, Sequence

from .formula import (BOT, BOX, FALSE, IMP, PAR, VAR, ClxError, Formula, Par, ResourceCap, Rule,
                      Substitution, Var, apply, parameters, subformulas, variables)

INF = math.inf
IRR = 0  # cluster type of an irreflexive point; (k) is the integer k, (inf) is INF


@dataclass(frozen=True, order=True)
class FrameType:
    cluster: float
    n: float

    def __str__(self) -> str:
        return f"<{cluster_name(self.cluster)},{n_name(self.n)}>"

    def text(self, unicode: bool = False) -> str:
        if not unicode:
            return str(self)
        return f"⟨{cluster_name(self.cluster, True)},{n_name(self.n, True)}⟩"


def cluster_name(c, unicode: bool = False) -> str:
    if c == IRR:
        return "•" if unicode else "irr"
    inf = "∞" if unicode else "inf"
    return f"({inf})" if c == INF else f"({int(c)})"


def n_name(n, unicode: bool = False) -> str:
    return ("∞" if unicode else "inf") if n == INF else str(int(n))


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class Model:
    """An immutable finite transitive model.

    `up[u]` is the bitmask of points v with u R v.  `atoms` maps every atom
    of the universe to the bitmask of points where it holds.
    """

    def __init__(self, up: Sequence[int], atoms: Mapping[Formula, int],
                 params: Iterable[str] = (), vars: Iterable[str] = (),
                 ids: Sequence[str] | None = None, check: bool = True):
        self.n = len(up)
        self.up = tuple(up)
        self.params = tuple(sorted(set(params) | {a.name for a in atoms if a.op == PAR}))
        self.vars = tuple(sorted(set(vars) | {a.name for a in atoms if a.op == VAR}))
        full = (1 << self.n) - 1
        am = {Par(p): 0 for p in self.params}
        am.update({Var(x): 0 for x in self.vars})
        for a, m in atoms.items():
            am[a] = m & full
        self.atoms = am
        self.ids = tuple(ids) if ids is not None else tuple(f"w{i}" for i in range(self.n))
        if check:
            for u in range(self.n):
                for v in bits(self.up[u]):
                    if self.up[v] & ~self.up[u]:
                        raise ClxError("relation is not transitive")

    # ------------------------------------------------------------ construction

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], reflexive: Iterable[int] = (),
                   atoms: Mapping[Formula, int] | None = None, **kw) -> "Model":
        up = [0] * n
        for u, v in edges:
            up[u] |= 1 << v
        for u in reflexive:
            up[u] |= 1 << u
        return cls(close(up), atoms or {}, check=False, **kw)

    def with_atoms(self, atoms: Mapping[Formula, int], params=None, vars=None) -> "Model":
        return Model(self.up, atoms, self.params if params is None else params,
                     self.vars if vars is None else vars, self.ids, check=False)

    # ------------------------------------------------------------ structure

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def reflexive(self, u: int) -> bool:
        return bool(self.up[u] >> u & 1)

    @cached_property
    def down(self) -> tuple[int, ...]:
        d = [0] * self.n
        for u in range(self.n):
            for v in bits(self.up[u]):
                d[v] |= 1 << u
        return tuple(d)

    @cached_property
    def cluster(self) -> tuple[int, ...]:
        """Bitmask of the cluster of each point."""
        return tuple((self.up[u] & self.down[u]) | (1 << u) for u in range(self.n))

    @cached_property
    def strict(self) -> tuple[int, ...]:
        """Points strictly above each point (above, not in the same cluster)."""
        return tuple(self.up[u] & ~self.cluster[u] for u in range(self.n))

    @cached_property
    def clusters(self) -> list[int]:
        seen, out = 0, []
        for u in range(self.n):
            if not seen >> u & 1:
                out.append(self.cluster[u])
                seen |= self.cluster[u]
        return out

    def rep(self, cmask: int) -> int:
        return (cmask & -cmask).bit_length() - 1

    @cached_property
    def immediate(self) -> tuple[tuple[int, ...], ...]:
        """Cluster masks of the immediate successor clusters of each point."""
        out = []
        for u in range(self.n):
            s = self.strict[u]
            imm, seen = [], 0
            for v in bits(s):
                if seen >> v & 1:
                    continue
                seen |= self.cluster[v]
                if not any(self.strict[w] >> v & 1 for w in bits(s)):
                    imm.append(self.cluster[v])
            out.append(tuple(imm))
        return tuple(out)

    def cluster_type(self, u: int):
        return popcount(self.cluster[u]) if self.reflexive(u) else IRR

    def type_of(self, u: int) -> FrameType:
        return FrameType(self.cluster_type(u), len(self.immediate[u]))

    def roots(self) -> list[int]:
        return [u for u in range(self.n) if self.down[u] & ~self.cluster[u] == 0]

    def is_rooted(self) -> bool:
        return any(self.up[u] | self.cluster[u] == self.full for u in range(self.n))

    def generated(self, u: int) -> tuple["Model", list[int]]:
        """Submodel generated by u, plus the list of old indices."""
        keep = bits(self.up[u] | (1 << u))
        return self.restrict(keep), keep

    def restrict(self, keep: Sequence[int]) -> "Model":
        idx = {v: i for i, v in enumerate(keep)}

        def remap(m: int) -> int:
            r = 0
            for v in bits(m):
                if v in idx:
                    r |= 1 << idx[v]
            return r
        up = [remap(self.up[v]) for v in keep]
        atoms = {a: remap(m) for a, m in self.atoms.items()}
        return Model(up, atoms, self.params, self.vars, [self.ids[v] for v in keep], check=False)

    # ------------------------------------------------------------ statistics

    @cached_property
    def _height(self) -> tuple[int, ...]:
        h: dict[int, int] = {}
        order = sorted(range(self.n), key=lambda u: popcount(self.strict[u]))
        for u in order:
            h[u] = 1 + max((h[v] for v in bits(self.strict[u])), default=0)
        return tuple(h[u] for u in range(self.n))

    def depth(self) -> int:
        return max(self._height, default=0)

    def branching(self) -> int:
        return max((len(i) for i in self.immediate), default=0)

    def max_cluster(self) -> int:
        return max((popcount(c) for c in self.clusters), default=0)

    def width(self) -> int:
        """Largest antichain of clusters inside a rooted generated subframe."""
        best = 0
        for u in range(self.n):
            cl = [c for c in self.clusters if c & self.strict[u]]
            best = max(best, max(1, _max_antichain(self, cl)))
        return best

    # ------------------------------------------------------------ semantics

    def ext(self, f: Formula, memo: dict | None = None, vmasks: Mapping[str, int] | None = None) -> int:
        """Bitmask of the points satisfying f."""
        if memo is None:
            memo = {}
        stack = [f]
        up, full, n = self.up, self.full, self.n
        while stack:
            g = stack[-1]
            if g in memo:
                stack.pop()
                continue
            op = g.op
            if op == IMP:
                a, b = memo.get(g.a), memo.get(g.b)
                if a is None:
                    stack.append(g.a)
                    continue
                if b is None:
                    stack.append(g.b)
                    continue
                memo[g] = (full & ~a) | b
            elif op == BOX:
                a = memo.get(g.a)
                if a is None:
                    stack.append(g.a)
                    continue
                bad = full & ~a
                m = 0
                for u in range(n):
                    if not up[u] & bad:
                        m |= 1 << u
                memo[g] = m
            elif op == BOT:
                memo[g] = 0
            elif op == VAR and vmasks is not None and g.name in vmasks:
                memo[g] = vmasks[g.name]
            else:
                m = self.atoms.get(g)
                if m is None:
                    raise ClxError(f"unknown atom {g}")
                memo[g] = m
            stack.pop()
        return memo[f]

    def sat(self, u: int, f: Formula, memo: dict | None = None) -> bool:
        return bool(self.ext(f, memo) >> u & 1)

    def valid(self, f: Formula, memo: dict | None = None) -> bool:
        return self.ext(f, memo) == self.full

    def params_at(self, u: int, P: Iterable[str] | None = None) -> frozenset[str]:
        P = self.params if P is None else P
        return frozenset(p for p in P if self.atoms.get(Par(p), 0) >> u & 1)

    def true_atoms(self, u: int) -> list[Formula]:
        return [a for a, m in sorted(self.atoms.items(), key=lambda t: (t[0].op, t[0].name)) if m >> u & 1]

    # ------------------------------------------------------------ equality

    def key(self):
        return (self.up, tuple(sorted(((a.op, a.name), m) for a, m in self.atoms.items())))

    def __eq__(self, other) -> bool:
        return isinstance(other, Model) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Model(n={self.n}, params={self.params}, vars={self.vars})"


def close(up: Sequence[int]) -> list[int]:
    """Transitive closure; a point on a cycle becomes reflexive."""
    up = list(up)
    n = len(up)
    for k in range(n):
        kb = 1 << k
        uk = up[k]
        for i in range(n):
            if up[i] & kb:
                up[i] |= uk
    return up


def _max_antichain(m: Model, cls: list[int]) -> int:
    # Dilworth: antichain = |clusters| - maximum matching in the strict order
    k = len(cls)
    reps = [m.rep(c) for c in cls]
    adj = [[j for j in range(k) if m.strict[reps[i]] >> reps[j] & 1] for i in range(k)]
    match = [-1] * k

    def aug(i, seen):
        for j in adj[i]:
            if not seen[j]:
                seen[j] = True
                if match[j] < 0 or aug(match[j], seen):
                    match[j] = i
                    return True
        return False
    size = sum(aug(i, [False] * k) for i in range(k))
    return k - size


# ---------------------------------------------------------------- json

def load(doc) -> Model:
    if isinstance(doc, str):
        doc = json.loads(doc)
    params = list(doc.get("params", []))
    vars_ = list(doc.get("vars", []))
    pts = doc.get("points", [])
    ids = [str(p["id"]) for p in pts]
    if len(set(ids)) != len(ids):
        raise ClxError("duplicate point id")
    index = {p: i for i, p in enumerate(ids)}
    atoms: dict[Formula, int] = {Par(p): 0 for p in params}
    atoms.update({Var(x): 0 for x in vars_})

    def atom_of(name: str) -> Formula:
        a = Par(name[1:]) if name.startswith("$") else (Par(name) if name in params else Var(name))
        if a not in atoms:
            raise ClxError(f"atom {name!r} is not declared")
        return a

    refl = []
    for i, p in enumerate(pts):
        r = p.get("reflexive", False)
        if not isinstance(r, bool):
            raise ClxError(f"point {ids[i]!r}: 'reflexive' must be boolean")
        if r:
            refl.append(i)
        for name in p.get("true_atoms", []):
            atoms[atom_of(name)] |= 1 << i
        for name, v in p.get("atoms", {}).items():
            if not isinstance(v, bool):
                raise ClxError(f"point {ids[i]!r}: value of {name!r} is not boolean")
            if v:
                atoms[atom_of(name)] |= 1 << i
    edges = []
    for e in doc.get("edges", []):
        if len(e) != 2 or e[0] not in index or e[1] not in index:
            raise ClxError(f"dangling edge {e!r}")
        edges.append((index[e[0]], index[e[1]]))
    return Model.from_edges(len(ids), edges, refl, atoms, params=params, vars=vars_, ids=ids)


def save(m: Model) -> dict:
    pts = []
    for u in range(m.n):
        ta = [("$" + a.name if a.op == PAR else a.name) for a in m.true_atoms(u)]
        pts.append({"id": m.ids[u], "reflexive": m.reflexive(u), "true_atoms": ta})
    edges = [[m.ids[u], m.ids[v]] for u in range(m.n) for v in bits(m.up[u]) if u != v]
    return {"params": list(m.params), "vars": list(m.vars), "points": pts, "edges": edges}


# ---------------------------------------------------------------- operations

def sat(m: Model, u: int, f: Formula) -> bool:
    return m.sat(u, f)


def type_of(m: Model, u: int) -> FrameType:
    return m.type_of(u)


def transform(m: Model, sigma: Substitution) -> Model:
    """The model sigma(W): x holds at u iff sigma(x) holds at u in W."""
    memo: dict = {}
    atoms = dict(m.atoms)
    for x in m.vars:
        atoms[Var(x)] = m.ext(apply(sigma, Var(x)), memo)
    return m.with_atoms(atoms)


def rule_holds(m: Model, rule: Rule, memo: dict | None = None) -> bool:
    """Validity of a rule instance under the model's own valuation."""
    memo = {} if memo is None else memo
    if any(m.ext(f, memo) != m.full for f in rule.premises):
        return True
    return any(m.ext(f, memo) == m.full for f in rule.conclusions)


def _pattern(i: int, total: int) -> int:
    """Integer whose bit v is bit i of v, for v < 2**total."""
    block = ((1 << (1 << i)) - 1) << (1 << i)
    period = (1 << (1 << (i + 1))) - 1
    return ((1 << (1 << total)) - 1) // period * block


def _sliced(m: Model, fs: Sequence[Formula], xs: Sequence[str]) -> list[int]:
    """Global truth of each formula, bit-sliced over all variable valuations.

    Valuation index v puts x_j at point u iff bit j*n+u of v is set.  The
    result for f has bit v set iff f is valid in m under valuation v.
    """
    total = len(xs) * m.n
    ALL = (1 << (1 << total)) - 1
    idx = {x: j for j, x in enumerate(xs)}
    memo: dict = {}

    def go(g: Formula) -> list[int]:
        r = memo.get(g)
        if r is not None:
            return r
        if g.op == VAR and g.name in idx:
            j = idx[g.name]
            r = [_pattern(j * m.n + u, total) for u in range(m.n)]
        elif g.op in (VAR, PAR):
            am = m.atoms.get(g)
            if am is None:
                raise ClxError(f"unknown atom {g}")
            r = [ALL if am >> u & 1 else 0 for u in range(m.n)]
        elif g.op == BOT:
            r = [0] * m.n
        elif g.op == IMP:
            a, b = go(g.a), go(g.b)
            r = [(ALL ^ a[u]) | b[u] for u in range(m.n)]
        else:
            a = go(g.a)
            r = []
            for u in range(m.n):
                acc = ALL
                for v in bits(m.up[u]):
                    acc &= a[v]
                r.append(acc)
        memo[g] = r
        return r

    out = []
    for f in fs:
        acc = ALL
        for t in go(f):
            acc &= t
        out.append(acc)
    return out


def _rule_failures(m: Model, rule: Rule, max_vars: int, max_bits: int) -> tuple[int, list[str]]:
    xs = variables(rule.formulas())
    if len(xs) > max_vars or len(xs) * m.n > max_bits:
        raise ResourceCap(f"rule_valid: {len(xs)} variables on {m.n} points exceeds the cap")
    pm = set(parameters(rule.formulas())) - set(m.params)
    if pm:
        raise ClxError(f"unknown parameters {sorted(pm)}")
    total = len(xs) * m.n
    ALL = (1 << (1 << total)) - 1
    gp = _sliced(m, rule.premises, xs)
    gc = _sliced(m, rule.conclusions, xs)
    bad = ALL
    for g in gp:
        bad &= g
    for g in gc:
        bad &= ALL ^ g
    return bad, xs


def rule_valid(m: Model, rule: Rule, max_vars: int = 6, max_bits: int = 22) -> bool:
    """Validity in the underlying parametric frame: every variable valuation."""
    return _rule_failures(m, rule, max_vars, max_bits)[0] == 0


def counter_valuation(m: Model, rule: Rule, max_bits: int = 22) -> dict[str, int] | None:
    """A variable valuation refuting the rule in the frame, if one exists."""
    bad, xs = _rule_failures(m, rule, 64, max_bits)
    if not bad:
        return None
    v = (bad & -bad).bit_length() - 1
    full = m.full
    return {x: (v >> (j * m.n)) & full for j, x in enumerate(xs)}


def up_closure(m: Model, X: Iterable[int]) -> int:
    r = 0
    for x in X:
        r |= m.up[x] | (1 << x)
    return r


def find_tp(m: Model, X: Iterable[int], spec, P: Iterable[str] | None = None) -> list[int] | None:
    """Tight predecessor of X.

    `spec` is ("irr", e) or ("refl", E) with e a set of true parameters and E
    a collection of such sets.  Parameters outside P (default: all) are
    ignored.  Returns sorted points or None.
    """
    P = m.params if P is None else tuple(P)
    Xup = up_closure(m, X)
    kind, e = spec
    if kind == "irr":
        e = frozenset(e)
        for u in range(m.n):
            if m.up[u] == Xup and m.params_at(u, P) == e:
                return [u]
        return None
    E = {frozenset(x) for x in e}
    for c in m.clusters:
        u0 = m.rep(c)
        if not m.reflexive(u0):
            continue
        if m.up[u0] == Xup | c and not (c & Xup):
            lab = [m.params_at(v, P) for v in bits(c)]
            if len(lab) == len(E) and set(lab) == E:
                return bits(c)
        elif m.up[u0] == Xup:
            chosen = []
            for f in sorted(E, key=sorted):
                cand = [v for v in bits(c) if m.params_at(v, P) == f]
                if not cand:
                    break
                chosen.append(cand[0])
            else:
                return sorted(chosen)
    return None


def find_tpp(m: Model, X: Iterable[int], spec, sigma: Iterable[Formula]) -> list[int] | None:
    """Tight pseudopredecessor of X with respect to the closed set sigma."""
    sigma = list(sigma)
    P = sorted({g.name for g in sigma if g.op == PAR})
    boxes = [g for g in sigma if g.op == BOX]
    memo: dict = {}
    X = list(X)
    # target[i]: every w in X satisfies boxdot psi_i
    target = []
    for g in boxes:
        bd = m.ext(g, memo) & m.ext(g.a, memo)
        target.append(all(bd >> w & 1 for w in X))
    box_ext = [m.ext(g, memo) for g in boxes]
    psi_ext = [m.ext(g.a, memo) for g in boxes]
    kind, e = spec
    if kind == "irr":
        e = frozenset(e)
        for u in range(m.n):
            if m.params_at(u, P) == e and all(bool(box_ext[i] >> u & 1) == target[i] for i in range(len(boxes))):
                return [u]
        return None
    E = sorted({frozenset(x) for x in e}, key=sorted)
    # candidates per e, deduplicated by their profile on the boxed formulas
    groups = []
    for f in E:
        prof: dict = {}
        for u in range(m.n):
            if m.params_at(u, P) == f:
                key = (tuple(box_ext[i] >> u & 1 for i in range(len(boxes))),
                       tuple(psi_ext[i] >> u & 1 for i in range(len(boxes))))
                prof.setdefault(key, u)
        if not prof:
            return None
        groups.append(list(prof.items()))
    for choice in product(*groups):
        allpsi = [all(k[1][i] for k, _ in choice) for i in range(len(boxes))]
        if all(bool(k[0][i]) == (target[i] and allpsi[i]) for k, _ in choice for i in range(len(boxes))):
            return sorted(u for _, u in choice)
    return None


def subsets_le0(points: Sequence[int], n) -> Iterable[tuple[int, ...]]:
    """Subsets X with |X| <=_0 n: empty only for n = 0, otherwise 1..n elements."""
    if n == 0:
        yield ()
        return
    top = len(points) if n == INF else min(int(n), len(points))
    for k in range(1, top + 1):
        yield from combinations(points, k)


def param_sets(P: Sequence[str]) -> list[frozenset[str]]:
    return [frozenset(p for p, b in zip(P, bs) if b) for bs in product((False, True), repeat=len(P))]


# ---------------------------------------------------------------- enumeration

def _canon(up: Sequence[int]) -> tuple:
    n = len(up)
    down = [sum(1 << u for u in range(n) if up[u] >> v & 1) for v in range(n)]
    col = [(up[u] >> u & 1, popcount(up[u]), popcount(down[u])) for u in range(n)]
    for _ in range(2):
        col = [(col[u], tuple(sorted(col[v] for v in bits(up[u]))), tuple(sorted(col[v] for v in bits(down[u]))))
               for u in range(n)]
    order = sorted(range(n), key=lambda u: col[u])
    classes: list[list[int]] = []
    for u in order:
        if classes and col[classes[-1][0]] == col[u]:
            classes[-1].append(u)
        else:
            classes.append([u])
    best = None
    for perms in product(*(permutations(c) for c in classes)):
        seq = [u for p in perms for u in p]
        pos = {u: i for i, u in enumerate(seq)}
        code = tuple(sum(1 << pos[v] for v in bits(up[u])) for u in seq)
        if best is None or code < best:
            best = code
    return best


_frame_cache: dict[int, list[tuple[int, ...]]] = {0: [()]}


def frames(n: int) -> list[tuple[int, ...]]:
    """All transitive frames on n points up to isomorphism, as closed up-masks."""
    if n in _frame_cache:
        return _frame_cache[n]
    out: dict[tuple, None] = {}
    w = n - 1
    for base in frames(n - 1):
        pts = range(w)
        for U in range(1 << w):
            # U must be upward closed
            if any(base[b] & ~U for b in bits(U)):
                continue
            for D in range(1 << w):
                # D downward closed: a R d, d in D implies a in D
                if any((base[a] >> d & 1) and not (D >> a & 1) for d in bits(D) for a in pts):
                    continue
                if any(base[a] & U != U for a in bits(D)):
                    continue
                for r in (0, 1):
                    if U & D and not r:
                        continue
                    up = [base[a] | ((1 << w) if D >> a & 1 else 0) | (U if D >> a & 1 else 0) for a in pts]
                    up.append(U | (r << w))
                    out.setdefault(_canon(up), None)
    res = [c for c in out]
    _frame_cache[n] = res
    return res


def frame_model(up: Sequence[int]) -> Model:
    return Model(up, {}, check=False)
