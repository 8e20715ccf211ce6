"""Cluster-extensible logics described by their exclusion basis.

A logic is a finite antichain `xcb` of extension conditions <C,n>.  A finite
frame belongs to the logic iff no point generates a subframe whose type lies
above a member of `xcb`.  Everything else (type, base, axioms, lattice
operations) is derived from that antichain.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable

from .formula import (FALSE, TRUE, ClxError, Formula, Var, box, boxdot, conj, conj_all, dia, diadot,
                      disj, disj_all, imp)
from .kripke import INF, IRR, FrameType, Model, cluster_name, n_name


@dataclass(frozen=True, order=True)
class ExtensionCondition(FrameType):
    """<C,n> where C may be (inf) and n may be inf."""

    @property
    def finite(self) -> bool:
        return self.cluster != INF and self.n != INF

    def __str__(self) -> str:
        return f"<{cluster_name(self.cluster)},{n_name(self.n)}>"


EC = ExtensionCondition


def _c_leq(c1, c2) -> bool:
    if c1 == IRR or c2 == IRR:
        return c1 == c2
    return c1 <= c2


def _n_leq(n1, n2) -> bool:
    if n1 == 0 or n2 == 0:
        return n1 == n2
    return n1 <= n2


def ec_leq(t, s) -> bool:
    """The product order: cluster types and <=_0 on successor counts."""
    return _c_leq(t.cluster, s.cluster) and _n_leq(t.n, s.n)


def _c_join(c1, c2):
    if (c1 == IRR) != (c2 == IRR):
        return None
    return max(c1, c2)


def _n_join(n1, n2):
    if (n1 == 0) != (n2 == 0):
        return None
    return max(n1, n2)


def ec_join(t, s):
    c, n = _c_join(t.cluster, s.cluster), _n_join(t.n, s.n)
    return None if c is None or n is None else EC(c, n)


def minimal(T: Iterable) -> frozenset:
    T = set(EC(t.cluster, t.n) for t in T)
    return frozenset(t for t in T if not any(s != t and ec_leq(s, t) for s in T))


def maximal(T: Iterable) -> frozenset:
    T = set(EC(t.cluster, t.n) for t in T)
    return frozenset(t for t in T if not any(s != t and ec_leq(t, s) for s in T))


def _grid(K: int, N: int) -> list[ExtensionCondition]:
    cs = [IRR, *range(1, K + 1), INF]
    ns = [0, *range(1, N + 1), INF]
    return [EC(c, n) for c, n in product(cs, ns)]


def canonical_antichain(T, bound: int = 8) -> frozenset:
    """The unique finite antichain with the same closure as T.

    T is either a finite collection of conditions or a predicate on finite
    conditions describing a (possibly infinite) set; in the latter case the
    closure rules for (inf) are applied assuming the set stabilises beyond
    `bound`.
    """
    if not callable(T):
        return maximal(T)
    fin = [t for t in _grid(bound, bound) if t.finite]
    down = {t for t in fin if any(ec_leq(t, s) and T(s) for s in fin)}

    def member(t) -> bool:
        return all(s in down for s in fin if ec_leq(s, t))

    return maximal(t for t in _grid(bound, bound) if member(t))


def sort_key(t) -> tuple:
    return (t.cluster != IRR, t.cluster, t.n)


@dataclass(frozen=True)
class LogicSpec:
    """A clx logic.  `params` is None for an infinite parameter supply."""

    name: str | None
    xcb: frozenset = field(default_factory=frozenset)
    params: tuple[str, ...] | None = None

    def __post_init__(self):
        xs = [EC(t.cluster, t.n) for t in self.xcb]
        for t in xs:
            if not t.finite:
                raise ClxError(f"exclusion basis member {t} is not finite")
            if t.cluster != IRR and t.cluster < 1:
                raise ClxError(f"bad cluster size in {t}")
        object.__setattr__(self, "xcb", minimal(xs))
        if self.params is not None:
            object.__setattr__(self, "params", tuple(sorted(set(self.params))))

    def __str__(self) -> str:
        return self.name or "{" + ", ".join(map(str, sorted(self.xcb, key=sort_key))) + "}"

    @property
    def finite_params(self) -> bool:
        return self.params is not None

    def with_params(self, params: Iterable[str] | None) -> "LogicSpec":
        return LogicSpec(self.name, self.xcb, None if params is None else tuple(params))

    def check_params(self, fs: Iterable[Formula]) -> None:
        from .formula import parameters
        if self.params is None:
            return
        extra = set(parameters(list(fs))) - set(self.params)
        if extra:
            raise ClxError(f"undeclared parameters {sorted(extra)} in finite parameter mode")

    def xcb_sorted(self) -> list[ExtensionCondition]:
        return sorted(self.xcb, key=sort_key)

    def to_json(self) -> dict:
        return {"name": self.name,
                "xcb": [{"cluster": "irr" if t.cluster == IRR else int(t.cluster), "n": int(t.n)}
                        for t in self.xcb_sorted()],
                "params": "infinite" if self.params is None else list(self.params)}


def tp_member(L: LogicSpec, t) -> bool:
    """Membership of a condition in tp(L); infinite conditions via closure."""
    return not any(ec_leq(x, t) for x in L.xcb)


def excluded(L: LogicSpec, t) -> bool:
    return not tp_member(L, t)


def base(L: LogicSpec) -> frozenset:
    """Maximal elements of tp(L), with (inf) components where the closure rules fire."""
    K = max([int(t.cluster) for t in L.xcb if t.cluster != IRR] + [0]) + 1
    N = max([int(t.n) for t in L.xcb] + [0]) + 1
    return maximal(t for t in _grid(K, N) if tp_member(L, t))


def has_type_frame(L: LogicSpec, t) -> bool:
    if not tp_member(L, t):
        return False
    if t.n == 0:
        return True
    return tp_member(L, EC(IRR, 0)) or tp_member(L, EC(1, 0))


def is_linear(L: LogicSpec) -> bool:
    return excluded(L, EC(IRR, 2)) and excluded(L, EC(1, 2))


def bounded_branching(L: LogicSpec) -> int | None:
    ns = [int(t.n) for t in L.xcb if t.n > 0]
    for k in range(0, max(ns, default=0) + 1):
        if excluded(L, EC(IRR, k + 1)) and excluded(L, EC(1, k + 1)):
            return k
    return None


def is_l_frame(L: LogicSpec, M: Model) -> bool:
    return all(tp_member(L, M.type_of(u)) for u in range(M.n))


def join(L1: LogicSpec, L2: LogicSpec) -> LogicSpec:
    """The smallest clx logic containing both: union of exclusion types."""
    return LogicSpec(None, minimal(L1.xcb | L2.xcb), L1.params)


def meet_clx(L1: LogicSpec, L2: LogicSpec) -> LogicSpec:
    """The largest clx logic contained in both: intersection of exclusion types."""
    js = [ec_join(a, b) for a in L1.xcb for b in L2.xcb]
    return LogicSpec(None, minimal(j for j in js if j is not None), L1.params)


def same_logic(L1: LogicSpec, L2: LogicSpec) -> bool:
    return L1.xcb == L2.xcb


# ---------------------------------------------------------------- presets

def _x(*specs: str) -> frozenset:
    """Decode the stacked notation, e.g. "irr/1,0/1" -> four conditions."""
    out = set()
    for s in specs:
        cs, ns = s.split(",")
        for c, n in product(cs.split("/"), ns.split("/")):
            out.add(EC(IRR if c == "irr" else (INF if c == "inf" else int(c)),
                       INF if n == "inf" else int(n)))
    return frozenset(out)


decode = _x

_PRESETS: dict[str, frozenset] = {
    "K4": frozenset(),
    "S4": _x("irr,0/1"),
    "K4Grz": _x("2,0/1"),
    "S4Grz": _x("irr/2,0/1"),
    "K4.3": _x("irr/1,2"),
    "S4.1.4": _x("irr,0/1", "2,1"),
    "K4B": _x("irr/1,1"),
    "S5": _x("irr,0/1", "1,1"),
    "GL": _x("1,0/1"),
    "GL.3": _x("1,0/1", "irr,2"),
    "S4.3": _x("irr,0/1", "1,2"),
    "Triv": _x("irr/2,0", "irr/1,1"),
    "Verum": _x("1,0", "irr/1,1"),
    "Form": _x("irr/1,0/1"),
    "D4": _x("irr,0"),
    "K4.1": _x("2,0"),
    "S4.1": _x("irr,0/1", "2,0"),
}

# base column of the extension-characteristics table, stacked notation decoded
TABLE_BASE: dict[str, frozenset] = {
    "K4": _x("irr/inf,0/inf"),
    "S4": _x("inf,0/inf"),
    "K4Grz": _x("irr/1,0/inf"),
    "S4Grz": _x("1,0/inf"),
    "K4.3": _x("irr/inf,0/1"),
    "S4.1.4": _x("inf,0", "1,inf"),
    "K4B": _x("irr/inf,0"),
    "S5": _x("inf,0"),
    "GL": _x("irr,0/inf"),
    "GL.3": _x("irr,0/1"),
    "S4.3": _x("inf,0/1"),
    "Triv": _x("1,0"),
    "Verum": _x("irr,0"),
    "Form": frozenset(),
    "D4": _x("inf,0", "irr/inf,inf"),
    "K4.1": _x("irr/1,0", "irr/inf,inf"),
    "S4.1": _x("1,0", "inf,inf"),
}

PRESET_NAMES = tuple(_PRESETS) + ("K4BB_k", "K4BC_k")

_PARAM_RE = re.compile(r"^(K4BB|K4BC)_?(\d+)$")


def preset(name: str, params: Iterable[str] | None = None) -> LogicSpec:
    if name in _PRESETS:
        xcb = _PRESETS[name]
    else:
        m = _PARAM_RE.match(name)
        if not m:
            raise ClxError(f"unknown logic {name!r}")
        k = int(m.group(2))
        if m.group(1) == "K4BB":
            xcb = _x(f"irr/1,{k + 1}")
        else:
            if k < 1:
                raise ClxError("K4BC_k needs k >= 1")
            xcb = _x(f"{k + 1},0/1")
    return LogicSpec(name, xcb, None if params is None else tuple(params))


def table_base(name: str) -> frozenset:
    if name in TABLE_BASE:
        return TABLE_BASE[name]
    m = _PARAM_RE.match(name)
    if not m:
        raise ClxError(f"unknown logic {name!r}")
    k = int(m.group(2))
    return _x(f"irr/inf,0/{k}") if m.group(1) == "K4BB" else _x(f"irr/{k},0/inf")


def from_json(doc) -> LogicSpec:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        xs = []
        for t in doc.get("xcb", []):
            c = t["cluster"]
            c = IRR if c in ("irr", "•", 0) else int(c)
            xs.append(EC(c, int(t["n"])))
        ps = doc.get("params", "infinite")
        ps = None if ps in ("infinite", None) else tuple(ps)
    except (KeyError, TypeError, ValueError) as ex:
        raise ClxError(f"malformed logic document: {ex}") from None
    return LogicSpec(doc.get("name"), frozenset(xs), ps)


def load_logic(source: str, params: Iterable[str] | None = None) -> LogicSpec:
    """A preset name or a path to a logic JSON document."""
    try:
        L = preset(source)
    except ClxError:
        try:
            with open(source) as fh:
                L = from_json(json.load(fh))
        except OSError:
            raise ClxError(f"unknown logic {source!r}") from None
    return L if params is None else L.with_params(params)


# ---------------------------------------------------------------- canonical axioms

def alpha_axiom(t) -> Formula:
    """The canonical axiom alpha_t, refuted exactly by frames with a point of type >= t."""
    t = EC(t.cluster, t.n)
    if not t.finite:
        raise ClxError(f"alpha_t needs a finite condition, got {t}")
    n = int(t.n)
    x = [Var(f"x{i}") for i in range(n)]
    if t.cluster == IRR:
        if n == 0:
            return dia(TRUE)
        if n == 1:
            y = Var("y")
            return imp(box(y), disj(y, box(FALSE)))
        ante = conj_all(box(disj(boxdot(x[i]), boxdot(x[j]))) for i in range(n) for j in range(i + 1, n))
        return imp(ante, disj_all(box(xi) for xi in x))
    k = int(t.cluster)
    y = [Var(f"y{e}") for e in range(k)]
    if n == 0:
        return disj_all(diadot(box(imp(conj_all(y[:e]), y[e]))) for e in range(k))
    parts = [disj(y[d], y[e]) for d in range(k) for e in range(d + 1, k)]
    parts += [imp(box(y[d]), y[e]) for d in range(k) for e in range(k)]
    parts += [disj(x[i], boxdot(x[j])) for i in range(n) for j in range(n) if i != j]
    parts += [conj(imp(box(x[i]), y[e]), disj(x[i], boxdot(y[e]))) for e in range(k) for i in range(n)]
    parts += [imp(conj(x[i], conj_all(y)), box(x[i])) for i in range(n)]
    beta = conj_all(parts)
    return imp(boxdot(beta), y[0])


def validates_alpha(M: Model, t) -> bool:
    return not any(ec_leq(t, M.type_of(u)) for u in range(M.n))


def axiomatize(L: LogicSpec) -> list[Formula]:
    return [alpha_axiom(t) for t in L.xcb_sorted()]
