import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from oracles import _clusters, _pattern, sliced
from clxadm.admissibility import Verdict, admissible, pseudoextensible
from clxadm.formula import ClxError, Par, Var, iff, parse, rule_text, to_text, variables
from clxadm.kripke import Model, find_tp, frame_model, frames, param_sets, rule_holds, rule_valid
from clxadm.logic import is_linear, preset
from clxadm.rules import RuleSchemaId, basis, bot, ext_rule, has_finite_basis, pext_rules, vee
from clxadm.typecore import tautology

F0, F1 = frozenset(), frozenset({"p"})
FRAMES5 = [f for n in range(1, 6) for f in frames(n)]
FRAMES4 = [f for n in range(1, 5) for f in frames(n)]


def rid(family, pol, n, E, P=(), e0=None, inner="Ext"):
    return RuleSchemaId(family, pol, n, tuple(E), tuple(P), e0, inner)


# ---------------------------------------------------------------- shapes

def test_irreflexive_rule_text():
    r = ext_rule(rid("Ext", "irr", 2, [F0]))
    assert rule_text(r) == "[]y -> []x0 | []x1 / [.]y -> x0, [.]y -> x1"


def test_reflexive_rule_simplifies_to_fixpoint_form():
    r = ext_rule(rid("Ext", "refl", 2, [F0], e0=F0))
    assert [to_text(d) for d in r.conclusions] == ["[.]y -> x0", "[.]y -> x1"]
    assert tautology(preset("K4"), iff(r.premises[0], parse("[.](y <-> []y) -> []x0 | []x1")))


def test_two_parameter_reflexive_rule():
    r = ext_rule(rid("Ext", "refl", 2, [F0, F1], ("p",), F1))
    want = parse("$p & [.](y -> []($p -> y) | [](!$p -> y)) & [.]([]($p -> []y) | [](!$p -> []y) -> y)"
                 " -> []x0 | []x1")
    assert tautology(preset("K4"), iff(r.premises[0], want))
    assert [to_text(d) for d in r.conclusions] == ["[.]y -> x0", "[.]y -> x1"]


def test_exteq_conclusions_mention_other_witnesses():
    r = ext_rule(rid("ExtEq", "irr", 2, [F0], ("p",)))
    assert rule_text(r) == "!$p & []y -> []x0 | []x1 / [.](y & x1) -> x0, [.](y & x0) -> x1"


def test_vee_and_bot_variants():
    r = ext_rule(rid("ExtVee", "irr", 1, [F0]))
    assert rule_text(r) == "[]z | []([]y -> []x0) / z | []([.]y -> x0)"
    b = ext_rule(rid("ExtBot", "irr", 1, [F0]))
    assert rule_text(b) == "[]y -> []x0 / [.]y -> x0, false"
    base = ext_rule(rid("Ext", "irr", 1, [F0]))
    assert bot(base) == b and vee(base) == r


@pytest.mark.parametrize("bad", [
    rid("Nope", "irr", 1, [F0]),
    rid("Ext", "up", 1, [F0]),
    rid("Ext", "irr", -1, [F0]),
    rid("Ext", "irr", 1, []),
    rid("Ext", "irr", 1, [F0, F1], ("p",)),
    rid("Ext", "irr", 1, [frozenset({"q"})], ("p",)),
    rid("Ext", "refl", 1, [F0], ("p",), F1),
    rid("ExtEq", "refl", 1, [F0]),
    rid("ExtVee", "irr", 1, [F0], inner="PExt"),
])
def test_invalid_ids_rejected(bad):
    with pytest.raises(ClxError):
        ext_rule(bad)


def test_id_text_and_json():
    r = rid("Ext", "refl", 2, [F0, F1], ("p",), F1)
    assert str(r) == "Ext[◦,2,{¬p,p},p]"
    assert r.to_json()["E"] == [[], ["p"]]


# ---------------------------------------------------------------- Ext^= semantics

def _antichains(up, n):
    for X in combinations(range(len(up)), n):
        if not any(up[u] >> v & 1 or up[v] >> u & 1 for u, v in combinations(X, 2)):
            yield X


EQ_IDS = ([rid("ExtEq", "irr", n, [e], ("p",)) for n in (0, 1, 2) for e in (F0, F1)]
          + [rid("ExtEq", "refl", n, E, ("p",)) for n in (0, 2) for E in ([F0], [F1], [F0, F1])])


def test_exteq_valid_iff_antichains_have_tp():
    rng = random.Random(3)
    seen = set()
    for _ in range(120):
        up = rng.choice(FRAMES5)
        M = Model(up, {Par("p"): rng.randrange(1 << len(up))}, ["p"], [], check=False)
        for r in EQ_IDS:
            spec = ("irr", r.E[0]) if r.polarity == "irr" else ("refl", r.E)
            a = rule_valid(M, ext_rule(r))
            b = all(find_tp(M, X, spec) is not None for X in _antichains(up, r.n))
            assert a == b, (r, up, M.atoms)
            seen.add(a)
    assert seen == {True, False}


def test_reflexive_n1_rule_semantics():
    rng = random.Random(5)
    ids = [rid("Ext", "refl", 1, E, ("p",), e) for E in ([F0], [F1], [F0, F1]) for e in E]
    for _ in range(200):
        up = rng.choice(FRAMES5)
        M = Model(up, {Par("p"): rng.randrange(1 << len(up))}, ["p"], [], check=False)
        for r in ids:
            need = [w for w in range(M.n) if not M.reflexive(w)
                    or not any(M.params_at(v) == r.e0 for v in range(M.n) if up[w] >> v & 1 and up[v] >> w & 1)]
            want = all(find_tp(M, [w], ("refl", r.E)) is not None for w in need)
            assert rule_valid(M, ext_rule(r)) == want


# ---------------------------------------------------------------- side-variable variant

def _vee_refuted(up, rule):
    """Refuted iff for some w and valuation: the premises hold on every upset
    containing w and each conclusion fails somewhere above w."""
    n = len(up)
    atoms = [Var(x) for x in variables(rule.formulas())]
    total = n * len(atoms)
    ALL = (1 << (1 << total)) - 1
    base = {"__all__": ALL}
    for k, a in enumerate(atoms):
        base[a] = [_pattern(k * n + u, total) for u in range(n)]
    memo = {}
    G = [sliced(up, g, base, memo) for g in rule.premises]
    D = [sliced(up, d, base, memo) for d in rule.conclusions]
    for w in range(n):
        dom = 0
        for u in range(n):
            if up[u] >> w & 1:
                dom |= up[u]
        ok = ALL
        for g in G:
            for v in range(n):
                if dom >> v & 1:
                    ok &= g[v]
        for d in D:
            fail = 0
            for v in range(n):
                if up[w] >> v & 1:
                    fail |= ALL ^ d[v]
            ok &= fail
        if ok:
            return True
    return False


def _directed(up):
    finals = [c for c in _clusters(up)
              if not any(up[c[0]] >> v & 1 and not up[v] >> c[0] & 1 for v in range(len(up)))]
    return all(sum(up[u] >> c[0] & 1 for c in finals) <= 1 for u in range(len(up)))


@pytest.mark.parametrize("r", [rid("Ext", "irr", 0, [F0]), rid("Ext", "irr", 1, [F0]),
                               rid("Ext", "refl", 1, [F0], e0=F0), rid("Ext", "irr", 2, [F0])],
                         ids=str)
def test_vee_rule_frame_semantics(r):
    base = ext_rule(r)
    rv = vee(base)
    kinds = set()
    for up in FRAMES4:
        ok = rule_valid(frame_model(up), rv)
        assert ok != _vee_refuted(up, base), up
        kinds.add((_directed(up), ok))
    assert {d for d, _ in kinds} == {True, False}


# ---------------------------------------------------------------- bases

@pytest.mark.parametrize("name,kind,cap,params", [
    ("S5", "mc", None, ["p"]),
    ("S4.3", "mc", None, ["p"]),
    ("K4.3", "sc", None, []),
    ("K4", "mc", 2, []),
    ("K4", "indep", 2, []),
    ("S4", "indep", 2, []),
    ("GL", "mc", 1, ["p"]),
    ("GL", "indep-sc", 2, []),
    ("K4", "sc", 1, []),
])
def test_basis_rules_admissible(name, kind, cap, params):
    L = preset(name, params)
    rows = list(basis(L, kind, cap))
    assert rows
    for r, rule in rows:
        assert admissible(L, rule, "a").verdict is Verdict.ADMISSIBLE, r


def test_basis_examples():
    s5 = list(basis(preset("S5", ["p"])))
    assert len(s5) == 4 and all(r.n == 0 for r, _ in s5)
    k43 = [r for r, _ in basis(preset("K4.3", []), "sc")]
    assert {r.n for r in k43} == {0, 1}
    assert all(r.family == "ExtBot" for r in k43 if r.n == 0)
    k4 = [r for r, _ in basis(preset("K4"), "indep", 3)]
    assert sorted((r.n, r.polarity) for r in k4) == sorted((n, p) for n in range(4) for p in ("irr", "refl"))
    assert all(r.family == "ExtEq" for r in k4 if r.n != 1 or r.polarity == "irr")
    assert [r.polarity for r, _ in basis(preset("S4"), "indep", 2)] == ["refl", "refl"]


def test_basis_is_deterministic_and_rejects_unknown_kind():
    L = preset("K4", ["p"])
    assert [str(r) for r, _ in basis(L, "mc", 2)] == [str(r) for r, _ in basis(L, "mc", 2)]
    with pytest.raises(ClxError):
        list(basis(L, "fancy", 1))
    with pytest.raises(ClxError):
        list(basis(preset("S4.3"), "indep-sc", 1))


def test_linear_single_conclusion_uses_bot_variant():
    L = preset("S4.3", ["p"])
    assert is_linear(L)
    fams = {r.family for r, _ in basis(L, "sc")}
    assert "ExtVee" not in fams and "ExtBot" in fams


def test_has_finite_basis():
    assert has_finite_basis(preset("S4.3", ["p"]))
    assert not has_finite_basis(preset("K4", ["p"]))
    assert not has_finite_basis(preset("S4.3"))
    assert has_finite_basis(preset("Form"))


# ---------------------------------------------------------------- PExt

def test_pext_without_boxes_uses_parameters_only():
    for name in ("K4", "S4", "GL", "D4", "S5"):
        rs = pext_rules(preset(name, ["p"]), [parse("$p | !$p")])
        assert rs
        assert all(not variables(r.formulas()) for r in rs)


@pytest.mark.parametrize("nb", [0, 1, 2])
@pytest.mark.parametrize("params", [(), ("p",)])
def test_pext_counts_for_irreflexive_bases(nb, params):
    # GL: one <irr,0> rule per e, plus one <irr,inf> rule per nonempty B-.
    # GL.3: the <irr,1> rules cover every split with a single set.
    sigma = [parse(f"[]x{i}") for i in range(nb)] + [Par(p) for p in params]
    per_e = 2 ** len(params)
    assert len(pext_rules(preset("GL", list(params)), sigma)) == per_e * 2 ** nb
    assert len(pext_rules(preset("GL.3", list(params)), sigma)) == per_e * (1 + 2 ** nb)
    assert len(pext_rules(preset("Verum", list(params)), sigma)) == per_e


def test_pext_cap():
    with pytest.raises(ClxError):
        pext_rules(preset("K4"), [parse("[]a & []b & []c & []d")])


SIGMAS = [parse(s, ["p"]) for s in ("[]x", "$p & []x", "[](x -> $p)", "[]x | []!x", "[][]x")]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["K4", "S4", "GL", "D4", "K4.1", "S4.3", "K4Grz"]), st.sampled_from(SIGMAS),
       st.sampled_from(FRAMES4), st.integers(0, 15), st.integers(0, 15))
def test_pext_validity_is_pseudoextensibility(name, phi, up, pv, xv):
    n = len(up)
    M = Model(up, {Par("p"): pv % (1 << n), Var("x"): xv % (1 << n)}, ["p"], ["x"], check=False)
    L = preset(name, ["p"])
    assert pseudoextensible(L, M, [phi]) == all(rule_holds(M, r) for r in pext_rules(L, [phi]))
