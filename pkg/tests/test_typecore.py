import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_models, brute_consequence, random_formula, table1
from strategies import formulas
from clxadm.formula import Par, ResourceCap, Var, box, classical_value, parse, subformulas
from clxadm.kripke import frames
from clxadm.logic import is_l_frame, preset
from clxadm.typecore import (SigmaContext, consequence, countermodel, fmp_bounds, saturate, tautology,
                             within_bounds)

PRESETS = ["K4", "S4", "GL", "S4.3", "S5", "K4Grz", "D4", "K4.1", "GL.3", "K4B", "Triv", "Verum"]


@pytest.mark.parametrize("name, text, valid", [
    ("K4", "[]x -> [][]x", True),
    ("S4", "[]x -> x", True),
    ("K4", "[]x -> x", False),
    ("K4", "<>true", False),
    ("D4", "<>true", True),
    ("GL", "[]([]x -> x) -> []x", True),
    ("K4", "[]([]x -> x) -> []x", False),
    ("S4", "[]x | []!x", False),
    ("S5", "x -> []<>x", True),
    ("S4", "x -> []<>x", False),
    ("S4.3", "[]([.]x -> y) | []([.]y -> x)", True),
    ("S4", "[]([.]x -> y) | []([.]y -> x)", False),
    ("S4Grz", "[]([](x -> []x) -> x) -> x", True),
    ("S4", "[]([](x -> []x) -> x) -> x", False),
    ("Verum", "[]false", True),
    ("Form", "false", True),
])
def test_known_theorems(name, text, valid):
    assert tautology(preset(name), parse(text)) == valid


def test_global_consequence_is_not_local():
    K4 = preset("K4")
    assert consequence(K4, [parse("x")], parse("[]x"))
    assert not tautology(K4, parse("x -> []x"))


@pytest.mark.parametrize("seed", range(8))
def test_consequence_matches_brute_force(seed):
    rng = random.Random(seed)
    for _ in range(25):
        name = rng.choice(PRESETS)
        L = preset(name)
        phi = random_formula(rng, 3, vars=("x", "y"), params=("p",))
        gamma = [random_formula(rng, 2, vars=("x",), params=("p",))] if rng.random() < 0.4 else []
        verdict = consequence(L, gamma, phi)
        found = brute_consequence(lambda up: table1(name, up), gamma, phi, 3)
        if found is not None:
            assert not verdict
        if not verdict:
            M = countermodel(L, gamma, phi)
            assert is_l_frame(L, M) and all(M.valid(g) for g in gamma)
            assert not M.sat(M.roots()[0], phi)
            assert within_bounds(M, gamma, phi)


def _type_of(ctx, M, u):
    a = sum(1 << i for i, f in enumerate(ctx.atoms) if M.sat(u, f))
    b = sum(1 << i for i, f in enumerate(ctx.boxes) if M.sat(u, f))
    return a, b


@pytest.mark.parametrize("name", ["K4", "S4", "GL", "S4.3", "K4Grz", "D4"])
@pytest.mark.parametrize("text", ["[]x | []!x", "[](x -> []x) -> x", "<>x & <>!x", "[]($p -> x)"])
def test_realized_types_are_exactly_model_types(name, text):
    L = preset(name)
    ctx = SigmaContext([parse(text)])
    sat = saturate(L, ctx)
    got = {t[0] for t in sat.realized()}
    M, point_of = sat.materialize(sorted(sat.realized()))
    assert is_l_frame(L, M)
    for t, p in point_of.items():
        assert _type_of(ctx, M, p) == t[0]
    seen = set()
    atoms = list(ctx.atoms)
    for n in range(1, 4):
        for up in frames(n):
            if not table1(name, up):
                continue
            for m in all_models(up, atoms):
                seen.update(_type_of(ctx, m, u) for u in range(m.n))
    assert seen <= got


@given(formulas(max_leaves=10), st.integers(0, 7), st.integers(0, 15))
def test_type_evaluation_is_boolean_coherent(f, a, b):
    ctx = SigmaContext([f])
    a &= (1 << ctx.na) - 1
    b &= (1 << ctx.nb) - 1
    val = {x: bool(a >> i & 1) for i, x in enumerate(ctx.atoms)}
    val.update({x: bool(b >> i & 1) for i, x in enumerate(ctx.boxes)})
    for g in ctx.sigma:
        assert ctx.value(a, b, g) == classical_value(g, val)


def test_fmp_bounds_formula():
    bd = fmp_bounds([], parse("[]x -> x"))
    assert bd == {"b": 2, "size": 6, "depth": 3, "cluster": 2, "branching": 1}


def test_sigma_cap():
    big = parse(" & ".join(f"[]x{i}" for i in range(9)))
    with pytest.raises(ResourceCap):
        SigmaContext([big])
    with pytest.raises(ResourceCap):
        tautology(preset("K4"), parse("[]x -> [][]x"), cap=1)
