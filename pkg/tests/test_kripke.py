import json
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import formulas, models
from clxadm.formula import ClxError, Par, Rule, Substitution, Var, apply, parse
from clxadm.kripke import (IRR, FrameType, Model, bits, counter_valuation, find_tp, frame_model, frames, load,
                           rule_holds, rule_valid, save, transform)


def naive_sat(M, u, f):
    if f.op in ("var", "par"):
        return bool(M.atoms.get(f, 0) >> u & 1)
    if f.op == "bot":
        return False
    if f.op == "imp":
        return not naive_sat(M, u, f.a) or naive_sat(M, u, f.b)
    return all(naive_sat(M, v, f.a) for v in range(M.n) if M.up[u] >> v & 1)


def test_frame_counts_match_known_sequence():
    # unlabeled transitive relations on n points
    assert [len(frames(n)) for n in range(1, 6)] == [2, 8, 39, 242, 1895]


@given(models(), formulas())
def test_ext_agrees_with_pointwise_semantics(M, f):
    ext = M.ext(f)
    assert all(bool(ext >> u & 1) == naive_sat(M, u, f) for u in range(M.n))


@given(models(), formulas(), formulas(), formulas())
def test_transform_is_substitution(M, f, a, b):
    s = Substitution({"x": a, "y": b})
    assert transform(M, s).ext(f) == M.ext(apply(s, f))


@given(models(), formulas(), st.data())
def test_generated_submodels_preserve_truth(M, f, data):
    u = data.draw(st.integers(0, M.n - 1))
    G, keep = M.generated(u)
    eg, em = G.ext(f), M.ext(f)
    assert all(bool(eg >> i & 1) == bool(em >> v & 1) for i, v in enumerate(keep))


def _naive_rule_valid(M, rule):
    xs = sorted({v.name for g in rule.formulas() for v in _vars(g)})
    for masks in product(range(1 << M.n), repeat=len(xs)):
        N = M.with_atoms(dict(M.atoms) | {Var(x): m for x, m in zip(xs, masks)})
        if not rule_holds(N, rule):
            return False
    return True


def _vars(f):
    from clxadm.formula import atoms
    return [a for a in atoms([f]) if a.op == "var"]


@settings(max_examples=60)
@given(models(max_points=3), formulas(max_leaves=6), formulas(max_leaves=6))
def test_bit_sliced_rule_validity_matches_enumeration(M, g, d):
    r = Rule([g], [d])
    assert rule_valid(M, r) == _naive_rule_valid(M, r)
    cv = counter_valuation(M, r)
    if cv is not None:
        N = M.with_atoms(dict(M.atoms) | {Var(x): m for x, m in cv.items()})
        assert not rule_holds(N, r)


def test_loader_closes_and_marks_clusters():
    m = load({"points": [{"id": "u"}, {"id": "v"}, {"id": "w"}], "edges": [["u", "v"], ["v", "w"]]})
    assert m.up[0] >> 2 & 1
    c = load({"points": [{"id": "u"}, {"id": "v"}], "edges": [["u", "v"], ["v", "u"]]})
    assert c.clusters == [0b11] and c.reflexive(0) and c.type_of(0) == FrameType(2, 0)
    one = load({"points": [{"id": "u"}]})
    assert one.n == 1 and one.up == (0,) and one.type_of(0) == FrameType(IRR, 0)


@given(models())
def test_save_load_roundtrip(M):
    doc = save(M)
    assert save(load(json.loads(json.dumps(doc)))) == doc
    N = load(doc)
    assert N.up == M.up and N.atoms == M.atoms


@pytest.mark.parametrize("doc", [
    {"points": [{"id": "u"}], "edges": [["u", "v"]]},
    {"vars": ["x"], "points": [{"id": "u", "atoms": {"x": 1}}]},
    {"points": [{"id": "u"}, {"id": "u"}]},
    {"points": [{"id": "u", "true_atoms": ["z"]}]},
])
def test_loader_rejects_bad_documents(doc):
    with pytest.raises(ClxError):
        load(doc)


def test_types_and_statistics():
    # root -> two incomparable reflexive points, one of them a 2-cluster
    m = Model.from_edges(4, [(0, 1), (0, 2), (2, 3), (3, 2)], reflexive=[1, 2, 3])
    assert m.type_of(0) == FrameType(IRR, 2)
    assert m.type_of(2) == FrameType(2, 0)
    assert m.depth() == 2 and m.branching() == 2 and m.max_cluster() == 2 and m.roots() == [0]


def test_find_tp():
    p = Par("p")
    m = Model.from_edges(3, [(0, 2), (1, 2)], reflexive=[1], atoms={p: 0b010}, params=["p"])
    assert find_tp(m, [2], ("irr", set())) == [0]
    assert find_tp(m, [2], ("refl", [{"p"}])) == [1]
    assert find_tp(m, [2], ("refl", [set()])) is None
