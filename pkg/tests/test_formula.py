import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import formulas
from clxadm.formula import (FALSE, TRUE, ParseError, Par, Rule, Substitution, Var, apply, atoms, box, boxdot,
                            classical_value, compose, conj, imp, neg, parameters, parse, parse_rule, rule_text,
                            simplify, stats, subformulas, to_text, variables)
from clxadm.kripke import Model


@given(formulas())
def test_print_parse_roundtrip(f):
    assert parse(to_text(f)) is f


@given(formulas())
def test_unicode_printing_has_no_ascii_modalities(f):
    u = to_text(f, unicode=True)
    assert "[]" not in u and "<>" not in u


def test_hash_consing_shares_nodes():
    assert parse("[]x -> x") is imp(box(Var("x")), Var("x"))
    assert parse("x") is not parse("$x")


def test_dollar_and_declared_parameters():
    f = parse("$p & []y")
    assert parameters(f) == ["p"] and variables(f) == ["y"]
    assert parse("p & []y", ["p"]) is f


def test_boxdot_expansion():
    assert parse("[.]y -> x") is imp(conj(Var("y"), box(Var("y"))), Var("x"))
    assert boxdot(Var("y")) is conj(Var("y"), box(Var("y")))


def test_precedence_and_associativity():
    assert parse("x -> y -> x") is imp(Var("x"), imp(Var("y"), Var("x")))
    assert parse("!x & y | x") is parse("((!x) & y) | x")
    assert parse("[]x -> x") is parse("([]x) -> x")


@pytest.mark.parametrize("bad, pos", [("[]x ->", 6), ("x & & y", 4), ("(x", 2), ("x y", 2), ("$", 1)])
def test_parse_errors_carry_positions(bad, pos):
    with pytest.raises(ParseError) as ei:
        parse(bad)
    assert ei.value.pos == pos


def test_rules():
    r = parse_rule("[]y -> []x / [.]y -> x")
    assert len(r.premises) == 1 and len(r.conclusions) == 1
    assert parse_rule(" / ").premises == () and parse_rule("x /").conclusions == ()
    assert parse_rule(rule_text(r)) == r
    assert Rule([Var("x"), Var("x")], []).premises == (Var("x"),)
    with pytest.raises(ParseError):
        parse_rule("x / y / z")


@given(formulas(), formulas(), formulas(), formulas())
def test_compose_is_sequential_application(f, a, b, c):
    s = Substitution({"x": a, "y": b})
    t = Substitution({"y": c})
    assert apply(compose(s, t), f) is apply(s, apply(t, f))


@given(formulas(), formulas())
def test_substitution_fixes_parameters(f, a):
    s = Substitution({"x": a})
    assert parameters(apply(s, Par("p"))) == ["p"]
    assert apply(Substitution(), f) is f
    with pytest.raises(Exception):
        Substitution({Par("p"): a})


@given(formulas(max_leaves=8), st.data())
def test_simplify_preserves_truth(f, data):
    from strategies import models
    M = data.draw(models())
    assert M.ext(simplify(f)) == M.ext(f)


def test_subformulas_closed_and_stats():
    g = [parse("[]($p -> x)"), parse("[]x")]
    sub = subformulas(g)
    for h in sub:
        if h.op == "imp":
            assert h.a in sub and h.b in sub
        if h.op == "box":
            assert h.a in sub
    st_ = stats(g, [parse("x")])
    assert st_.b == 2 and st_.delta == 1
    assert set(atoms(g)) == {Par("p"), Var("x")}


def test_classical_value_treats_boxes_as_letters():
    f = parse("[]x -> x")
    assert classical_value(f, {box(Var("x")): False, Var("x"): False})
    assert not classical_value(f, {box(Var("x")): True, Var("x"): False})
    assert TRUE is imp(FALSE, FALSE) and neg(FALSE) is TRUE
