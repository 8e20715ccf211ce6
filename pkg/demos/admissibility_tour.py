#!/usr/bin/env python3
"""A short walk through admissibility in a few transitive modal logics.

Run with `python3 demos/admissibility_tour.py`.  Every claim printed here is
computed, nothing is hard-coded.
"""
from clxadm.admissibility import admissible, check_certificate, derivable, unification_type
from clxadm.formula import apply, parse_rule, rule_text, to_text
from clxadm.logic import base, is_linear, preset, sort_key
from clxadm.rules import basis
from clxadm.typecore import tautology


def show(name, text, params=()):
    L = preset(name, list(params))
    R = parse_rule(text, list(params))
    d = admissible(L, R)
    print(f"{name:6} {rule_text(R, True)}")
    print(f"       verdict: {d.verdict}")
    if d.admissible:
        print(f"       derivable: {'yes' if derivable(L, R) else 'no'}")
    elif d.unifier is not None:
        # the witness: a substitution making every premise a theorem and no conclusion one
        for x, v in sorted(d.unifier.map.items()):
            print(f"       {x} := {to_text(v, True)}")
        assert all(tautology(L, apply(d.unifier, g)) for g in R.premises)
        ok = check_certificate(L, R, d.model)
        print(f"       refuting model: {d.model.n} points, certificate {'checks' if ok else 'FAILS'}")
    print()


print("The extension rule for one irreflexive tight predecessor.\n")
for name in ("K4", "GL", "S4"):
    show(name, "[]y -> []x / [.]y -> x")

print("The disjunction property for boxed formulas.\n")
for name in ("K4", "S4", "S4.3"):
    show(name, "[]x0 | []x1 / x0, x1")

print("Parameters behave like constants: excluded middle cannot be split.\n")
show("K4", "$p | !$p / $p", ["p"])

print("Structure behind the verdicts.\n")
for name in ("K4", "S4.3", "GL"):
    L = preset(name)
    ts = ",".join(t.text(True) for t in sorted(base(L), key=sort_key))
    print(f"{name:6} base {{{ts}}}  linear: {is_linear(L)}  unification: {unification_type(L)}")
print()

print("An independent basis of S4.3 admissible rules with one parameter:\n")
for rid, r in basis(preset("S4.3", ["p"]), "indep"):
    print(f"  {rid}")
    print(f"      {rule_text(r, True)}")
