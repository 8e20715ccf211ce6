#!/usr/bin/env python3
"""Projective formulas, approximations and unifiers in K4.

The formula ([]x | []!x) -> []y | []!y is not projective.  Its projective
approximation splits it into four projective pieces, one per way of
choosing y in terms of x, and the rule from the formula to all four pieces
is admissible while dropping any one of them breaks admissibility.
"""
from clxadm.admissibility import admissible, unify
from clxadm.formula import Rule, apply, parse, to_text
from clxadm.logic import preset
from clxadm.projective import projective, projective_approximation
from clxadm.typecore import consequence, tautology

K4 = preset("K4")
phi = parse("([]x | []!x) -> []y | []!y")
print("phi =", to_text(phi, True))
print("projective:", bool(projective(K4, phi, unifier=False)))

pieces = [m.formula for m in projective_approximation(K4, phi)]
readable = {f"y := {g}": parse(f"([.]x | [.]!x) -> (y <-> {g})") for g in ("false", "true", "x", "!x")}


def same(a, b):
    return consequence(K4, [a], b) and consequence(K4, [b], a)


print(f"\napproximation ({len(pieces)} members), each equivalent to a readable form:")
for f in pieces:
    name = next(k for k, g in readable.items() if same(f, g))
    print(f"  {to_text(readable[name], True):32} projective: {bool(projective(K4, f, unifier=False))}")

print("\nphi |~ all members:", admissible(K4, Rule([phi], pieces)).verdict)
for i, f in enumerate(pieces):
    rest = pieces[:i] + pieces[i + 1:]
    print(f"  without member {i + 1}:", admissible(K4, Rule([phi], rest)).verdict)

us = unify(K4, [phi])
print(f"\ncomplete set of unifiers: {len(us)}, each verified to make phi a theorem")
for s in us:
    assert tautology(K4, apply(s, phi))
    print("  " + ", ".join(f"{x} := <{len(to_text(v))} chars>" for x, v in sorted(s.map.items())))
