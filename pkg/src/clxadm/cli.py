"""The `clx` command line.

Exit codes: 0 yes/valid/admissible, 1 no/invalid/not admissible,
2 usage or input error, 3 resource cap hit (undecided).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import kripke
from .admissibility import (Verdict, admissible, check_certificate, derivable, directed, pseudoextensible,
                            unification_type, unify)
from .formula import ClxError, ParseError, ResourceCap, parse, parse_rule, rule_text, to_text
from .logic import (LogicSpec, alpha_axiom, base, bounded_branching, ec_leq, from_json, is_l_frame, is_linear,
                    load_logic, sort_key)
from .projective import projective, projective_approximation, simplify_substitution
from .rules import basis, has_finite_basis, pext_rules
from .typecore import DEFAULT_CAP, consequence, countermodel, tautology

YES, NO, USAGE, CAP = 0, 1, 2, 3


class _Out:
    def __init__(self, fmt: str, unicode: bool):
        self.json = fmt == "json"
        self.unicode = unicode

    def f(self, fla) -> str:
        return to_text(fla, self.unicode)

    def r(self, rule) -> str:
        return rule_text(rule, self.unicode)

    def emit(self, doc: dict, lines: Sequence[str]) -> None:
        if self.json:
            print(json.dumps(doc, indent=2, ensure_ascii=False))
        else:
            for line in lines:
                print(line)


def _params(text: str | None):
    if text is None or text == "infinite":
        return None
    return [p.strip().lstrip("$") for p in text.split(",") if p.strip()]


def _logic(a) -> LogicSpec:
    return load_logic(a.logic, _params(a.params))


def _declared(L: LogicSpec) -> tuple[str, ...]:
    return L.params or ()


def _fla(L: LogicSpec, text: str):
    f = parse(text, _declared(L))
    L.check_params([f])
    return f


def _rule(L: LogicSpec, text: str):
    r = parse_rule(text, _declared(L))
    L.check_params(r.formulas())
    return r


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as ex:
        raise ClxError(f"cannot read {path}: {ex.strerror}") from None
    except json.JSONDecodeError as ex:
        raise ClxError(f"{path}: invalid JSON ({ex.msg} at line {ex.lineno})") from None


def _ecs(ts, unicode: bool) -> str:
    return "{" + ",".join(t.text(unicode) for t in sorted(ts, key=sort_key)) + "}"


# ---------------------------------------------------------------- commands

def cmd_taut(a, L, out):
    f = _fla(L, a.formula)
    ok = tautology(L, f, a.cap)
    out.emit({"logic": str(L), "formula": out.f(f), "valid": ok}, ["valid" if ok else "not valid"])
    return YES if ok else NO


def cmd_consequence(a, L, out):
    gamma = [_fla(L, g) for g in a.premise]
    f = _fla(L, a.formula)
    ok = consequence(L, gamma, f, a.cap)
    out.emit({"logic": str(L), "premises": [out.f(g) for g in gamma], "formula": out.f(f), "consequence": ok},
             ["follows" if ok else "does not follow"])
    return YES if ok else NO


def cmd_countermodel(a, L, out):
    gamma = [_fla(L, g) for g in a.premise]
    f = _fla(L, a.formula)
    M = countermodel(L, gamma, f, a.cap)
    if M is None:
        out.emit({"logic": str(L), "countermodel": None}, ["no countermodel: the formula follows"])
        return NO
    doc = kripke.save(M)
    if a.output:
        with open(a.output, "w") as fh:
            json.dump(doc, fh, indent=2)
    out.emit({"logic": str(L), "countermodel": doc},
             [f"countermodel with {M.n} points, depth {M.depth()}, root {M.ids[M.roots()[0]]}",
              json.dumps(doc, indent=2)])
    return YES


def cmd_frame_check(a, L, out):
    M = kripke.load(_read_json(a.model))
    ok = is_l_frame(L, M)
    bad = sorted({str(M.type_of(u)) for u in range(M.n)
                  if any(ec_leq(x, M.type_of(u)) for x in L.xcb)})
    out.emit({"logic": str(L), "frame": ok, "excluded_types": bad},
             [f"{'is' if ok else 'is not'} a {L}-frame"] + [f"  point type {t} is excluded" for t in bad])
    return YES if ok else NO


def cmd_logic_info(a, L, out):
    bb = bounded_branching(L)
    ut = unification_type(L)
    d = directed(L)
    fb = has_finite_basis(L)
    doc = dict(L.to_json(), base=[{"cluster": t.text(False), "text": t.text(True)}
                                  for t in sorted(base(L), key=sort_key)],
               linear=is_linear(L), bounded_branching=bb, unification_type=str(ut), directed=d, finite_basis=fb)
    ps = "infinite" if L.params is None else "{" + ",".join(L.params) + "}"
    out.emit(doc, [f"logic: {L}",
                   f"xcb: {_ecs(L.xcb, True)}",
                   f"base: {_ecs(base(L), True)}",
                   f"parameters: {ps}",
                   f"linear: {'yes' if is_linear(L) else 'no'}",
                   f"bounded branching: {'unbounded' if bb is None else bb}",
                   f"unification: {ut}",
                   f"directed: {'yes' if d else 'no'}",
                   f"finite basis: {'yes' if fb else 'no'}"])
    return YES


def cmd_axioms(a, L, out):
    rows = [(t, alpha_axiom(t)) for t in L.xcb_sorted()]
    out.emit({"logic": str(L), "axioms": [{"condition": str(t), "axiom": out.f(f)} for t, f in rows]},
             [f"{t.text(out.unicode)}: {out.f(f)}" for t, f in rows] or ["(no axioms beyond K4)"])
    return YES


def cmd_projective(a, L, out):
    f = _fla(L, a.formula)
    p = projective(L, f, a.cap)
    if p.projective:
        s = simplify_substitution(p.unifier)
        out.emit({"projective": True, "unifier": s.to_json()},
                 ["projective", "unifier:"] + [f"  {x} := {v}" for x, v in s.to_json().items()])
        return YES
    why = p.config.describe(p.ctx) if p.config is not None else "no unifier"
    out.emit({"projective": False, "failure": why}, ["not projective", f"  failing extension: {why}"])
    return NO


def cmd_approx(a, L, out):
    f = _fla(L, a.formula)
    ms = projective_approximation(L, f, a.cap)
    out.emit({"formula": out.f(f), "approximation": [out.f(m.formula) for m in ms]},
             [out.f(m.formula) for m in ms] or ["(empty: not unifiable)"])
    return YES if ms else NO


def cmd_unify(a, L, out):
    gamma = [_fla(L, g) for g in a.formula]
    us = unify(L, gamma, a.cap)
    out.emit({"unifiers": [u.to_json() for u in us]},
             [f"unifier {i}: " + ", ".join(f"{x} := {v}" for x, v in u.to_json().items())
              for i, u in enumerate(us, 1)] or ["not unifiable"])
    return YES if us else NO


def cmd_admissible(a, L, out):
    r = _rule(L, a.rule)
    d = admissible(L, r, a.engine, a.cap)
    doc = {"logic": str(L), "rule": out.r(r), "verdict": str(d.verdict), "engine": d.engine}
    lines = [str(d.verdict)]
    if d.verdict is Verdict.ADMISSIBLE:
        der = derivable(L, r, a.cap)
        doc["derivable"] = der
        lines.append("derivable" if der else "admissible, not derivable")
    elif d.verdict is Verdict.NOT_ADMISSIBLE:
        if d.unifier is not None:
            doc["unifier"] = d.unifier.to_json()
            lines += ["unifier of the premises refuting every conclusion:"]
            lines += [f"  {x} := {v}" for x, v in d.unifier.to_json().items()] or ["  (identity)"]
        if d.model is not None:
            doc["model"] = kripke.save(d.model)
            lines.append(f"refuting model with {d.model.n} points")
            if a.certificate:
                cert = {"logic": L.to_json(), "rule": rule_text(r), "model": doc["model"]}
                with open(a.certificate, "w") as fh:
                    json.dump(cert, fh, indent=2)
                lines.append(f"certificate written to {a.certificate}")
    else:
        doc["note"] = d.note
        lines.append(d.note)
    out.emit(doc, lines)
    return {Verdict.ADMISSIBLE: YES, Verdict.NOT_ADMISSIBLE: NO}.get(d.verdict, CAP)


def cmd_certify(a, L, out):
    doc = _read_json(a.certificate)
    if "model" in doc:
        M = kripke.load(doc["model"])
        text = a.rule or doc.get("rule")
        if a.logic is None and "logic" in doc:
            L = from_json(doc["logic"])
    else:
        M = kripke.load(doc)
        text = a.rule
    if L is None:
        raise ClxError("no logic given")
    if not text:
        raise ClxError("no rule given")
    r = _rule(L, text)
    ok = check_certificate(L, r, M)
    out.emit({"logic": str(L), "rule": out.r(r), "accepted": ok}, ["accepted" if ok else "rejected"])
    return YES if ok else NO


def cmd_basis(a, L, out):
    rows = list(basis(L, a.kind, a.max_n, _params(a.params) if a.params else None))
    out.emit({"logic": str(L), "kind": a.kind,
              "rules": [dict(rid.to_json(), id=str(rid), rule=rule_text(r)) for rid, r in rows]},
             [f"{rid}: {out.r(r)}" for rid, r in rows] or ["(empty basis: every admissible rule is derivable)"])
    return YES


def cmd_pext(a, L, out):
    sigma = [_fla(L, g) for g in a.formula]
    rs = pext_rules(L, sigma, a.max_b)
    doc = {"logic": str(L), "rules": [rule_text(r) for r in rs]}
    lines = [out.r(r) for r in rs]
    if a.model is None:
        out.emit(doc, lines)
        return YES
    M = kripke.load(_read_json(a.model))
    ok = pseudoextensible(L, M, sigma)
    doc["pseudoextensible"] = ok
    out.emit(doc, lines + ["pseudoextensible" if ok else "not pseudoextensible"])
    return YES if ok else NO


# ---------------------------------------------------------------- argument parsing

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--logic", default=None, help="preset name or logic JSON path (default K4)")
    common.add_argument("--params", default=None,
                        help="comma-separated parameter names for finite parameter mode, or 'infinite'")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="type-saturation resource cap")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--unicode", action="store_true", help="print formulas with modal symbols")
    common.add_argument("--seed", type=int, default=None,
                        help="accepted for scripted runs; every command is deterministic")

    ap = argparse.ArgumentParser(prog="clx", description="Admissibility and unification in clx modal logics.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def cmd(name, fn, help):
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(fn=fn)
        return p

    p = cmd("taut", cmd_taut, "is the formula a theorem of L")
    p.add_argument("formula")
    for name, fn, help in (("consequence", cmd_consequence, "does the formula follow globally from premises"),
                           ("countermodel", cmd_countermodel, "a small rooted countermodel")):
        p = cmd(name, fn, help)
        p.add_argument("formula")
        p.add_argument("-g", "--premise", action="append", default=[], help="global premise (repeatable)")
        if name == "countermodel":
            p.add_argument("-o", "--output", help="write the model JSON here")
    p = cmd("frame-check", cmd_frame_check, "is the model's frame an L-frame")
    p.add_argument("model", help="model JSON path")
    cmd("logic-info", cmd_logic_info, "xcb, base and classification of L")
    cmd("axioms", cmd_axioms, "canonical axioms of L over K4")
    p = cmd("projective", cmd_projective, "projectivity and a projective unifier")
    p.add_argument("formula")
    p = cmd("approx", cmd_approx, "projective approximation of a formula")
    p.add_argument("formula")
    p = cmd("unify", cmd_unify, "a complete set of unifiers")
    p.add_argument("formula", nargs="+")
    p = cmd("admissible", cmd_admissible, "is the rule admissible in L")
    p.add_argument("rule", help="rule text 'g1, g2 / d1, d2'")
    p.add_argument("--engine", choices=("a", "b", "both"), default="both")
    p.add_argument("--certificate", help="write a refuting model here when not admissible")
    p = cmd("certify", cmd_certify, "check a non-admissibility certificate")
    p.add_argument("certificate", help="certificate or model JSON path")
    p.add_argument("rule", nargs="?", help="rule text (defaults to the certificate's rule)")
    p = cmd("basis", cmd_basis, "a basis of admissible rules")
    p.add_argument("--kind", choices=("mc", "sc", "indep", "indep-sc"), default="mc")
    p.add_argument("--max-n", type=int, default=None, help="cap on n when branching is unbounded")
    p = cmd("pext", cmd_pext, "pseudoextensibility rules for a set of formulas")
    p.add_argument("formula", nargs="+")
    p.add_argument("--model", help="also check this model for pseudoextensibility")
    p.add_argument("--max-b", type=int, default=3, help="largest boxed subformula set handled")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = _parser()
    a = ap.parse_args(argv)
    out = _Out(a.format, a.unicode)
    try:
        if a.cap <= 0:
            raise ClxError("--cap must be positive")
        if a.command == "certify":
            L = _logic(a) if a.logic else None
        else:
            a.logic = a.logic or "K4"
            L = _logic(a)
        return a.fn(a, L, out)
    except ResourceCap as ex:
        print(f"undecided: {ex}", file=sys.stderr)
        return CAP
    except ParseError as ex:
        print(f"parse error: {ex}", file=sys.stderr)
        return USAGE
    except ClxError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
