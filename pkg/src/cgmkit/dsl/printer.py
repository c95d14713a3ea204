"""Canonical pretty-printer: parse(print(m)) rebuilds a structurally equal model."""

from __future__ import annotations

from fractions import Fraction
from typing import List

from .. import formulas as F
from ..model import CGM, Kind


def rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# precedence levels for minimal-paren printing
_LEVEL = {"iff": 0, "implies": 1, "or": 2, "and": 3, "not": 4, "atom": 5}


def formula(f: F.Formula) -> str:
    return _fmt(f, 0)


def _fmt(f: F.Formula, outer: int) -> str:
    if f == F.TRUE:
        return "true"
    if f == F.FALSE:
        return "false"
    if isinstance(f, F.Prop):
        return f.label
    if isinstance(f, F.Cmp):
        return _paren(f"{term(f.lhs)} {f.op} {term(f.rhs)}", _LEVEL["atom"], outer)
    if isinstance(f, F.SugarApp):
        return f"{f.name}({', '.join(f.args)})"
    if isinstance(f, F.Not):
        return _paren("!" + _fmt(f.arg, _LEVEL["not"]), _LEVEL["not"], outer)
    if isinstance(f, F.And):
        body = " & ".join(_fmt(a, _LEVEL["and"]) for a in f.args)
        return _paren(body, _LEVEL["and"], outer)
    if isinstance(f, F.Or):
        body = " | ".join(_fmt(a, _LEVEL["or"]) for a in f.args)
        return _paren(body, _LEVEL["or"], outer)
    if isinstance(f, F.Implies):
        body = f"{_fmt(f.lhs, _LEVEL['implies'] + 1)} -> {_fmt(f.rhs, _LEVEL['implies'])}"
        return _paren(body, _LEVEL["implies"], outer)
    if isinstance(f, F.Iff):
        body = f"{_fmt(f.lhs, _LEVEL['iff'] + 1)} <-> {_fmt(f.rhs, _LEVEL['iff'] + 1)}"
        return _paren(body, _LEVEL["iff"], outer)
    raise TypeError(f"not a formula: {f!r}")


def _paren(body: str, mine: int, outer: int) -> str:
    # comparisons always bind tightest and never need parens
    if mine == _LEVEL["atom"]:
        return f"({body})" if outer >= _LEVEL["atom"] else body
    return f"({body})" if mine < outer else body


def term(t: F.Term) -> str:
    if isinstance(t, F.Const):
        return rational(t.value)
    if isinstance(t, F.Var):
        return t.id
    if isinstance(t, F.Scale):
        inner = term(t.term)
        if isinstance(t.term, F.Add):
            inner = f"({inner})"
        return f"{rational(t.coeff)} * {inner}"
    if isinstance(t, F.Add):
        parts: List[str] = []
        for i, s in enumerate(t.terms):
            if i > 0 and isinstance(s, F.Scale) and s.coeff == -1:
                inner = term(s.term)
                if isinstance(s.term, F.Add):
                    inner = f"({inner})"
                parts.append(f"- {inner}")
            elif i > 0 and isinstance(s, F.Const) and s.value < 0:
                parts.append(f"- {rational(-s.value)}")
            else:
                parts.append(("+ " if i > 0 else "") + term(s))
        return " ".join(parts)
    if isinstance(t, F.Ite):
        return f"ite({formula(t.cond)}, {term(t.then)}, {term(t.orelse)})"
    raise TypeError(f"not a term: {t!r}")


_PREDEF_KW = {
    "Weight": "weight",
    "numUnsatPrefs": "numUnsatPrefs",
    "numUnsatRequirements": "numUnsatRequirements",
    "numSatTasks": "numSatTasks",
}


def print_model(m: CGM) -> str:
    """Deterministic canonical text for a model."""
    out: List[str] = ['format "cgm/1";', ""]
    for a in m.attributes:
        if a.aggregate == "sum":
            out.append(f"attr {a.id};")
        else:
            out.append(f"attr {a.id} = ({term(a.aggregate)});")
    if m.attributes:
        out.append("")
    for e in m.elements:
        kw = "goal" if e.kind == Kind.GOAL else "assumption"
        parts = [kw, e.id]
        if e.display_name and e.display_name != e.id:
            parts.append(f'"{e.display_name}"')
        if e.prereq_pos != F.TRUE:
            parts.append(f"prereq+ ({formula(e.prereq_pos)})")
        if e.prereq_neg != F.TRUE:
            parts.append(f"prereq- ({formula(e.prereq_neg)})")
        out.append(" ".join(parts) + ";")
    out.append("")
    for r in m.refinements:
        line = f"refine {r.id}: {r.target} <- {', '.join(r.sources)}"
        if r.prereq_pos != F.TRUE:
            line += f" prereq+ ({formula(r.prereq_pos)})"
        if r.prereq_neg != F.TRUE:
            line += f" prereq- ({formula(r.prereq_neg)})"
        out.append(line + ";")
    if m.refinements:
        out.append("")
    for e in m.elements:
        sat = dict(e.attr_on_sat)
        deny = dict(e.attr_on_deny)
        for attr in sorted(set(sat) | set(deny)):
            line = f"set {e.id}.{attr}"
            if attr in sat:
                line += f" sat {rational(sat[attr])}"
            if attr in deny:
                line += f" deny {rational(deny[attr])}"
            out.append(line + ";")
    for edge in m.relation_edges:
        stmt = {
            "contribution": f"contrib {edge.a} -> {edge.b}",
            "mutual": f"contrib {edge.a} <-> {edge.b}",
            "conflict": f"conflict {edge.a} -- {edge.b}",
            "binding": f"bind {edge.a} ~ {edge.b}",
        }[edge.kind]
        out.append(stmt + ";")
    for p in m.preferences:
        out.append(f"prefer {p.preferred} > {p.over};")
    for f in m.global_formulas:
        if isinstance(f, F.SugarApp):
            out.append(f"sugar {f.name}({', '.join(f.args)});")
        else:
            out.append(f"formula ({formula(f)});")
    for label, value in m.assertions:
        out.append(f"assert {label} {'true' if value else 'false'};")
    for o in m.objectives:
        if isinstance(o.body, str):
            out.append(f"objective {o.direction} {_PREDEF_KW[o.body]};")
        else:
            out.append(f"objective {o.id} {o.direction} ({term(o.body)});")
    return "\n".join(out).rstrip() + "\n"
