"""SMT-LIB v2 export of encoded problems, with named assertions per
constraint group and (minimize)/(maximize) commands in lexicographic order,
for cross-checking against external OMT solvers.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Sequence

from . import formulas as F
from .encode import EncodedProblem, encode
from .model import CGM


def _sym(name: str) -> str:
    if all(c.isalnum() or c in "~!@$%^&*_-+=<>.?/" for c in name) and name and not name[0].isdigit():
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def _rat(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator) if q.numerator >= 0 else f"(- {-q.numerator})"
    num = f"{abs(q.numerator)}"
    body = f"(/ {num} {q.denominator})"
    return body if q.numerator >= 0 else f"(- {body})"


def term_sexpr(t: F.Term) -> str:
    if isinstance(t, F.Const):
        return _rat(t.value)
    if isinstance(t, F.Var):
        return _sym(t.id)
    if isinstance(t, F.Scale):
        return f"(* {_rat(t.coeff)} {term_sexpr(t.term)})"
    if isinstance(t, F.Add):
        if not t.terms:
            return "0"
        if len(t.terms) == 1:
            return term_sexpr(t.terms[0])
        return "(+ " + " ".join(term_sexpr(s) for s in t.terms) + ")"
    if isinstance(t, F.Ite):
        return f"(ite {formula_sexpr(t.cond)} {term_sexpr(t.then)} {term_sexpr(t.orelse)})"
    raise TypeError(f"not a term: {t!r}")


def formula_sexpr(f: F.Formula) -> str:
    if f == F.TRUE:
        return "true"
    if f == F.FALSE:
        return "false"
    if isinstance(f, F.Prop):
        return _sym(f.label)
    if isinstance(f, F.Cmp):
        op = "=" if f.op == "=" else f.op
        return f"({op} {term_sexpr(f.lhs)} {term_sexpr(f.rhs)})"
    if isinstance(f, F.Not):
        return f"(not {formula_sexpr(f.arg)})"
    if isinstance(f, F.And):
        return "(and " + " ".join(formula_sexpr(a) for a in f.args) + ")"
    if isinstance(f, F.Or):
        return "(or " + " ".join(formula_sexpr(a) for a in f.args) + ")"
    if isinstance(f, F.Implies):
        return f"(=> {formula_sexpr(f.lhs)} {formula_sexpr(f.rhs)})"
    if isinstance(f, F.Iff):
        return f"(= {formula_sexpr(f.lhs)} {formula_sexpr(f.rhs)})"
    raise TypeError(f"cannot export {f!r}")


def export_smt(m: CGM, lex_ids: Sequence[str] = (), directions=None) -> str:
    """SMT-LIB v2 script semantically identical to the internal encoding."""
    problem = encode(m, lex_ids, directions=directions)
    return export_problem(problem)


def export_problem(problem: EncodedProblem) -> str:
    lines: List[str] = [
        "(set-option :produce-models true)",
        "(set-logic QF_LRA)",
    ]
    for label in problem.boolean_vars:
        lines.append(f"(declare-fun {_sym(label)} () Bool)")
    for name in problem.numeric_vars:
        lines.append(f"(declare-fun {_sym(name)} () Real)")
    counts: Dict[str, int] = {}
    for tag, f in problem.hard_constraints:
        base = tag.describe()
        counts[base] = counts.get(base, 0) + 1
        name = base if counts[base] == 1 else f"{base}#{counts[base]}"
        lines.append(f"(assert (! {formula_sexpr(f)} :named {_sym(name)}))")
    for direction, term in problem.objectives:
        cmd = "minimize" if direction == "min" else "maximize"
        lines.append(f"({cmd} {term_sexpr(term)})")
    lines.append("(check-sat)")
    if problem.objectives:
        lines.append("(get-objectives)")
    return "\n".join(lines) + "\n"
