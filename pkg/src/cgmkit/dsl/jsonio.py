"""Canonical JSON-shaped serialization for models, realizations and outcomes.

Rationals are serialized as ``"num/den"`` strings, never floats, so values
survive round-trips exactly.  Keys are emitted in sorted order and the text
form is stable byte-for-byte for equal values.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List, Optional

from .. import formulas as F
from ..model import (
    AttributeDecl,
    CGM,
    Element,
    InvalidModel,
    Kind,
    Objective,
    Preference,
    Refinement,
    RelationEdge,
    ValidationReport,
    Violation,
)

FORMAT = "cgm/1"


class JsonSchemaError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def rational_to_text(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def rational_from_text(s: str, path: str = "$") -> Fraction:
    if not isinstance(s, str):
        raise JsonSchemaError(path, f"expected a rational string, got {type(s).__name__}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise JsonSchemaError(path, f"bad rational {s!r}: {e}") from None


# --- formulas / terms -------------------------------------------------------


def formula_to_json(f: F.Formula) -> Any:
    if f == F.TRUE:
        return {"op": "true"}
    if f == F.FALSE:
        return {"op": "false"}
    if isinstance(f, F.Prop):
        return {"op": "prop", "label": f.label}
    if isinstance(f, F.Cmp):
        return {
            "op": "cmp",
            "cmp": f.op,
            "lhs": term_to_json(f.lhs),
            "rhs": term_to_json(f.rhs),
        }
    if isinstance(f, F.Not):
        return {"op": "not", "arg": formula_to_json(f.arg)}
    if isinstance(f, F.And):
        return {"op": "and", "args": [formula_to_json(a) for a in f.args]}
    if isinstance(f, F.Or):
        return {"op": "or", "args": [formula_to_json(a) for a in f.args]}
    if isinstance(f, F.Implies):
        return {"op": "implies", "lhs": formula_to_json(f.lhs), "rhs": formula_to_json(f.rhs)}
    if isinstance(f, F.Iff):
        return {"op": "iff", "lhs": formula_to_json(f.lhs), "rhs": formula_to_json(f.rhs)}
    if isinstance(f, F.SugarApp):
        return {"op": "sugar", "name": f.name, "args": list(f.args)}
    raise TypeError(f"not a formula: {f!r}")


def formula_from_json(j: Any, path: str = "$") -> F.Formula:
    if not isinstance(j, dict) or "op" not in j:
        raise JsonSchemaError(path, "expected a formula object with an 'op' key")
    op = j["op"]
    try:
        if op == "true":
            return F.TRUE
        if op == "false":
            return F.FALSE
        if op == "prop":
            return F.Prop(j["label"])
        if op == "cmp":
            return F.Cmp(
                term_from_json(j["lhs"], path + ".lhs"),
                j["cmp"],
                term_from_json(j["rhs"], path + ".rhs"),
            )
        if op == "not":
            return F.Not(formula_from_json(j["arg"], path + ".arg"))
        if op == "and":
            return F.And(tuple(formula_from_json(a, f"{path}.args[{i}]") for i, a in enumerate(j["args"])))
        if op == "or":
            return F.Or(tuple(formula_from_json(a, f"{path}.args[{i}]") for i, a in enumerate(j["args"])))
        if op == "implies":
            return F.Implies(
                formula_from_json(j["lhs"], path + ".lhs"),
                formula_from_json(j["rhs"], path + ".rhs"),
            )
        if op == "iff":
            return F.Iff(
                formula_from_json(j["lhs"], path + ".lhs"),
                formula_from_json(j["rhs"], path + ".rhs"),
            )
        if op == "sugar":
            return F.SugarApp(j["name"], tuple(j["args"]))
    except KeyError as e:
        raise JsonSchemaError(path, f"missing key {e}") from None
    except ValueError as e:
        raise JsonSchemaError(path, str(e)) from None
    raise JsonSchemaError(path, f"unknown formula op {op!r}")


def term_to_json(t: F.Term) -> Any:
    if isinstance(t, F.Const):
        return {"t": "const", "value": rational_to_text(t.value)}
    if isinstance(t, F.Var):
        return {"t": "var", "id": t.id}
    if isinstance(t, F.Scale):
        return {"t": "scale", "coeff": rational_to_text(t.coeff), "term": term_to_json(t.term)}
    if isinstance(t, F.Add):
        return {"t": "add", "terms": [term_to_json(s) for s in t.terms]}
    if isinstance(t, F.Ite):
        return {
            "t": "ite",
            "cond": formula_to_json(t.cond),
            "then": term_to_json(t.then),
            "else": term_to_json(t.orelse),
        }
    raise TypeError(f"not a term: {t!r}")


def term_from_json(j: Any, path: str = "$") -> F.Term:
    if not isinstance(j, dict) or "t" not in j:
        raise JsonSchemaError(path, "expected a term object with a 't' key")
    kind = j["t"]
    try:
        if kind == "const":
            return F.Const(rational_from_text(j["value"], path + ".value"))
        if kind == "var":
            return F.Var(j["id"])
        if kind == "scale":
            return F.Scale(
                rational_from_text(j["coeff"], path + ".coeff"),
                term_from_json(j["term"], path + ".term"),
            )
        if kind == "add":
            return F.Add(tuple(term_from_json(s, f"{path}.terms[{i}]") for i, s in enumerate(j["terms"])))
        if kind == "ite":
            return F.Ite(
                formula_from_json(j["cond"], path + ".cond"),
                term_from_json(j["then"], path + ".then"),
                term_from_json(j["else"], path + ".else"),
            )
    except KeyError as e:
        raise JsonSchemaError(path, f"missing key {e}") from None
    raise JsonSchemaError(path, f"unknown term kind {kind!r}")


# --- model ------------------------------------------------------------------


def model_to_json(m: CGM) -> Dict[str, Any]:
    elements = []
    for e in m.elements:
        j: Dict[str, Any] = {"id": e.id, "kind": e.kind.value}
        if e.display_name and e.display_name != e.id:
            j["displayName"] = e.display_name
        if e.prereq_pos != F.TRUE:
            j["prereqPos"] = formula_to_json(e.prereq_pos)
        if e.prereq_neg != F.TRUE:
            j["prereqNeg"] = formula_to_json(e.prereq_neg)
        if e.attr_on_sat:
            j["attrOnSat"] = {a: rational_to_text(v) for a, v in e.attr_on_sat}
        if e.attr_on_deny:
            j["attrOnDeny"] = {a: rational_to_text(v) for a, v in e.attr_on_deny}
        elements.append(j)
    refinements = []
    for r in m.refinements:
        j = {"id": r.id, "target": r.target, "sources": list(r.sources)}
        if r.prereq_pos != F.TRUE:
            j["prereqPos"] = formula_to_json(r.prereq_pos)
        if r.prereq_neg != F.TRUE:
            j["prereqNeg"] = formula_to_json(r.prereq_neg)
        refinements.append(j)
    attributes = []
    for a in m.attributes:
        if a.aggregate == "sum":
            attributes.append({"id": a.id, "aggregate": "sum"})
        else:
            attributes.append({"id": a.id, "aggregate": "userDefined", "term": term_to_json(a.aggregate)})
    objectives = []
    for o in m.objectives:
        if isinstance(o.body, str):
            objectives.append({"id": o.id, "direction": o.direction, "predefined": o.body})
        else:
            objectives.append({"id": o.id, "direction": o.direction, "body": term_to_json(o.body)})
    return {
        "format": FORMAT,
        "elements": elements,
        "refinements": refinements,
        "relationEdges": [{"kind": e.kind, "a": e.a, "b": e.b} for e in m.relation_edges],
        "preferences": [{"preferred": p.preferred, "over": p.over} for p in m.preferences],
        "attributes": attributes,
        "objectives": objectives,
        "formulas": [formula_to_json(f) for f in m.global_formulas],
        "assertions": {label: value for label, value in m.assertions},
    }


def model_to_json_text(m: CGM) -> str:
    return dumps(model_to_json(m))


def dumps(j: Any) -> str:
    return json.dumps(j, sort_keys=True, separators=(",", ":")) + "\n"


def model_from_json(j: Any, path: str = "$") -> CGM:
    """Rebuild a model from canonical JSON; validates structure on the way in."""
    if isinstance(j, str):
        try:
            j = json.loads(j)
        except json.JSONDecodeError as e:
            raise JsonSchemaError("$", f"invalid JSON: {e}") from None
    if not isinstance(j, dict):
        raise JsonSchemaError(path, "expected an object")
    if j.get("format") != FORMAT:
        raise JsonSchemaError(path + ".format", f"expected {FORMAT!r}, got {j.get('format')!r}")

    def need(obj: Any, key: str, where: str) -> Any:
        if not isinstance(obj, dict) or key not in obj:
            raise JsonSchemaError(where, f"missing key {key!r}")
        return obj[key]

    elements = []
    for i, ej in enumerate(j.get("elements", [])):
        where = f"{path}.elements[{i}]"
        kind_text = need(ej, "kind", where)
        if kind_text not in (Kind.GOAL.value, Kind.ASSUMPTION.value):
            raise JsonSchemaError(where + ".kind", f"bad element kind {kind_text!r}")
        elements.append(
            Element(
                id=need(ej, "id", where),
                kind=Kind(kind_text),
                display_name=ej.get("displayName", need(ej, "id", where)),
                prereq_pos=formula_from_json(ej["prereqPos"], where + ".prereqPos")
                if "prereqPos" in ej
                else F.TRUE,
                prereq_neg=formula_from_json(ej["prereqNeg"], where + ".prereqNeg")
                if "prereqNeg" in ej
                else F.TRUE,
                attr_on_sat=tuple(
                    sorted(
                        (a, rational_from_text(v, f"{where}.attrOnSat.{a}"))
                        for a, v in ej.get("attrOnSat", {}).items()
                    )
                ),
                attr_on_deny=tuple(
                    sorted(
                        (a, rational_from_text(v, f"{where}.attrOnDeny.{a}"))
                        for a, v in ej.get("attrOnDeny", {}).items()
                    )
                ),
            )
        )
    refinements = []
    for i, rj in enumerate(j.get("refinements", [])):
        where = f"{path}.refinements[{i}]"
        refinements.append(
            Refinement(
                id=need(rj, "id", where),
                target=need(rj, "target", where),
                sources=tuple(need(rj, "sources", where)),
                prereq_pos=formula_from_json(rj["prereqPos"], where + ".prereqPos")
                if "prereqPos" in rj
                else F.TRUE,
                prereq_neg=formula_from_json(rj["prereqNeg"], where + ".prereqNeg")
                if "prereqNeg" in rj
                else F.TRUE,
            )
        )
    edges = []
    for i, oj in enumerate(j.get("relationEdges", [])):
        where = f"{path}.relationEdges[{i}]"
        kind = need(oj, "kind", where)
        if kind not in ("contribution", "mutual", "conflict", "binding"):
            raise JsonSchemaError(where + ".kind", f"bad edge kind {kind!r}")
        edges.append(RelationEdge(kind, need(oj, "a", where), need(oj, "b", where)))
    preferences = [
        Preference(need(pj, "preferred", f"{path}.preferences[{i}]"), need(pj, "over", f"{path}.preferences[{i}]"))
        for i, pj in enumerate(j.get("preferences", []))
    ]
    attributes = []
    for i, aj in enumerate(j.get("attributes", [])):
        where = f"{path}.attributes[{i}]"
        agg = need(aj, "aggregate", where)
        if agg == "sum":
            attributes.append(AttributeDecl(need(aj, "id", where), "sum"))
        elif agg == "userDefined":
            attributes.append(
                AttributeDecl(need(aj, "id", where), term_from_json(need(aj, "term", where), where + ".term"))
            )
        else:
            raise JsonSchemaError(where + ".aggregate", f"bad aggregate {agg!r}")
    objectives = []
    for i, oj in enumerate(j.get("objectives", [])):
        where = f"{path}.objectives[{i}]"
        direction = need(oj, "direction", where)
        if direction not in ("min", "max"):
            raise JsonSchemaError(where + ".direction", f"bad direction {direction!r}")
        if "predefined" in oj:
            objectives.append(Objective(need(oj, "id", where), direction, oj["predefined"]))
        else:
            objectives.append(
                Objective(need(oj, "id", where), direction, term_from_json(need(oj, "body", where), where + ".body"))
            )
    formulas = [
        formula_from_json(fj, f"{path}.formulas[{i}]") for i, fj in enumerate(j.get("formulas", []))
    ]
    assertions_j = j.get("assertions", {})
    if not isinstance(assertions_j, dict):
        raise JsonSchemaError(path + ".assertions", "expected an object")
    for label, value in assertions_j.items():
        if not isinstance(value, bool):
            raise JsonSchemaError(f"{path}.assertions.{label}", "expected true or false")

    model = CGM(
        elements=tuple(elements),
        refinements=tuple(refinements),
        relation_edges=tuple(edges),
        preferences=tuple(preferences),
        attributes=tuple(attributes),
        objectives=tuple(objectives),
        global_formulas=tuple(formulas),
        assertions=tuple(sorted(assertions_j.items())),
    )
    _revalidate(model)
    return model


def _revalidate(m: CGM) -> None:
    """Run the declaration-level validation rules against a deserialized model."""
    from ..model import classify

    errs: List[Violation] = []
    seen: Dict[str, str] = {}
    for e in m.elements:
        if e.id in seen:
            errs.append(Violation("DuplicateLabel", f"{e.id!r} declared twice"))
        seen[e.id] = e.kind.value
    for r in m.refinements:
        if r.id in seen:
            errs.append(Violation("DuplicateLabel", f"{r.id!r} declared twice"))
        seen[r.id] = "refinement"
        if not r.sources:
            errs.append(Violation("EmptySources", f"refinement {r.id} has no sources"))
        for s in r.sources:
            if s not in {e.id for e in m.elements}:
                errs.append(Violation("UnknownReference", f"refinement {r.id}: unknown source {s!r}"))
        if r.target not in {e.id for e in m.elements}:
            errs.append(Violation("UnknownReference", f"refinement {r.id}: unknown target {r.target!r}"))
    if errs:
        raise InvalidModel(ValidationReport(tuple(errs)))
    # reuse full validation by printing + rebuilding through declarations
    from .parser import parse_model
    from .printer import print_model

    parse_model(print_model(m))
    if any(e.kind == Kind.ASSUMPTION and e.id in classify(m).roots for e in m.elements):
        raise InvalidModel(
            ValidationReport((Violation("AssumptionRoot", "assumption cannot be a root"),))
        )


# --- realizations / outcomes -------------------------------------------------


def realization_to_json(r) -> Dict[str, Any]:
    j: Dict[str, Any] = {
        "satisfied": sorted(r.satisfied),
        "numericValues": {k: rational_to_text(v) for k, v in r.numeric_values.items()},
        "attained": r.attained,
    }
    if r.objective_values is not None:
        j["objectiveValues"] = [rational_to_text(v) for v in r.objective_values]
    return j


def realization_from_json(j: Any, path: str = "$"):
    from ..reason import Realization

    if isinstance(j, str):
        j = json.loads(j)
    if not isinstance(j, dict):
        raise JsonSchemaError(path, "expected an object")
    satisfied = j.get("satisfied")
    if not isinstance(satisfied, list):
        raise JsonSchemaError(path + ".satisfied", "expected an array of labels")
    numeric = {
        k: rational_from_text(v, f"{path}.numericValues.{k}")
        for k, v in j.get("numericValues", {}).items()
    }
    objective_values: Optional[tuple] = None
    if "objectiveValues" in j:
        objective_values = tuple(
            rational_from_text(v, f"{path}.objectiveValues[{i}]")
            for i, v in enumerate(j["objectiveValues"])
        )
    return Realization(
        satisfied=frozenset(satisfied),
        numeric_values=numeric,
        objective_values=objective_values,
        attained=bool(j.get("attained", True)),
    )


def outcome_to_json(outcome) -> Dict[str, Any]:
    from ..reason import BudgetOutcome, Realizable, Unrealizable

    if isinstance(outcome, Realizable):
        return {"status": "realizable", "realization": realization_to_json(outcome.realization)}
    if isinstance(outcome, Unrealizable):
        return {"status": "unrealizable", "core": [c.describe() for c in outcome.core]}
    if isinstance(outcome, BudgetOutcome):
        j: Dict[str, Any] = {"status": "budget"}
        if outcome.best is not None:
            j["bestSoFar"] = realization_to_json(outcome.best)
        if outcome.bounds:
            j["boundsSoFar"] = [rational_to_text(v) for v in outcome.bounds]
        return j
    raise TypeError(f"not an outcome: {outcome!r}")
