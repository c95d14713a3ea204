from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cgmkit import formulas as F
from cgmkit.dsl import (
    JsonSchemaError,
    model_from_json,
    model_to_json,
    model_to_json_text,
    parse,
    parse_model,
    print_model,
    rational_from_text,
    rational_to_text,
)
from cgmkit.model import ElementDecl, RefineDecl
from generators import random_model


def test_parse_goal_with_prereq():
    decls, errors = parse("goal LowCost prereq+ (cost < 100);")
    assert not errors
    (d,) = decls
    assert isinstance(d, ElementDecl)
    assert d.prereq_pos == F.Cmp(F.Var("cost"), "<", F.Const(Fraction(100)))


def test_parse_empty_input():
    decls, errors = parse("")
    assert decls == [] and errors == []


def test_parse_five_source_refinement():
    decls, errors = parse(
        "refine R1: ScheduleMeeting <- CharacteriseMeeting, CollectTimetables,"
        " FindASuitableRoom, ChooseSchedule, ManageMeeting;"
    )
    assert not errors
    (d,) = decls
    assert isinstance(d, RefineDecl)
    assert len(d.sources) == 5 and d.label == "R1"


def test_parse_reports_every_error_with_recovery():
    text = "goal G;\n goal 123;\n conflict A -- ;\n goal H;\n"
    decls, errors = parse(text)
    assert len(errors) == 2
    assert len(decls) == 2  # G and H survive
    # errors are byte-reproducible
    again = parse(text)[1]
    assert [str(e) for e in errors] == [str(e) for e in again]
    assert all(e.span.start_line in (2, 3) for e in errors)


def test_parse_is_total_on_arbitrary_bytes():
    for junk in ["@@@", "goal", '"unterminated', "goal G prereq+ (x <);", "refine : ;"]:
        decls, errors = parse(junk)
        assert errors, junk


def test_formula_precedence():
    decls, _ = parse("formula (!a & b | c -> d <-> e);")
    f = decls[0].formula
    # <-> binds loosest: Iff(Implies(Or(And(Not a, b), c), d), e)
    assert isinstance(f, F.Iff)
    assert isinstance(f.lhs, F.Implies)
    assert isinstance(f.lhs.lhs, F.Or)
    assert isinstance(f.lhs.lhs.args[0], F.And)
    assert isinstance(f.lhs.lhs.args[0].args[0], F.Not)


def test_implies_right_associative():
    decls, _ = parse("formula (a -> b -> c);")
    f = decls[0].formula
    assert isinstance(f, F.Implies) and isinstance(f.rhs, F.Implies)


def test_ite_term_and_rational_literals():
    decls, _ = parse("objective obj min (ite(a, 1/3, 2) + 2.5 * x);")
    body = decls[0].body
    assert isinstance(body, F.Add)
    assert isinstance(body.terms[0], F.Ite)
    assert body.terms[0].then == F.Const(Fraction(1, 3))
    assert body.terms[1] == F.Scale(Fraction(5, 2), F.Var("x"))


def test_fixture_roundtrip(fixture_model):
    printed = print_model(fixture_model)
    again = parse_model(printed)
    assert again == fixture_model
    assert again.structural_hash() == fixture_model.structural_hash()


def test_empty_model_prints_header_only():
    m = parse_model("")
    text = print_model(m)
    assert text.splitlines()[0] == 'format "cgm/1";'
    assert parse_model(text) == m


def test_synthetic_labels_roundtrip():
    m = parse_model("goal A; goal B; refine A <- B;")
    assert m.refinements[0].id == "_R1"
    assert "refine _R1:" in print_model(m)
    assert parse_model(print_model(m)) == m


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_print_parse_roundtrip(seed):
    m = random_model(seed)
    assert parse_model(print_model(m)) == m


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_json_roundtrip(seed):
    m = random_model(seed)
    j = model_to_json_text(m)
    again = model_from_json(j)
    assert again == m
    assert model_to_json_text(again) == j


def test_rationals_never_lose_precision():
    q = Fraction(80)
    assert rational_to_text(q) == "80/1"
    tricky = Fraction(-22, 7)
    assert rational_from_text(rational_to_text(tricky)) == tricky
    # through a whole model
    m = parse_model("attr cost; goal G; set G.cost sat 1/3 deny -7/11;")
    again = model_from_json(model_to_json(m))
    e = again.element("G")
    assert e.sat_values()["cost"] == Fraction(1, 3)
    assert e.deny_values()["cost"] == Fraction(-7, 11)
    assert parse_model(print_model(m)) == m


def test_deny_only_attribute_value_roundtrips():
    m = parse_model("attr cost; goal G; set G.cost deny 3;")
    e = m.element("G")
    assert e.sat_values() == {} and e.deny_values() == {"cost": Fraction(3)}
    assert parse_model(print_model(m)) == m
    assert "set G.cost deny 3;" in print_model(m)


def test_json_schema_error_paths():
    with pytest.raises(JsonSchemaError) as e:
        model_from_json({"format": "cgm/1", "elements": [{"kind": "goal"}]})
    assert "elements[0]" in str(e.value)
    with pytest.raises(JsonSchemaError):
        model_from_json({"format": "nope/9"})
    with pytest.raises(JsonSchemaError):
        model_from_json('{"format": "cgm/1", "elements": [{"id": "G", "kind": "goal", "attrOnSat": {"c": 1.5}}]}')
