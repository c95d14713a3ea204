"""Immutable constrained-goal-model values with structural validation.

A model is the usual tuple of labelled goals/domain assumptions, refinements
forming an AND/OR DAG over them, relation edges, preferences, numeric
attributes, objectives, global formulas and user assertions.  ``build_model``
validates a declaration list and either returns a model or raises
``InvalidModel`` carrying a report with every violation found.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple, Union

from . import formulas as F

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
SYNTH_REF_RE = re.compile(r"_R[0-9]+\Z")

PREDEFINED_OBJECTIVES = (
    "Weight",
    "numUnsatPrefs",
    "numUnsatRequirements",
    "numSatTasks",
)


class Kind(str, enum.Enum):
    GOAL = "goal"
    ASSUMPTION = "assumption"
    REFINEMENT = "refinement"
    ATTRIBUTE = "attribute"
    OBJECTIVE = "objective"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        loc = f"{self.span}: " if self.span else ""
        return f"{loc}{self.code}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


class InvalidModel(Exception):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(str(v) for v in report.violations))
        self.report = report


# --- model pieces ---------------------------------------------------------


@dataclass(frozen=True)
class Element:
    id: str
    kind: Kind  # GOAL or ASSUMPTION
    display_name: str = ""
    prereq_pos: F.Formula = F.TRUE
    prereq_neg: F.Formula = F.TRUE
    attr_on_sat: Tuple[Tuple[str, Fraction], ...] = ()
    attr_on_deny: Tuple[Tuple[str, Fraction], ...] = ()

    def sat_values(self) -> Dict[str, Fraction]:
        return dict(self.attr_on_sat)

    def deny_values(self) -> Dict[str, Fraction]:
        return dict(self.attr_on_deny)


@dataclass(frozen=True)
class Refinement:
    id: str
    target: str
    sources: Tuple[str, ...]
    prereq_pos: F.Formula = F.TRUE
    prereq_neg: F.Formula = F.TRUE


@dataclass(frozen=True)
class RelationEdge:
    kind: str  # contribution | mutual | conflict | binding
    a: str
    b: str

    def describe(self) -> str:
        arrow = {
            "contribution": "->",
            "mutual": "<->",
            "conflict": "--",
            "binding": "~",
        }[self.kind]
        return f"{self.a} {arrow} {self.b}"


@dataclass(frozen=True)
class Preference:
    preferred: str
    over: str


@dataclass(frozen=True)
class AttributeDecl:
    id: str
    # "sum" for the default per-element aggregation, or a defining term.
    aggregate: Union[str, F.Term] = "sum"


@dataclass(frozen=True)
class Objective:
    id: str
    direction: str  # "min" | "max"
    # a term, or the name of a predefined objective
    body: Union[F.Term, str]


@dataclass(frozen=True)
class Classification:
    roots: FrozenSet[str]
    leaves: FrozenSet[str]
    internals: FrozenSet[str]
    requirements: FrozenSet[str]
    tasks: FrozenSet[str]
    mandatory: FrozenSet[str]


@dataclass(frozen=True)
class CGM:
    elements: Tuple[Element, ...]
    refinements: Tuple[Refinement, ...]
    relation_edges: Tuple[RelationEdge, ...] = ()
    preferences: Tuple[Preference, ...] = ()
    attributes: Tuple[AttributeDecl, ...] = ()
    objectives: Tuple[Objective, ...] = ()
    global_formulas: Tuple[F.Formula, ...] = ()
    assertions: Tuple[Tuple[str, bool], ...] = ()

    # -- lookups (derived, cheap to recompute) --

    def element(self, label: str) -> Element:
        return self._element_map()[label]

    def refinement(self, label: str) -> Refinement:
        return self._refinement_map()[label]

    def _element_map(self) -> Dict[str, Element]:
        return {e.id: e for e in self.elements}

    def _refinement_map(self) -> Dict[str, Refinement]:
        return {r.id: r for r in self.refinements}

    def attribute(self, name: str) -> Optional[AttributeDecl]:
        for a in self.attributes:
            if a.id == name:
                return a
        return None

    def objective(self, name: str) -> Optional[Objective]:
        for o in self.objectives:
            if o.id == name:
                return o
        return None

    def kind_of(self, label: str) -> Optional[Kind]:
        e = self._element_map().get(label)
        if e is not None:
            return e.kind
        if label in self._refinement_map():
            return Kind.REFINEMENT
        if self.attribute(label) is not None:
            return Kind.ATTRIBUTE
        if self.objective(label) is not None:
            return Kind.OBJECTIVE
        return None

    def refinements_of(self, element_id: str) -> Tuple[Refinement, ...]:
        return tuple(r for r in self.refinements if r.target == element_id)

    def assertion_map(self) -> Dict[str, bool]:
        return dict(self.assertions)

    def labels(self) -> Tuple[str, ...]:
        """Every proposition label: elements then refinements, declaration order."""
        return tuple(e.id for e in self.elements) + tuple(r.id for r in self.refinements)

    # -- scenario overlay --

    def with_assertion(self, label: str, value: Optional[bool]) -> "CGM":
        """Return a new model with the user assertion for ``label`` set or cleared."""
        if label not in self._element_map():
            raise InvalidModel(
                ValidationReport(
                    (Violation("UnknownReference", f"no element named {label!r}"),)
                )
            )
        kept = [(l, v) for l, v in self.assertions if l != label]
        if value is not None:
            kept.append((label, value))
        return replace(self, assertions=tuple(sorted(kept)))

    def structural_hash(self) -> str:
        from .dsl.jsonio import model_to_json_text

        return hashlib.sha256(model_to_json_text(self).encode()).hexdigest()


def classify(m: CGM) -> Classification:
    """Partition elements into roots/internals/leaves and derive the goal roles."""
    is_source = set()
    is_target = set()
    for r in m.refinements:
        is_target.add(r.target)
        is_source.update(r.sources)
    roots = set()
    leaves = set()
    internals = set()
    for e in m.elements:
        if e.id not in is_source:
            roots.add(e.id)
        elif e.id not in is_target:
            leaves.add(e.id)
        else:
            internals.add(e.id)
    emap = m._element_map()
    requirements = frozenset(l for l in roots if emap[l].kind == Kind.GOAL)
    tasks = frozenset(l for l in leaves if emap[l].kind == Kind.GOAL)
    asserted = m.assertion_map()
    mandatory = frozenset(l for l in requirements if asserted.get(l) is True)
    return Classification(
        roots=frozenset(roots),
        leaves=frozenset(leaves),
        internals=frozenset(internals),
        requirements=requirements,
        tasks=tasks,
        mandatory=mandatory,
    )


# --- declarations ----------------------------------------------------------
#
# The DSL parser produces these; build_model also accepts them constructed
# programmatically (benchgen does).


@dataclass(frozen=True)
class ElementDecl:
    name: str
    kind: Kind
    display_name: str = ""
    reward: Optional[Fraction] = None
    penalty: Optional[Fraction] = None
    prereq_pos: Optional[F.Formula] = None
    prereq_neg: Optional[F.Formula] = None
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class RefineDecl:
    target: str
    sources: Tuple[str, ...]
    label: Optional[str] = None
    prereq_pos: Optional[F.Formula] = None
    prereq_neg: Optional[F.Formula] = None
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class EdgeDecl:
    kind: str
    a: str
    b: str
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class PreferDecl:
    preferred: str
    over: str
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class AttrDecl:
    name: str
    term: Optional[F.Term] = None
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class SetAttrDecl:
    element: str
    attr: str
    sat: Optional[Fraction] = None
    deny: Optional[Fraction] = None
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class FormulaDecl:
    formula: F.Formula
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class AssertDecl:
    name: str
    value: bool
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class ObjectiveDecl:
    direction: str
    name: Optional[str] = None  # None for predefined
    body: Optional[F.Term] = None
    predefined: Optional[str] = None
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class SugarDecl:
    name: str
    args: Tuple[str, ...]
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class FormatDecl:
    version: str
    span: Optional[SourceSpan] = None


Declaration = Union[
    ElementDecl,
    RefineDecl,
    EdgeDecl,
    PreferDecl,
    AttrDecl,
    SetAttrDecl,
    FormulaDecl,
    AssertDecl,
    ObjectiveDecl,
    SugarDecl,
    FormatDecl,
]


# --- validation / construction ---------------------------------------------


def build_model(decls: Sequence[Declaration]) -> CGM:
    """Validate a declaration list and assemble the immutable model.

    Never returns a partially valid model: every violation is collected and
    raised at once inside ``InvalidModel``.
    """
    errs: list = []

    def err(code: str, message: str, span: Optional[SourceSpan] = None) -> None:
        errs.append(Violation(code, message, span))

    element_decls: Dict[str, ElementDecl] = {}
    refine_decls: list = []
    attr_decls: Dict[str, AttrDecl] = {}
    objective_decls: list = []
    edges: list = []
    prefs: list = []
    set_attrs: list = []
    global_formulas: list = []
    assertions: Dict[str, bool] = {}

    taken: Dict[str, str] = {}  # label -> what it names

    def claim(name: str, what: str, span: Optional[SourceSpan]) -> bool:
        if name in taken:
            err("DuplicateLabel", f"{name!r} already declared as {taken[name]}", span)
            return False
        taken[name] = what
        return True

    def check_ident(name: str, span: Optional[SourceSpan]) -> None:
        if not IDENT_RE.match(name):
            err("BadIdentifier", f"{name!r} is not a valid identifier", span)

    synth_counter = 0
    explicit_ref_labels = set()
    for d in decls:
        if isinstance(d, RefineDecl) and d.label is not None:
            explicit_ref_labels.add(d.label)

    for d in decls:
        if isinstance(d, FormatDecl):
            if d.version != "cgm/1":
                err("UnsupportedFormat", f"unknown format {d.version!r}", d.span)
        elif isinstance(d, ElementDecl):
            check_ident(d.name, d.span)
            if claim(d.name, d.kind.value, d.span):
                element_decls[d.name] = d
        elif isinstance(d, RefineDecl):
            label = d.label
            if label is None:
                synth_counter += 1
                label = f"_R{synth_counter}"
                while label in explicit_ref_labels:
                    synth_counter += 1
                    label = f"_R{synth_counter}"
            elif not (IDENT_RE.match(label) or SYNTH_REF_RE.match(label)):
                err("BadIdentifier", f"{label!r} is not a valid refinement label", d.span)
            claim(label, "refinement", d.span)
            refine_decls.append((label, d))
        elif isinstance(d, AttrDecl):
            check_ident(d.name, d.span)
            if claim(d.name, "attribute", d.span):
                attr_decls[d.name] = d
        elif isinstance(d, ObjectiveDecl):
            if d.predefined is not None:
                name = d.predefined
                if name in taken:
                    err("DuplicateLabel", f"{name!r} already declared as {taken[name]}", d.span)
                else:
                    taken[name] = "objective"
                    objective_decls.append((name, d))
            else:
                check_ident(d.name, d.span)
                if claim(d.name, "objective", d.span):
                    objective_decls.append((d.name, d))
        elif isinstance(d, EdgeDecl):
            edges.append(d)
        elif isinstance(d, PreferDecl):
            prefs.append(d)
        elif isinstance(d, SetAttrDecl):
            set_attrs.append(d)
        elif isinstance(d, FormulaDecl):
            global_formulas.append(d)
        elif isinstance(d, AssertDecl):
            assertions[d.name] = d.value  # last write wins
        elif isinstance(d, SugarDecl):
            global_formulas.append(
                FormulaDecl(F.SugarApp(d.name, d.args), d.span)
            )
        else:  # pragma: no cover - defensive
            raise TypeError(f"unknown declaration {d!r}")

    # auto-declare Penalty/Reward when element sugar references them
    uses_penalty = any(d.penalty is not None for d in element_decls.values())
    uses_reward = any(d.reward is not None for d in element_decls.values())
    if uses_penalty and "Penalty" not in attr_decls and "Penalty" not in taken:
        taken["Penalty"] = "attribute"
        attr_decls["Penalty"] = AttrDecl("Penalty")
    if uses_reward and "Reward" not in attr_decls and "Reward" not in taken:
        taken["Reward"] = "attribute"
        attr_decls["Reward"] = AttrDecl("Reward")

    element_names = set(element_decls)
    refinement_names = {label for label, _ in refine_decls}

    # per-element attribute values
    attr_sat: Dict[str, Dict[str, Fraction]] = {n: {} for n in element_names}
    attr_deny: Dict[str, Dict[str, Fraction]] = {n: {} for n in element_names}
    for name, d in element_decls.items():
        if d.penalty is not None:
            attr_sat[name]["Penalty"] = d.penalty
        if d.reward is not None:
            attr_sat[name]["Reward"] = d.reward
    for s in set_attrs:
        if s.element not in element_names:
            err("UnknownReference", f"set: no element named {s.element!r}", s.span)
            continue
        if s.attr not in attr_decls:
            err("UnknownReference", f"set: no attribute named {s.attr!r}", s.span)
            continue
        if s.sat is not None:
            attr_sat[s.element][s.attr] = s.sat
        if s.deny is not None:
            attr_deny[s.element][s.attr] = s.deny

    # reference checks inside formulas/terms
    def check_formula(f: F.Formula, where: str, span: Optional[SourceSpan]) -> None:
        for p in F.iter_props(f):
            if p not in element_names and p not in refinement_names:
                err("UnknownReference", f"{where}: unknown proposition {p!r}", span)
        for v in F.iter_numvars(f):
            check_numvar(v, where, span)

    def check_numvar(v: str, where: str, span: Optional[SourceSpan]) -> None:
        if "." in v:
            elem, _, attr = v.partition(".")
            if elem not in element_names:
                err("UnknownReference", f"{where}: unknown element {elem!r} in {v!r}", span)
            if attr not in attr_decls:
                err("UnknownReference", f"{where}: unknown attribute {attr!r} in {v!r}", span)
            return
        if v in attr_decls:
            return
        if any(v == name for name, _ in objective_decls):
            return
        err("UnknownReference", f"{where}: unknown numeric variable {v!r}", span)

    for name, d in element_decls.items():
        if d.prereq_pos is not None:
            check_formula(d.prereq_pos, f"prereq+ of {name}", d.span)
        if d.prereq_neg is not None:
            check_formula(d.prereq_neg, f"prereq- of {name}", d.span)

    # refinements: structural rules
    refinements: list = []
    for label, d in refine_decls:
        ok = True
        if not d.sources:
            err("EmptySources", f"refinement {label} has no sources", d.span)
            ok = False
        if len(set(d.sources)) != len(d.sources):
            err("DuplicateSource", f"refinement {label} repeats a source", d.span)
            ok = False
        if d.target not in element_names:
            err("UnknownReference", f"refinement {label}: unknown target {d.target!r}", d.span)
            ok = False
        for s in d.sources:
            if s not in element_names:
                err("UnknownReference", f"refinement {label}: unknown source {s!r}", d.span)
                ok = False
        if d.target in d.sources:
            err("RefinementCycle", f"refinement {label} targets one of its sources", d.span)
            ok = False
        if ok:
            tkind = element_decls[d.target].kind
            skinds = [element_decls[s].kind for s in d.sources]
            if tkind == Kind.ASSUMPTION and any(k != Kind.ASSUMPTION for k in skinds):
                err(
                    "AssumptionRefinementSourceKind",
                    f"refinement {label}: assumption target requires assumption-only sources",
                    d.span,
                )
            if tkind == Kind.GOAL and all(k != Kind.GOAL for k in skinds):
                err(
                    "AssumptionRefinementSourceKind",
                    f"refinement {label}: goal target requires at least one goal source",
                    d.span,
                )
        if d.prereq_pos is not None:
            check_formula(d.prereq_pos, f"prereq+ of {label}", d.span)
        if d.prereq_neg is not None:
            check_formula(d.prereq_neg, f"prereq- of {label}", d.span)
        refinements.append(
            Refinement(
                id=label,
                target=d.target,
                sources=tuple(d.sources),
                prereq_pos=d.prereq_pos or F.TRUE,
                prereq_neg=d.prereq_neg or F.TRUE,
            )
        )

    # DAG check over the refinement graph (target depends on sources)
    if not errs:
        deps: Dict[str, list] = {n: [] for n in element_names}
        for r in refinements:
            deps[r.target].extend(r.sources)
        state: Dict[str, int] = {}

        def dfs(n: str, stack: list) -> None:
            state[n] = 1
            for s in deps[n]:
                if state.get(s) == 1:
                    cyc = stack[stack.index(s):] if s in stack else [s]
                    err(
                        "RefinementCycle",
                        "refinement graph has a cycle through " + " -> ".join(cyc + [s]),
                    )
                    continue
                if s not in state:
                    dfs(s, stack + [s])
            state[n] = 2

        for n in sorted(element_names):
            if n not in state:
                dfs(n, [n])

    # edges
    rel_edges: list = []
    for d in edges:
        if d.kind == "binding":
            for endpoint in (d.a, d.b):
                if endpoint not in refinement_names:
                    err("UnknownReference", f"bind: {endpoint!r} is not a refinement", d.span)
        else:
            for endpoint in (d.a, d.b):
                if endpoint not in element_names:
                    err("UnknownReference", f"{d.kind}: {endpoint!r} is not an element", d.span)
        rel_edges.append(RelationEdge(d.kind, d.a, d.b))

    for d in global_formulas:
        check_formula(d.formula, "formula", d.span)

    for name, value in list(assertions.items()):
        if name not in element_names:
            err("UnknownReference", f"assert: no element named {name!r}")
            del assertions[name]

    # objectives
    objectives: list = []
    for name, d in objective_decls:
        if d.predefined is not None:
            objectives.append(Objective(name, d.direction, d.predefined))
        else:
            for v in F.iter_term_numvars(d.body):
                check_numvar(v, f"objective {name}", d.span)
            for p in _term_props(d.body):
                if p not in element_names and p not in refinement_names:
                    err("UnknownReference", f"objective {name}: unknown proposition {p!r}", d.span)
            objectives.append(Objective(name, d.direction, d.body))

    for a in attr_decls.values():
        if a.term is not None:
            for v in F.iter_term_numvars(a.term):
                check_numvar(v, f"attr {a.name}", a.span)
            for p in _term_props(a.term):
                if p not in element_names and p not in refinement_names:
                    err("UnknownReference", f"attr {a.name}: unknown proposition {p!r}", a.span)

    # preference kinds must match; needs a draft model for classification
    elements = tuple(
        Element(
            id=d.name,
            kind=d.kind,
            display_name=d.display_name or d.name,
            prereq_pos=d.prereq_pos or F.TRUE,
            prereq_neg=d.prereq_neg or F.TRUE,
            attr_on_sat=tuple(sorted(attr_sat.get(d.name, {}).items())),
            attr_on_deny=tuple(sorted(attr_deny.get(d.name, {}).items())),
        )
        for d in element_decls.values()
    )
    attributes = tuple(
        AttributeDecl(a.name, a.term if a.term is not None else "sum")
        for a in attr_decls.values()
    )

    model = CGM(
        elements=elements,
        refinements=tuple(refinements),
        relation_edges=tuple(rel_edges),
        preferences=tuple(Preference(p.preferred, p.over) for p in prefs),
        attributes=attributes,
        objectives=tuple(objectives),
        global_formulas=tuple(d.formula for d in global_formulas),
        assertions=tuple(sorted(assertions.items())),
    )

    if not errs:
        cls = classify(model)
        emap = model._element_map()
        for e in model.elements:
            if e.kind == Kind.ASSUMPTION and e.id in cls.roots:
                err("AssumptionRoot", f"domain assumption {e.id!r} cannot be a root element")
        for p in prefs:
            ka = _pref_category(p.preferred, model, cls)
            kb = _pref_category(p.over, model, cls)
            if ka is None:
                err("UnknownReference", f"prefer: unknown label {p.preferred!r}", p.span)
            if kb is None:
                err("UnknownReference", f"prefer: unknown label {p.over!r}", p.span)
            if ka is not None and kb is not None and ka != kb:
                err(
                    "PreferenceKindMismatch",
                    f"prefer: {p.preferred!r} is a {ka} but {p.over!r} is a {kb}",
                    p.span,
                )

    if errs:
        raise InvalidModel(ValidationReport(tuple(errs)))
    return model


def _pref_category(label: str, m: CGM, cls: Classification) -> Optional[str]:
    """Preference category: refinements, or the element's role bucket."""
    if label in m._refinement_map():
        return "refinement"
    e = m._element_map().get(label)
    if e is None:
        return None
    if e.kind == Kind.ASSUMPTION:
        return "domain assumption"
    if label in cls.requirements:
        return "requirement"
    if label in cls.tasks:
        return "task"
    return "intermediate goal"


def _term_props(t: F.Term) -> Iterable[str]:
    if isinstance(t, F.Ite):
        yield from F.iter_props(t.cond)
        yield from _term_props(t.then)
        yield from _term_props(t.orelse)
    elif isinstance(t, F.Scale):
        yield from _term_props(t.term)
    elif isinstance(t, F.Add):
        for s in t.terms:
            yield from _term_props(s)
