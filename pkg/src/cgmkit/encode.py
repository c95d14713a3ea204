"""Lowering of a model to its SMT(LRA) form: hard constraint groups + objectives.

The encoded problem is the conjunction of
  - backbone: for each refinement R, ((and of sources) <-> R) and (R -> target);
  - closed world: for each element with refinements, E -> (or of its refinements);
  - relation edges, user assertions, prerequisite formulas, attribute guards
    and sums, user global formulas, and objective definitions.

Every constraint carries a group tag that maps back to a model entity so
unsatisfiable cores can be reported in model vocabulary.  All ``ite`` terms
are eliminated with fresh guarded variables, so downstream consumers only
see pure linear terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from . import formulas as F
from .model import CGM, Classification, PREDEFINED_OBJECTIVES, classify


class EncodeError(Exception):
    pass


class MissingAttribute(EncodeError):
    pass


class ArityError(EncodeError):
    pass


class StaleRealization(EncodeError):
    pass


@dataclass(frozen=True)
class GroupTag:
    """Origin of a hard-constraint group, in model vocabulary."""

    origin: str  # Backbone | ClosedWorld | RelationEdge | Prerequisite | GlobalFormula | UserAssertion | AttributeDefault | ObjectiveDef
    ref: str = ""
    detail: str = ""

    def describe(self) -> str:
        if self.detail:
            return f"{self.origin}({self.ref}:{self.detail})"
        if self.ref:
            return f"{self.origin}({self.ref})"
        return self.origin


@dataclass
class EncodedProblem:
    boolean_vars: Dict[str, int]  # model label -> var index
    numeric_vars: Dict[str, int]  # numeric symbol -> var index
    hard_constraints: List[Tuple[GroupTag, F.Formula]]
    objectives: List[Tuple[str, F.Term]]  # (direction, ite-free term)
    projection: Set[int]  # boolean var indexes for enumeration blocking

    def debug_dump(self) -> str:
        """One constraint per line, group tag prefixed; stable across runs."""
        from .dsl.printer import formula, term

        lines = [
            f"bool {i} {label}" for label, i in self.boolean_vars.items()
        ]
        lines += [f"num {i} {name}" for name, i in self.numeric_vars.items()]
        lines += [
            f"[{tag.describe()}] {formula(f)}" for tag, f in self.hard_constraints
        ]
        lines += [
            f"objective {direction} {term(t)}" for direction, t in self.objectives
        ]
        return "\n".join(lines) + "\n"


# --- individual lowerings ----------------------------------------------------


def encode_backbone(m: CGM) -> List[Tuple[GroupTag, F.Formula]]:
    """And-or semantics: refinement biconditionals plus closed-world disjunctions."""
    out: List[Tuple[GroupTag, F.Formula]] = []
    for r in m.refinements:
        conj_sources = F.conj(*(F.Prop(s) for s in r.sources))
        out.append(
            (
                GroupTag("Backbone", r.id),
                F.And((F.Iff(conj_sources, F.Prop(r.id)), F.Implies(F.Prop(r.id), F.Prop(r.target)))),
            )
        )
    for e in m.elements:
        refs = m.refinements_of(e.id)
        if refs:
            out.append(
                (
                    GroupTag("ClosedWorld", e.id),
                    F.Implies(F.Prop(e.id), F.disj(*(F.Prop(r.id) for r in refs))),
                )
            )
    return out


def lower_relations(m: CGM) -> List[Tuple[GroupTag, F.Formula]]:
    """Relation edges and user assertions as unit/structural constraints."""
    out: List[Tuple[GroupTag, F.Formula]] = []
    for i, e in enumerate(m.relation_edges):
        tag = GroupTag("RelationEdge", f"{i}", e.describe())
        if e.kind == "contribution":
            f: F.Formula = F.Implies(F.Prop(e.a), F.Prop(e.b))
        elif e.kind == "mutual":
            f = F.And((F.Implies(F.Prop(e.a), F.Prop(e.b)), F.Implies(F.Prop(e.b), F.Prop(e.a))))
        elif e.kind == "conflict":
            f = F.Not(F.And((F.Prop(e.a), F.Prop(e.b))))
        else:  # binding
            t1 = m.refinement(e.a).target
            t2 = m.refinement(e.b).target
            f = F.Implies(
                F.And((F.Prop(t1), F.Prop(t2))),
                F.Iff(F.Prop(e.a), F.Prop(e.b)),
            )
        out.append((tag, f))
    for label, value in m.assertions:
        f = F.Prop(label) if value else F.Not(F.Prop(label))
        out.append((GroupTag("UserAssertion", label, "true" if value else "false"), f))
    return out


def lower_sugar(app: F.SugarApp) -> F.Formula:
    """Expand a sugar predicate into its plain Boolean form."""
    args = app.args
    props = [F.Prop(a) for a in args]
    if app.name in ("Alt", "Causes", "Requires"):
        if len(args) != 2:
            raise ArityError(f"{app.name} takes exactly 2 arguments, got {len(args)}")
        if app.name == "Alt":
            return F.Iff(props[0], F.Not(props[1]))
        return F.Implies(props[0], props[1])
    if len(args) < 1:
        raise ArityError(f"{app.name} needs at least one argument")
    at_most = F.conj(
        *(
            F.Or((F.Not(props[i]), F.Not(props[j])))
            for i in range(len(args))
            for j in range(i + 1, len(args))
        )
    )
    at_least = F.Or(tuple(props))
    if app.name == "AtMostOneOf":
        return at_most
    if app.name == "AtLeastOneOf":
        return at_least
    return F.conj(at_most, at_least)  # OneOf


def desugar(f: F.Formula) -> F.Formula:
    if isinstance(f, F.SugarApp):
        return lower_sugar(f)
    if isinstance(f, F.Not):
        return F.Not(desugar(f.arg))
    if isinstance(f, F.And):
        return F.And(tuple(desugar(a) for a in f.args))
    if isinstance(f, F.Or):
        return F.Or(tuple(desugar(a) for a in f.args))
    if isinstance(f, F.Implies):
        return F.Implies(desugar(f.lhs), desugar(f.rhs))
    if isinstance(f, F.Iff):
        return F.Iff(desugar(f.lhs), desugar(f.rhs))
    if isinstance(f, F.Cmp):
        return F.Cmp(_desugar_term(f.lhs), f.op, _desugar_term(f.rhs))
    return f


def _desugar_term(t: F.Term) -> F.Term:
    if isinstance(t, F.Ite):
        return F.Ite(desugar(t.cond), _desugar_term(t.then), _desugar_term(t.orelse))
    if isinstance(t, F.Scale):
        return F.Scale(t.coeff, _desugar_term(t.term))
    if isinstance(t, F.Add):
        return F.Add(tuple(_desugar_term(s) for s in t.terms))
    return t


class _IteLowerer:
    """Replaces ite terms by fresh guarded variables, bottom-up."""

    def __init__(self, fresh_prefix: str = "_u"):
        self.counter = 0
        self.prefix = fresh_prefix
        self.side: List[F.Formula] = []
        self.fresh: List[str] = []

    def term(self, t: F.Term) -> F.Term:
        if isinstance(t, F.Ite):
            cond = self.formula(t.cond)
            then = self.term(t.then)
            orelse = self.term(t.orelse)
            self.counter += 1
            u = f"{self.prefix}{self.counter}"
            self.fresh.append(u)
            uvar = F.Var(u)
            self.side.append(F.Implies(cond, F.Cmp(uvar, "=", then)))
            self.side.append(F.Implies(F.Not(cond), F.Cmp(uvar, "=", orelse)))
            return uvar
        if isinstance(t, F.Scale):
            return F.Scale(t.coeff, self.term(t.term))
        if isinstance(t, F.Add):
            return F.Add(tuple(self.term(s) for s in t.terms))
        return t

    def formula(self, f: F.Formula) -> F.Formula:
        if isinstance(f, F.Cmp):
            return F.Cmp(self.term(f.lhs), f.op, self.term(f.rhs))
        if isinstance(f, F.Not):
            return F.Not(self.formula(f.arg))
        if isinstance(f, F.And):
            return F.And(tuple(self.formula(a) for a in f.args))
        if isinstance(f, F.Or):
            return F.Or(tuple(self.formula(a) for a in f.args))
        if isinstance(f, F.Implies):
            return F.Implies(self.formula(f.lhs), self.formula(f.rhs))
        if isinstance(f, F.Iff):
            return F.Iff(self.formula(f.lhs), self.formula(f.rhs))
        return f


def lower_ite(t: F.Term, fresh_prefix: str = "_u") -> Tuple[F.Term, List[F.Formula], List[str]]:
    """Fresh-variable ite elimination: returns (pure term, guards, fresh var names)."""
    lw = _IteLowerer(fresh_prefix)
    pure = lw.term(t)
    return pure, lw.side, lw.fresh


# --- attribute support --------------------------------------------------------


def attribute_support(m: CGM, attr: str) -> List[str]:
    """Elements with a non-default value for ``attr``, in declaration order."""
    out = []
    for e in m.elements:
        if attr in dict(e.attr_on_sat) or attr in dict(e.attr_on_deny):
            out.append(e.id)
    return out


def elem_var(element: str, attr: str) -> str:
    return f"{element}.{attr}"


def lower_attributes(m: CGM, used_globals: Set[str]) -> Tuple[List[Tuple[GroupTag, F.Formula]], List[str]]:
    """Per-element guards for every supported (element, attribute) pair, plus
    the global definition for each attribute whose global variable is used.

    Returns (constraints, numeric var names in deterministic order)."""
    out: List[Tuple[GroupTag, F.Formula]] = []
    numerics: List[str] = []
    # global definitions first (declaration order), then per-element guards
    for a in m.attributes:
        if a.aggregate != "sum":
            numerics.append(a.id)
        elif a.id in used_globals:
            numerics.append(a.id)
    for a in m.attributes:
        support = attribute_support(m, a.id)
        if a.aggregate != "sum":
            out.append(
                (
                    GroupTag("AttributeDefault", a.id, "definition"),
                    F.Cmp(F.Var(a.id), "=", a.aggregate),
                )
            )
        elif a.id in used_globals:
            total = F.Add(tuple(F.Var(elem_var(e, a.id)) for e in support)) if support else F.Const(Fraction(0))
            out.append(
                (
                    GroupTag("AttributeDefault", a.id, "sum"),
                    F.Cmp(F.Var(a.id), "=", total),
                )
            )
    for e in m.elements:
        sat = dict(e.attr_on_sat)
        deny = dict(e.attr_on_deny)
        for a in m.attributes:
            if a.id not in sat and a.id not in deny:
                continue
            v = F.Var(elem_var(e.id, a.id))
            numerics.append(elem_var(e.id, a.id))
            sat_value = sat.get(a.id, Fraction(0))
            deny_value = deny.get(a.id, Fraction(0))
            tag = GroupTag("AttributeDefault", e.id, a.id)
            out.append(
                (
                    tag,
                    F.And(
                        (
                            F.Implies(F.Prop(e.id), F.Cmp(v, "=", F.Const(sat_value))),
                            F.Implies(F.Not(F.Prop(e.id)), F.Cmp(v, "=", F.Const(deny_value))),
                        )
                    ),
                )
            )
    return out, numerics


def lower_prerequisites(m: CGM) -> List[Tuple[GroupTag, F.Formula]]:
    out: List[Tuple[GroupTag, F.Formula]] = []
    for e in list(m.elements) + list(m.refinements):
        if e.prereq_pos != F.TRUE:
            out.append(
                (
                    GroupTag("Prerequisite", e.id, "+"),
                    F.Implies(F.Prop(e.id), e.prereq_pos),
                )
            )
        if e.prereq_neg != F.TRUE:
            out.append(
                (
                    GroupTag("Prerequisite", e.id, "-"),
                    F.Implies(F.Not(F.Prop(e.id)), e.prereq_neg),
                )
            )
    return out


def preference_formula(m: CGM, p) -> F.Formula:
    return F.Or((F.Prop(p.preferred), F.Not(F.Prop(p.over))))


def lower_preferences(m: CGM) -> Tuple[List[F.Formula], F.Term]:
    """numUnsatPrefs as a sum of ite indicators over the soft constraints."""
    terms: List[F.Term] = []
    for p in m.preferences:
        terms.append(F.Ite(preference_formula(m, p), F.Const(Fraction(0)), F.Const(Fraction(1))))
    total = F.Add(tuple(terms)) if terms else F.Const(Fraction(0))
    return [], total


# --- evolution ---------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionDelta:
    """Old model + realization against which evolution objectives are measured."""

    old_model: CGM
    old_satisfied: frozenset
    scope: Optional[frozenset] = None  # labels of interest; default all elements

    def partition(self, new_model: CGM) -> Tuple[List[str], List[str]]:
        """(new-only elements, common elements) of the new model, in scope."""
        old_elems = {e.id for e in self.old_model.elements}
        scope = self.scope
        e_new, e_common = [], []
        for e in new_model.elements:
            if scope is not None and e.id not in scope:
                continue
            (e_common if e.id in old_elems else e_new).append(e.id)
        return e_new, e_common


EVOLUTION_MODES = ("Hamming", "NewElements", "Both", "Effort")


def lower_evolution(delta: EvolutionDelta, new_model: CGM, mode: str) -> F.Term:
    """Objective term counting change w.r.t. the old realization."""
    if mode not in EVOLUTION_MODES:
        raise EncodeError(f"unknown evolution mode {mode!r}")
    e_new, e_common = delta.partition(new_model)
    zero, one = F.Const(Fraction(0)), F.Const(Fraction(1))
    terms: List[F.Term] = []
    if mode in ("Hamming", "Both"):
        for label in e_common:
            was_true = label in delta.old_satisfied
            same = F.Prop(label) if was_true else F.Not(F.Prop(label))
            terms.append(F.Ite(same, zero, one))
    if mode in ("NewElements", "Both"):
        for label in e_new:
            terms.append(F.Ite(F.Prop(label), one, zero))
    if mode == "Effort":
        tasks = classify(new_model).tasks
        common = set(e_common)
        for label in e_new + e_common:
            if label not in tasks:
                continue
            if label in common and label in delta.old_satisfied:
                continue  # already achieved before
            terms.append(F.Ite(F.Prop(label), one, zero))
    return F.Add(tuple(terms)) if terms else zero


# --- predefined objectives -----------------------------------------------------


def lower_predefined_objective(
    m: CGM, name: str, cls: Classification
) -> Tuple[F.Term, Optional[str]]:
    """Return (defining term with ite indicators, optional named variable).

    The named variable, when present, is constrained equal to the term and the
    objective minimizes the variable (the fixture counts rely on Weight being a
    real variable).  Counting objectives stay as named variables too so their
    values are reported exactly.
    """
    zero, one = F.Const(Fraction(0)), F.Const(Fraction(1))
    if name == "Weight":
        pen = attribute_support(m, "Penalty")
        rew = attribute_support(m, "Reward")
        if m.attribute("Penalty") is None or m.attribute("Reward") is None:
            raise MissingAttribute(
                "Weight needs Penalty and Reward attributes (declare them or use reward/penalty)"
            )
        parts: List[F.Term] = [F.Var(elem_var(e, "Penalty")) for e in pen]
        parts += [F.Scale(Fraction(-1), F.Var(elem_var(e, "Reward"))) for e in rew]
        term = F.Add(tuple(parts)) if parts else zero
        return term, "Weight"
    if name == "numUnsatPrefs":
        _, term = lower_preferences(m)
        return term, "numUnsatPrefs"
    if name == "numUnsatRequirements":
        nice = [r for r in sorted(cls.requirements) if r not in cls.mandatory]
        term = (
            F.Add(tuple(F.Ite(F.Prop(r), zero, one) for r in nice)) if nice else zero
        )
        return term, "numUnsatRequirements"
    if name == "numSatTasks":
        tasks = sorted(cls.tasks)
        term = (
            F.Add(tuple(F.Ite(F.Prop(t), one, zero) for t in tasks)) if tasks else zero
        )
        return term, "numSatTasks"
    raise EncodeError(f"unknown predefined objective {name!r}")


# --- full encoding -------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveSpec:
    """A resolved objective: id, direction, the term it optimizes, and whether
    the term must be materialized as a named variable (predefined objectives
    always are; user terms only when something else references their id)."""

    id: str
    direction: str
    term: F.Term
    predefined: bool = False


def resolve_objective(m: CGM, obj_id: str, cls: Classification, direction: Optional[str] = None) -> ObjectiveSpec:
    """Objective ids resolve to declared objectives, predefined names, or attributes."""
    o = m.objective(obj_id)
    if o is not None:
        body = o.body
        if isinstance(body, str):
            term, named = lower_predefined_objective(m, body, cls)
            return ObjectiveSpec(obj_id if named is None else named, direction or o.direction, term, True)
        return ObjectiveSpec(obj_id, direction or o.direction, body)
    if obj_id in PREDEFINED_OBJECTIVES:
        term, _ = lower_predefined_objective(m, obj_id, cls)
        return ObjectiveSpec(obj_id, direction or "min", term, True)
    if m.attribute(obj_id) is not None:
        return ObjectiveSpec(obj_id, direction or "min", F.Var(obj_id))
    raise EncodeError(f"unknown objective {obj_id!r}")


def encode(
    m: CGM,
    objective_order: Sequence[str] = (),
    directions: Optional[Dict[str, str]] = None,
    evolution: Optional[Tuple[EvolutionDelta, str]] = None,
) -> EncodedProblem:
    """Lower the whole model plus the requested objectives to an EncodedProblem.

    Deterministic for identical input: variables are numbered in declaration
    order, fresh ite variables in lowering order.
    """
    cls = classify(m)
    directions = directions or {}

    constraints: List[Tuple[GroupTag, F.Formula]] = []
    constraints += encode_backbone(m)
    constraints += lower_relations(m)
    constraints += lower_prerequisites(m)

    pending_globals: List[F.Formula] = []
    for i, f in enumerate(m.global_formulas):
        pending_globals.append(f)
        constraints.append((GroupTag("GlobalFormula", str(i)), f))

    # resolve objectives (may pull in predefined terms and named vars)
    objective_specs: List[ObjectiveSpec] = []
    if evolution is not None:
        delta, mode = evolution
        objective_specs.append(ObjectiveSpec(f"evolution{mode}", "min", lower_evolution(delta, m, mode)))
    for obj_id in objective_order:
        objective_specs.append(resolve_objective(m, obj_id, cls, directions.get(obj_id)))

    # which numeric symbols are referenced anywhere relevant?
    used: Set[str] = set()
    attr_ids = {a.id for a in m.attributes}

    for e in list(m.elements) + list(m.refinements):
        used.update(F.iter_numvars(e.prereq_pos))
        used.update(F.iter_numvars(e.prereq_neg))
    for f in m.global_formulas:
        used.update(F.iter_numvars(f))
    for a in m.attributes:
        if a.aggregate != "sum":
            used.update(F.iter_term_numvars(a.aggregate))
    for spec in objective_specs:
        used.update(F.iter_term_numvars(spec.term))
    # close over user objective definitions referenced by other terms
    user_obj_bodies = {o.id: o.body for o in m.objectives if not isinstance(o.body, str)}
    changed = True
    while changed:
        changed = False
        for oid, body in user_obj_bodies.items():
            if oid in used:
                before = len(used)
                used.update(F.iter_term_numvars(body))
                changed |= len(used) != before

    used_globals = used & attr_ids
    attr_constraints, attr_numerics = lower_attributes(m, used_globals)
    constraints += attr_constraints

    # objective definitional constraints: named var = term (ite-lowered below)
    numeric_order: List[str] = list(attr_numerics)
    objectives_out: List[Tuple[str, F.Term]] = []
    obj_def_constraints: List[Tuple[GroupTag, F.Formula]] = []
    defined: Set[str] = set()
    for spec in objective_specs:
        term = spec.term
        if isinstance(term, F.Var) and term.id in attr_ids:
            # plain attribute objective: optimize the attribute variable itself
            objectives_out.append((spec.direction, term))
            continue
        if not spec.predefined and spec.id not in used:
            # user-declared term objective nobody references: optimize directly
            objectives_out.append((spec.direction, term))
            continue
        # named definitional variable for reporting and strengthening
        name = spec.id
        if name not in defined:
            defined.add(name)
            obj_def_constraints.append(
                (GroupTag("ObjectiveDef", name), F.Cmp(F.Var(name), "=", term))
            )
            numeric_order.append(name)
        objectives_out.append((spec.direction, F.Var(name)))

    # user objective definitions referenced by other terms (dependency chain)
    needed_user_objs = [
        o for o in m.objectives
        if not isinstance(o.body, str) and o.id in used and o.id not in defined
    ]
    _check_definition_cycles(m)
    for o in needed_user_objs:
        defined.add(o.id)
        obj_def_constraints.append((GroupTag("ObjectiveDef", o.id), F.Cmp(F.Var(o.id), "=", o.body)))
        numeric_order.append(o.id)

    constraints += obj_def_constraints

    # desugar + ite-eliminate every constraint; fresh vars share one counter
    lowerer = _IteLowerer()
    final_constraints: List[Tuple[GroupTag, F.Formula]] = []
    for tag, f in constraints:
        pure = lowerer.formula(desugar(f))
        side = lowerer.side
        lowerer.side = []
        final_constraints.append((tag, pure))
        for g in side:
            final_constraints.append((tag, g))
    # objective terms optimized directly (no named variable) may carry ite too
    for i, (direction, term) in enumerate(objectives_out):
        pure_term = lowerer.term(_desugar_term(term))
        side = lowerer.side
        lowerer.side = []
        tag = GroupTag("ObjectiveDef", f"objective{i}")
        for g in side:
            final_constraints.append((tag, g))
        objectives_out[i] = (direction, pure_term)
    numeric_order += lowerer.fresh

    # variable numbering: labels in declaration order, then numerics
    boolean_vars = {label: i for i, label in enumerate(m.labels())}
    numeric_vars: Dict[str, int] = {}
    for name in numeric_order:
        if name not in numeric_vars:
            numeric_vars[name] = len(numeric_vars)
    # numerics mentioned by formulas but not declared above (dotted refs to
    # unsupported elements) get default-0 guards
    extra: List[str] = []
    for _, f in final_constraints:
        for v in F.iter_numvars(f):
            if v not in numeric_vars:
                numeric_vars[v] = len(numeric_vars)
                extra.append(v)
    for _, t in objectives_out:
        for v in F.iter_term_numvars(t):
            if v not in numeric_vars:
                numeric_vars[v] = len(numeric_vars)
                extra.append(v)
    for v in extra:
        if "." in v:
            elem, _, attr = v.partition(".")
            zero = F.Const(Fraction(0))
            final_constraints.append(
                (
                    GroupTag("AttributeDefault", elem, attr),
                    F.And(
                        (
                            F.Implies(F.Prop(elem), F.Cmp(F.Var(v), "=", zero)),
                            F.Implies(F.Not(F.Prop(elem)), F.Cmp(F.Var(v), "=", zero)),
                        )
                    ),
                )
            )

    return EncodedProblem(
        boolean_vars=boolean_vars,
        numeric_vars=numeric_vars,
        hard_constraints=final_constraints,
        objectives=objectives_out,
        projection=set(boolean_vars.values()),
    )


def _check_definition_cycles(m: CGM) -> None:
    """Objective/attribute definitions must not reference each other cyclically."""
    defs: Dict[str, List[str]] = {}
    for o in m.objectives:
        if not isinstance(o.body, str):
            defs[o.id] = [v for v in F.iter_term_numvars(o.body) if "." not in v]
    for a in m.attributes:
        if a.aggregate != "sum":
            defs[a.id] = [v for v in F.iter_term_numvars(a.aggregate) if "." not in v]
    state: Dict[str, int] = {}

    def dfs(n: str) -> None:
        state[n] = 1
        for s in defs.get(n, ()):
            if state.get(s) == 1:
                raise EncodeError(f"cyclic definition through {n!r} and {s!r}")
            if s in defs and s not in state:
                dfs(s)
        state[n] = 2

    for n in defs:
        if n not in state:
            dfs(n)
