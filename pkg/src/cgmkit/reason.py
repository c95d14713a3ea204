"""User-level reasoning: realizability, enumeration, optimization, unsat-core
reporting in model vocabulary, implicit-constraint entailment, and evolution
analysis.  Every returned realization is re-verified by the independent
(solver-free) realization checker before it leaves this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

from . import formulas as F
from .encode import (
    EncodedProblem,
    EvolutionDelta,
    GroupTag,
    StaleRealization,
    encode,
)
from .model import CGM, classify
from .smt.solver import Budget, SmtSolver

DEFAULT_TIMEOUT_S = 1000.0  # batch default; services set a lower interactive cap


@dataclass(frozen=True)
class Realization:
    satisfied: FrozenSet[str]
    numeric_values: Dict[str, Fraction] = field(default_factory=dict)
    objective_values: Optional[Tuple[Fraction, ...]] = None
    attained: bool = True


@dataclass(frozen=True)
class CoreItem:
    """An unsat-core member mapped back to a model entity."""

    origin: str
    ref: str = ""
    detail: str = ""

    def describe(self) -> str:
        return GroupTag(self.origin, self.ref, self.detail).describe()


@dataclass(frozen=True)
class Realizable:
    realization: Realization


@dataclass(frozen=True)
class Unrealizable:
    core: Tuple[CoreItem, ...]


@dataclass(frozen=True)
class BudgetOutcome:
    best: Optional[Realization]
    bounds: Tuple[Fraction, ...] = ()


Outcome = object  # Realizable | Unrealizable | BudgetOutcome


class ReasonError(Exception):
    pass


def _mk_budget(budget) -> Budget:
    if budget is None:
        return Budget(seconds=DEFAULT_TIMEOUT_S)
    if isinstance(budget, Budget):
        return budget
    return Budget(seconds=float(budget))


def _decode(model: Dict) -> Realization:
    satisfied = frozenset(l for l, v in model["bools"].items() if v)
    return Realization(satisfied=satisfied, numeric_values=dict(model["nums"]))


def _core_items(tags: Sequence[GroupTag]) -> Tuple[CoreItem, ...]:
    return tuple(sorted(
        (CoreItem(t.origin, t.ref, t.detail) for t in tags),
        key=lambda c: (c.origin, c.ref, c.detail),
    ))


def _verified(m: CGM, problem: EncodedProblem, r: Realization) -> Realization:
    violations = check_realization(m, r, problem=problem)
    if violations:
        raise ReasonError(
            "internal error: solver model fails the independent checker: "
            + "; ".join(violations[:3])
        )
    return r


# -- realizability -----------------------------------------------------------------


def check_realizability(m: CGM, budget=None, seed: int = 0) -> Outcome:
    budget = _mk_budget(budget).start()
    problem = encode(m)
    solver = SmtSolver(problem, seed=seed)
    status, model = solver.solve(budget=budget)
    if status == "sat":
        return Realizable(_verified(m, problem, _decode(model)))
    if status == "budget":
        return BudgetOutcome(best=None)
    core_solver = SmtSolver(problem, enable_cores=True, seed=seed)
    try:
        tags = core_solver.unsat_core(budget=budget)
    except Exception:
        return Unrealizable(core=())
    return Unrealizable(core=_core_items(tags or ()))


def find_realization(m: CGM, budget=None, seed: int = 0) -> Outcome:
    return check_realizability(m, budget=budget, seed=seed)


def model_core(m: CGM, budget=None, seed: int = 0) -> Outcome:
    """Like check_realizability but always reports the minimal core when unsat."""
    return check_realizability(m, budget=budget, seed=seed)


# -- optimization ---------------------------------------------------------------------


def optimize(
    m: CGM,
    lex_ids: Sequence[str],
    budget=None,
    directions: Optional[Dict[str, str]] = None,
    seed: int = 0,
    canonical_witness: bool = True,
) -> Outcome:
    """Lexicographically optimize the named objectives (user, predefined, or
    attribute ids); the returned realization carries objectiveValues in order."""
    if not lex_ids:
        return check_realizability(m, budget=budget, seed=seed)
    budget = _mk_budget(budget).start()
    problem = encode(m, lex_ids, directions=directions)
    solver = SmtSolver(problem, seed=seed)
    status, values, model, attained = solver.optimize(budget=budget)
    if status == "unsat":
        core_solver = SmtSolver(problem, enable_cores=True, seed=seed)
        try:
            tags = core_solver.unsat_core(budget=budget)
        except Exception:
            return Unrealizable(core=())
        return Unrealizable(core=_core_items(tags or ()))
    if status in ("budget", "unbounded"):
        best = None
        if model is not None:
            best = replace(_decode(model), objective_values=tuple(values), attained=False)
        return BudgetOutcome(best=best, bounds=tuple(values))
    realization = replace(
        _decode(model), objective_values=tuple(values), attained=all(attained)
    )
    if canonical_witness and all(attained):
        canonical = _canonical_witness(m, problem, values, seed, budget)
        if canonical is not None:
            realization = replace(
                canonical, objective_values=tuple(values), attained=True
            )
    return Realizable(_verified(m, problem, realization))


def _canonical_witness(
    m: CGM, problem: EncodedProblem, values: Sequence[Fraction], seed: int,
    budget: Optional[Budget] = None,
) -> Optional[Realization]:
    """Deterministic optimal witness: re-solve with the optima pinned, using a
    static decision order (declaration order, deny-first phase)."""
    pins = []
    for (direction, term), v in zip(problem.objectives, values):
        pins.append((GroupTag("ObjectiveDef", "pin"), F.Cmp(term, "=", F.Const(Fraction(v)))))
    pinned = EncodedProblem(
        boolean_vars=problem.boolean_vars,
        numeric_vars=problem.numeric_vars,
        hard_constraints=list(problem.hard_constraints) + pins,
        objectives=[],
        projection=problem.projection,
    )
    solver = SmtSolver(pinned, seed=seed, static_order=True)
    status, model = solver.solve(budget=budget or Budget(seconds=30))
    if status != "sat":
        return None
    return _decode(model)


# -- enumeration ------------------------------------------------------------------------


def enumerate_realizations(
    m: CGM, limit: Optional[int] = None, budget=None, seed: int = 0
) -> Iterator[Realization]:
    budget = _mk_budget(budget).start()
    problem = encode(m)
    solver = SmtSolver(problem, seed=seed)
    for model in solver.enumerate_models(limit=limit, budget=budget):
        yield _verified(m, problem, _decode(model))


# -- independent realization checking -----------------------------------------------------


def check_realization(
    m: CGM, r: Realization, problem: Optional[EncodedProblem] = None
) -> List[str]:
    """Solver-free verification of realization conditions; returns violations.

    Missing numeric values are derived where the encoding determines them
    (per-element guards, attribute sums, definitional equalities), so purely
    Boolean realizations can be checked too.
    """
    violations: List[str] = []
    labels = set(m.labels())
    unknown = r.satisfied - labels
    if unknown:
        violations.append(f"unknown labels in realization: {sorted(unknown)}")
        return violations
    sat = r.satisfied

    # condition (a): refinement <-> conjunction of sources, refinement -> target
    for ref in m.refinements:
        all_sources = all(s in sat for s in ref.sources)
        if (ref.id in sat) != all_sources:
            violations.append(
                f"refinement {ref.id}: value must equal the conjunction of its sources"
            )
        if ref.id in sat and ref.target not in sat:
            violations.append(f"refinement {ref.id}: satisfied but target {ref.target} is not")
    # condition (b): satisfied refined element needs a satisfied refinement
    for e in m.elements:
        refs = m.refinements_of(e.id)
        if refs and e.id in sat and not any(x.id in sat for x in refs):
            violations.append(f"element {e.id}: satisfied without any satisfied refinement")
    # condition (c): all lowered constraints hold
    if problem is None:
        problem = encode(m)
    env = dict(r.numeric_values)
    _derive_numerics(problem, sat, env)
    for tag, f in problem.hard_constraints:
        ok = _eval_formula(f, sat, env)
        if ok is None:
            violations.append(f"[{tag.describe()}] cannot evaluate (missing numeric value)")
        elif not ok:
            violations.append(f"[{tag.describe()}] violated")
    return violations


def _derive_numerics(problem: EncodedProblem, sat: FrozenSet[str], env: Dict[str, Fraction]) -> None:
    """Fixpoint over definitional equalities to fill in determined values."""
    pending = True
    while pending:
        pending = False
        for _, f in problem.hard_constraints:
            for g in _active_equalities(f, sat, env):
                lhs, rhs = g
                if lhs.id in env:
                    continue
                v = _eval_term(rhs, sat, env)
                if v is not None:
                    env[lhs.id] = v
                    pending = True


def _active_equalities(f: F.Formula, sat: FrozenSet[str], env) -> Iterator[Tuple[F.Var, F.Term]]:
    """Equalities Var = term whose guards hold under the Boolean assignment."""
    if isinstance(f, F.Cmp) and f.op == "=" and isinstance(f.lhs, F.Var):
        yield (f.lhs, f.rhs)
    elif isinstance(f, F.And):
        for a in f.args:
            yield from _active_equalities(a, sat, env)
    elif isinstance(f, F.Implies):
        guard = _eval_formula(f.lhs, sat, env)
        if guard:
            yield from _active_equalities(f.rhs, sat, env)


def _eval_term(t: F.Term, sat: FrozenSet[str], env) -> Optional[Fraction]:
    if isinstance(t, F.Const):
        return t.value
    if isinstance(t, F.Var):
        return env.get(t.id)
    if isinstance(t, F.Scale):
        v = _eval_term(t.term, sat, env)
        return None if v is None else t.coeff * v
    if isinstance(t, F.Add):
        total = Fraction(0)
        for s in t.terms:
            v = _eval_term(s, sat, env)
            if v is None:
                return None
            total += v
        return total
    if isinstance(t, F.Ite):
        c = _eval_formula(t.cond, sat, env)
        if c is None:
            return None
        return _eval_term(t.then if c else t.orelse, sat, env)
    raise TypeError(f"not a term: {t!r}")


def _eval_formula(f: F.Formula, sat: FrozenSet[str], env) -> Optional[bool]:
    if f == F.TRUE:
        return True
    if f == F.FALSE:
        return False
    if isinstance(f, F.Prop):
        return f.label in sat
    if isinstance(f, F.SugarApp):
        from .encode import lower_sugar

        return _eval_formula(lower_sugar(f), sat, env)
    if isinstance(f, F.Cmp):
        lhs = _eval_term(f.lhs, sat, env)
        rhs = _eval_term(f.rhs, sat, env)
        if lhs is None or rhs is None:
            return None
        return {
            "<": lhs < rhs,
            "<=": lhs <= rhs,
            "=": lhs == rhs,
            ">=": lhs >= rhs,
            ">": lhs > rhs,
        }[f.op]
    if isinstance(f, F.Not):
        v = _eval_formula(f.arg, sat, env)
        return None if v is None else not v
    if isinstance(f, F.And):
        out: Optional[bool] = True
        for a in f.args:
            v = _eval_formula(a, sat, env)
            if v is False:
                return False
            if v is None:
                out = None
        return out
    if isinstance(f, F.Or):
        out = False
        for a in f.args:
            v = _eval_formula(a, sat, env)
            if v is True:
                return True
            if v is None:
                out = None
        return out
    if isinstance(f, F.Implies):
        return _eval_formula(F.Or((F.Not(f.lhs), f.rhs)), sat, env)
    if isinstance(f, F.Iff):
        a = _eval_formula(f.lhs, sat, env)
        b = _eval_formula(f.rhs, sat, env)
        if a is None or b is None:
            return None
        return a == b
    raise TypeError(f"not a formula: {f!r}")


# -- implicit-constraint entailment ------------------------------------------------------


def entailed_implications(
    m: CGM, antecedent: str, all_elements: bool = False, budget=None, seed: int = 0
) -> Set[str]:
    """Elements forced false once the antecedent is asserted true.

    Candidates default to tasks and requirements; the full-element scan is a
    documented flag.
    """
    budget = _mk_budget(budget).start()
    problem = encode(m)
    solver = SmtSolver(problem, seed=seed)
    cls = classify(m)
    if all_elements:
        candidates = [e.id for e in m.elements if e.id != antecedent]
    else:
        candidates = [
            e.id
            for e in m.elements
            if e.id != antecedent and (e.id in cls.tasks or e.id in cls.requirements)
        ]
    out: Set[str] = set()
    base = solver.assume_label_lits([(antecedent, True)])
    for cand in candidates:
        status, _ = solver.solve(
            assumptions=base + solver.assume_label_lits([(cand, True)]), budget=budget
        )
        if status == "unsat":
            out.add(cand)
    return out


def combination_forced_false(
    m: CGM, antecedent: str, labels: Sequence[str], budget=None, seed: int = 0
) -> bool:
    """True when asserting the antecedent makes the label combination impossible."""
    budget = _mk_budget(budget).start()
    solver = SmtSolver(encode(m), seed=seed)
    assumptions = solver.assume_label_lits(
        [(antecedent, True)] + [(l, True) for l in labels]
    )
    status, _ = solver.solve(assumptions=assumptions, budget=budget)
    return status == "unsat"


def entailed_pair_exclusions(
    m: CGM, antecedent: str, budget=None, seed: int = 0
) -> Set[FrozenSet[str]]:
    """Pairs of tasks that cannot both hold under the antecedent (pair-check
    variant); pairs whose members are already singly forced false are skipped."""
    budget = _mk_budget(budget).start()
    problem = encode(m)
    solver = SmtSolver(problem, seed=seed)
    cls = classify(m)
    singles = entailed_implications(m, antecedent, budget=budget, seed=seed)
    tasks = [t for t in sorted(cls.tasks) if t != antecedent and t not in singles]
    base = solver.assume_label_lits([(antecedent, True)])
    out: Set[FrozenSet[str]] = set()
    for i, a in enumerate(tasks):
        for b in tasks[i + 1 :]:
            status, _ = solver.solve(
                assumptions=base + solver.assume_label_lits([(a, True), (b, True)]),
                budget=budget,
            )
            if status == "unsat":
                out.add(frozenset((a, b)))
    return out


# -- evolution ------------------------------------------------------------------------------


def evolve(
    m_old: CGM,
    r_old: Realization,
    m_new: CGM,
    mode: str = "Hamming",
    budget=None,
    seed: int = 0,
) -> Outcome:
    """Realization of the new model minimizing the selected evolution objective."""
    stale = check_realization(m_old, r_old)
    if stale:
        raise StaleRealization("; ".join(stale[:3]))
    budget = _mk_budget(budget).start()
    old_elements = {e.id for e in m_old.elements}
    delta = EvolutionDelta(
        old_model=m_old,
        old_satisfied=frozenset(r_old.satisfied & old_elements),
    )
    problem = encode(m_new, evolution=(delta, mode))
    solver = SmtSolver(problem, seed=seed)
    status, values, model, attained = solver.optimize(budget=budget)
    if status == "unsat":
        return Unrealizable(core=())
    if status in ("budget", "unbounded"):
        best = None
        if model is not None:
            best = replace(_decode(model), objective_values=tuple(values), attained=False)
        return BudgetOutcome(best=best, bounds=tuple(values))
    realization = replace(
        _decode(model), objective_values=tuple(values), attained=all(attained)
    )
    return Realizable(_verified(m_new, problem, realization))
