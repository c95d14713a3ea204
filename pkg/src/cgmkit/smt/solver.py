"""Lazy SMT(LRA) solving and OMT optimization over encoded problems.

Ties together the CDCL core, the exact simplex, structural clausification
with shared comparison atoms, linear-search optimization (single and
lexicographic), projected model enumeration, and deletion-based unsat-core
minimization over named constraint groups.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .. import formulas as F
from ..encode import EncodedProblem, GroupTag
from .rat import Delta, Q, to_fraction
from .sat import BudgetExhausted, SatSolver, TheoryHook, neg
from .simplex import Simplex, Unbounded


@dataclass
class Budget:
    """Wall-clock and conflict limits; shared across the phases of one request."""

    seconds: Optional[float] = None
    conflicts: Optional[int] = None
    _deadline: Optional[float] = field(default=None, init=False)

    def start(self) -> "Budget":
        if self.seconds is not None and self._deadline is None:
            self._deadline = time.monotonic() + self.seconds
        return self

    @property
    def deadline(self) -> Optional[float]:
        self.start()
        return self._deadline

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline


@dataclass
class SolveStats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    clauses: int = 0
    theory_checks: int = 0


class _Bridge(TheoryHook):
    """Binds atom SAT variables to simplex bounds."""

    def __init__(self, simplex: Simplex):
        self.simplex = simplex
        self.atom_of_var: Dict[int, Tuple[int, object, bool]] = {}  # satvar -> (simplex var, bound, strict)
        self.dirty = False
        self.checks = 0

    def is_theory_var(self, v: int) -> bool:
        return v in self.atom_of_var

    def mark(self) -> object:
        return self.simplex.mark()

    def pop_to(self, m: object) -> None:
        self.simplex.pop_to(m)

    def needs_check(self) -> bool:
        return self.dirty

    def assert_lit(self, l: int):
        svar, c, strict = self.atom_of_var[l >> 1]
        if l & 1 == 0:
            # atom true: v <= c (or v < c)
            bound = Delta(c, -1 if strict else 0)
            bad = self.simplex.assert_upper(svar, bound, l)
        else:
            # atom false: v >= c (strict atom) or v > c (non-strict atom)
            bound = Delta(c, 0 if strict else 1)
            bad = self.simplex.assert_lower(svar, bound, l)
        if bad is not None:
            return bad
        self.dirty = True
        return None

    def check(self):
        self.checks += 1
        bad = self.simplex.check()
        if bad is None:
            self.dirty = False
        return bad


class SmtSolver:
    """One solver instance per request; not shareable across threads."""

    def __init__(
        self,
        problem: EncodedProblem,
        enable_cores: bool = False,
        seed: int = 0,
        static_order: bool = False,
        trace=None,
    ):
        self.problem = problem
        self.simplex = Simplex()
        self.bridge = _Bridge(self.simplex)
        self.sat = SatSolver(theory=self.bridge, seed=seed, static_order=static_order, trace=trace)
        self.enable_cores = enable_cores

        # boolean label vars occupy the same indexes as in the encoding
        for _ in range(len(problem.boolean_vars)):
            self.sat.new_var()
        self.num_var: Dict[str, int] = {}
        for name in problem.numeric_vars:
            self.num_var[name] = self.simplex.new_var()

        self.selector_of_group: Dict[str, int] = {}
        self.group_of_selector: Dict[int, GroupTag] = {}
        if enable_cores:
            for tag, _ in problem.hard_constraints:
                key = tag.describe()
                if key not in self.selector_of_group:
                    s = self.sat.new_var()
                    self.selector_of_group[key] = s
                    self.group_of_selector[s] = tag

        self._slack_of_combo: Dict[tuple, int] = {}
        self._atom_var: Dict[tuple, int] = {}
        self._atoms_by_svar: Dict[int, list] = {}  # svar -> sorted [(bound, strictness rank, satvar)]
        self._neg_slack: Dict[int, int] = {}
        self._true_lit: Optional[int] = None
        self._objective_vars: List[Tuple[str, int, object]] = []  # (direction, simplex var, const offset)

        for tag, f in problem.hard_constraints:
            sel = self.selector_of_group.get(tag.describe()) if enable_cores else None
            extra = [neg(sel * 2)] if sel is not None else []
            self._assert_formula(f, extra)

        for direction, term in problem.objectives:
            svar, const = self._term_var(term)
            self._objective_vars.append((direction, svar, const))

    # -- clausification ----------------------------------------------------------

    def _term_var(self, term: F.Term) -> Tuple[int, object]:
        """Simplex variable representing an ite-free term, plus constant offset."""
        coeffs, const = F.linearize(term)
        coeffs = {k: Q(v.numerator) / Q(v.denominator) for k, v in coeffs.items() if v != 0}
        const = Q(const.numerator) / Q(const.denominator)
        if len(coeffs) == 1:
            (name, c), = coeffs.items()
            if c == 1:
                return self.num_var[name], const
        combo = {self.num_var[name]: c for name, c in coeffs.items()}
        key = tuple(sorted((v, str(c)) for v, c in combo.items()))
        if key not in self._slack_of_combo:
            self._slack_of_combo[key] = self.simplex.define_slack(combo)
        return self._slack_of_combo[key], const

    def _atom(self, lhs: F.Term, op: str, rhs: F.Term) -> int:
        """Literal for a comparison atom (equalities are split by the caller)."""
        diff = F.term_sub(lhs, rhs)
        coeffs, const = F.linearize(diff)
        coeffs = {k: v for k, v in coeffs.items() if v != 0}
        if not coeffs:
            truth = {
                "<": const < 0,
                "<=": const <= 0,
                ">=": const >= 0,
                ">": const > 0,
            }[op]
            return self._const_lit(truth)
        # normalize: scale so the lowest-index variable has coefficient +1
        names = sorted(coeffs, key=lambda n: self.problem.numeric_vars.get(n, 1 << 30))
        lead = coeffs[names[0]]
        scaled = {n: coeffs[n] / lead for n in names}
        bound = Fraction(-const) / lead
        if lead < 0:
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
        if len(scaled) == 1:
            svar = self.num_var[names[0]]
        else:
            combo = {self.num_var[n]: Q(c.numerator) / Q(c.denominator) for n, c in scaled.items()}
            key = tuple(sorted((v, str(c)) for v, c in combo.items()))
            if key not in self._slack_of_combo:
                self._slack_of_combo[key] = self.simplex.define_slack(combo)
            svar = self._slack_of_combo[key]
        qbound = Q(bound.numerator) / Q(bound.denominator)
        # canonical atoms are upper-sense; lower-sense comparisons are negations
        if op in ("<", "<="):
            strict = op == "<"
            return self._atom_lit(svar, qbound, strict)
        strict_dual = op == ">="  # v >= c  ==  not (v < c)
        return neg(self._atom_lit(svar, qbound, strict_dual))

    def _atom_lit(self, svar: int, bound, strict: bool) -> int:
        key = (svar, bound, strict)
        v = self._atom_var.get(key)
        if v is None:
            self.sat.cancel_until(0)
            v = self.sat.new_var()
            self._atom_var[key] = v
            self.bridge.atom_of_var[v] = (svar, bound, strict)
            self._link_atom(svar, bound, strict, v)
        return v * 2

    def _link_atom(self, svar: int, bound, strict: bool, v: int) -> None:
        """Bound-ordering lemmas: for atoms on one variable sorted by
        (bound, strict-before-nonstrict), each implies its successor.  These
        theory-valid binaries let plain BCP settle don't-care atoms without
        simplex round-trips."""
        import bisect

        chain = self._atoms_by_svar.setdefault(svar, [])
        entry = (bound, 0 if strict else 1, v)
        pos = bisect.bisect_left(chain, entry[:2], key=lambda e: (e[0], e[1]))
        chain.insert(pos, entry)
        if pos > 0:
            prev = chain[pos - 1][2]
            self.sat.add_clause([neg(prev * 2), v * 2])
        if pos + 1 < len(chain):
            nxt = chain[pos + 1][2]
            self.sat.add_clause([neg(v * 2), nxt * 2])

    def _const_lit(self, truth: bool) -> int:
        if self._true_lit is None:
            v = self.sat.new_var()
            self.sat.add_clause([v * 2])
            self._true_lit = v * 2
        return self._true_lit if truth else neg(self._true_lit)

    def _build(self, f: F.Formula) -> int:
        """Literal equivalent to f (Tseitin with full equivalences)."""
        if f == F.TRUE:
            return self._const_lit(True)
        if f == F.FALSE:
            return self._const_lit(False)
        if isinstance(f, F.Prop):
            return self.problem.boolean_vars[f.label] * 2
        if isinstance(f, F.Cmp):
            if f.op == "=":
                return self._build(F.And((F.Cmp(f.lhs, "<=", f.rhs), F.Cmp(f.lhs, ">=", f.rhs))))
            return self._atom(f.lhs, f.op, f.rhs)
        if isinstance(f, F.Not):
            return neg(self._build(f.arg))
        if isinstance(f, F.And):
            lits = [self._build(a) for a in f.args]
            if not lits:
                return self._const_lit(True)
            if len(lits) == 1:
                return lits[0]
            v = self.sat.new_var()
            d = v * 2
            for l in lits:
                self.sat.add_clause([neg(d), l])
            self.sat.add_clause([d] + [neg(l) for l in lits])
            return d
        if isinstance(f, F.Or):
            lits = [self._build(a) for a in f.args]
            if not lits:
                return self._const_lit(False)
            if len(lits) == 1:
                return lits[0]
            v = self.sat.new_var()
            d = v * 2
            for l in lits:
                self.sat.add_clause([neg(l), d])
            self.sat.add_clause([neg(d)] + lits)
            return d
        if isinstance(f, F.Implies):
            return self._build(F.Or((F.Not(f.lhs), f.rhs)))
        if isinstance(f, F.Iff):
            a = self._build(f.lhs)
            b = self._build(f.rhs)
            v = self.sat.new_var()
            d = v * 2
            self.sat.add_clause([neg(d), neg(a), b])
            self.sat.add_clause([neg(d), a, neg(b)])
            self.sat.add_clause([d, a, b])
            self.sat.add_clause([d, neg(a), neg(b)])
            return d
        raise TypeError(f"cannot clausify {f!r}")

    def _assert_formula(self, f: F.Formula, extra: List[int]) -> None:
        """Top-level assertion avoiding fresh variables for common shapes."""
        if isinstance(f, F.And):
            for a in f.args:
                self._assert_formula(a, extra)
            return
        if f == F.TRUE:
            return
        if isinstance(f, F.Implies):
            self._assert_formula(F.Or((F.Not(f.lhs), f.rhs)), extra)
            return
        if isinstance(f, F.Or):
            flat: List[F.Formula] = []
            stack = list(f.args)
            while stack:
                g = stack.pop(0)
                if isinstance(g, F.Or):
                    stack = list(g.args) + stack
                elif isinstance(g, F.Implies):
                    stack = [F.Not(g.lhs), g.rhs] + stack
                else:
                    flat.append(g)
            self.sat.add_clause(extra + [self._build(g) for g in flat])
            return
        if isinstance(f, F.Iff):
            a = self._build(f.lhs)
            b = self._build(f.rhs)
            self.sat.add_clause(extra + [neg(a), b])
            self.sat.add_clause(extra + [a, neg(b)])
            return
        if isinstance(f, F.Cmp) and f.op == "=":
            self._assert_formula(F.Cmp(f.lhs, "<=", f.rhs), extra)
            self._assert_formula(F.Cmp(f.lhs, ">=", f.rhs), extra)
            return
        self.sat.add_clause(extra + [self._build(f)])

    # -- solving -----------------------------------------------------------------

    def stats(self) -> SolveStats:
        return SolveStats(
            conflicts=self.sat.conflicts,
            decisions=self.sat.decisions,
            propagations=self.sat.propagations,
            clauses=len(self.sat.clauses),
            theory_checks=self.bridge.checks,
        )

    def _selector_assumptions(self) -> List[int]:
        return [s * 2 for s in self.selector_of_group.values()]

    def solve(self, assumptions: Sequence[int] = (), budget: Optional[Budget] = None):
        """('sat', model dict) | ('unsat', core set of assumption lits) | ('budget', None)."""
        budget = budget or Budget()
        base = list(self._selector_assumptions()) + list(assumptions)
        try:
            status, core = self.sat.solve(
                base, conflict_limit=budget.conflicts, deadline=budget.deadline
            )
        except BudgetExhausted:
            return "budget", None
        if status == "sat":
            return "sat", self.extract_model()
        return "unsat", core

    def assume_label_lits(self, lits: Sequence[Tuple[str, bool]]) -> List[int]:
        out = []
        for label, value in lits:
            v = self.problem.boolean_vars[label]
            out.append(v * 2 if value else v * 2 + 1)
        return out

    def extract_model(self) -> Dict[str, object]:
        """Boolean + exact rational assignment from the current SAT/simplex state."""
        bools = {}
        for label, v in self.problem.boolean_vars.items():
            bools[label] = self.sat.assigns[v] == 1
        delta = self.simplex.concrete_delta()
        nums = {}
        for name, sv in self.num_var.items():
            nums[name] = to_fraction(self.simplex.value(sv, delta))
        return {"bools": bools, "nums": nums}

    # -- optimization ---------------------------------------------------------------

    def minimize_under_model(self, obj_index: int):
        """Exact theory minimum of an objective under the current Boolean model."""
        direction, svar, const = self._objective_vars[obj_index]
        if direction == "min":
            v = self.simplex.minimize(svar)
            return Delta(v.a + const, v.b)
        # maximize: minimize is not directly available; emulate via negated slack
        raise NotImplementedError

    def optimize(self, budget: Optional[Budget] = None):
        """Lexicographic linear-search OMT over the encoded objective list.

        Returns (status, values, model, attained_flags):
          status 'sat'    - optimum found; values are Fractions in objective order
          status 'unsat'  - no realization at all
          status 'budget' - best-so-far model (may be None) with bounds for the
                            completed prefix plus the current objective
        """
        budget = (budget or Budget()).start()
        values: List[Fraction] = []
        attained: List[bool] = []
        best_model = None
        for direction, svar, const in self._objective_vars:
            best: Optional[Delta] = None  # internal minimization value (max negated)
            # strengthenings are gated so the attained-elsewhere recheck and the
            # following lexicographic levels can drop them again
            self.sat.cancel_until(0)
            guard = self.sat.new_var() * 2
            frame_vars = self.sat.nvars

            def partial():
                done = list(values)
                if best is not None:
                    signed = best if direction == "min" else Delta(-best.a, -best.b)
                    done.append(to_fraction(signed.a + const))
                return done

            while True:
                if budget.expired():
                    return "budget", partial(), best_model, attained
                status, model = self.solve(assumptions=[guard], budget=budget)
                if status == "budget":
                    return "budget", partial(), best_model, attained
                if status == "unsat":
                    break
                try:
                    if direction == "min":
                        v = self.simplex.minimize(svar)
                    else:
                        v = Delta(0, 0) - self._maximize(svar)  # negated: minimize form
                except Unbounded:
                    return "unbounded", values, model, attained
                if best is None or v < best:
                    best = v
                    best_model = self.extract_model()
                # strengthen: future models must improve on the delta-free value;
                # when the class minimum dips below it (delta-shifted pins from an
                # unattained earlier optimum), block the Boolean class instead
                if v.b >= 0:
                    self.sat.cancel_until(0)
                    if direction == "min":
                        l = self._atom_lit(svar, v.a, True)  # svar < value
                    else:
                        l = neg(self._atom_lit(svar, -v.a, False))  # svar > value
                    self.sat.add_clause([neg(guard), l])
                else:
                    blocking = [neg(guard)]
                    for bv in range(frame_vars):
                        if bv == guard >> 1:
                            continue
                        blocking.append(bv * 2 + 1 if self.sat.assigns[bv] == 1 else bv * 2)
                    self.sat.cancel_until(0)
                    self.sat.add_clause(blocking)
            if best is None:
                return "unsat", values, None, attained
            signed = best if direction == "min" else Delta(-best.a, -best.b)
            is_attained = best.b == 0
            if not is_attained and best.b > 0:
                # the infimum may still be attained by a different Boolean class
                lit = self._bound_lit(svar, signed.a, upper=(direction == "min"), strict=False)
                try:
                    status, _ = self.sat.solve(self._selector_assumptions() + [lit],
                                               conflict_limit=budget.conflicts,
                                               deadline=budget.deadline)
                except BudgetExhausted:
                    status = "unknown"
                if status == "sat":
                    is_attained = True
                    if direction == "min":
                        self.simplex.minimize(svar)
                    else:
                        self._maximize(svar)
                    best = Delta(best.a, 0)
                    signed = Delta(signed.a, 0)
                    best_model = self.extract_model()
            values.append(to_fraction(signed.a + const))
            attained.append(is_attained)
            # retire this level's strengthenings, pin the optimum: rational atom
            # units when attained, delta-exact simplex bounds otherwise
            self.sat.cancel_until(0)
            self.sat.add_clause([neg(guard)])
            if is_attained:
                le = self._atom_lit(svar, signed.a, False)        # svar <= value
                ge = neg(self._atom_lit(svar, signed.a, True))    # svar >= value
                self.sat.add_clause([le])
                self.sat.add_clause([ge])
            else:
                pin = signed
                self.simplex.assert_upper(svar, pin, None)
                self.simplex.assert_lower(svar, pin, None)
                self.bridge.dirty = True
        return "sat", values, best_model, attained

    def _maximize(self, svar: int) -> Delta:
        """Maximize svar by minimizing a -svar slack; returns the max value."""
        ns = self._neg_slack.get(svar)
        if ns is None:
            ns = self.simplex.define_slack({svar: Q(-1)})
            self._neg_slack[svar] = ns
        v = self.simplex.minimize(ns)
        return Delta(-v.a, -v.b)

    def _bound_lit(self, svar: int, bound, upper: bool, strict: bool) -> int:
        """Literal asserting svar <=/< bound (upper) or >=/> bound (lower)."""
        if upper:
            return self._atom_lit(svar, bound, strict)
        return neg(self._atom_lit(svar, bound, not strict))

    # -- enumeration ------------------------------------------------------------------

    def enumerate_models(self, limit: Optional[int] = None, budget: Optional[Budget] = None):
        """Yield models pairwise distinct on the projection set."""
        budget = (budget or Budget()).start()
        count = 0
        proj = sorted(self.problem.projection)
        while limit is None or count < limit:
            status, model = self.solve(budget=budget)
            if status != "sat":
                return
            yield model
            count += 1
            blocking = []
            for v in proj:
                blocking.append(v * 2 + 1 if self.sat.assigns[v] == 1 else v * 2)
            self.sat.cancel_until(0)
            if not self.sat.add_clause(blocking):
                return

    # -- unsat cores -------------------------------------------------------------------

    def unsat_core(self, budget: Optional[Budget] = None) -> Optional[List[GroupTag]]:
        """Group-minimal unsatisfiable core (requires enable_cores)."""
        if not self.enable_cores:
            raise RuntimeError("solver built without core support")
        budget = (budget or Budget()).start()
        status, core = self.solve(budget=budget)
        if status == "sat":
            return None
        if status == "budget":
            raise BudgetExhausted()
        current = sorted(l >> 1 for l in core)
        # deletion-based minimization over selector vars
        i = 0
        while i < len(current):
            trial = current[:i] + current[i + 1 :]
            assumptions = [s * 2 for s in trial]
            try:
                status, sub = self.sat.solve(assumptions, conflict_limit=budget.conflicts,
                                             deadline=budget.deadline)
            except BudgetExhausted:
                break
            if status == "unsat":
                current = sorted(l >> 1 for l in sub)
                i = 0
            else:
                i += 1
        return [self.group_of_selector[s] for s in current]

    def solve_with_groups(self, group_subset: Set[str], budget: Optional[Budget] = None):
        """Satisfiability with only the named groups enabled (cores mode only)."""
        budget = (budget or Budget()).start()
        assumptions = [
            s * 2 for key, s in self.selector_of_group.items() if key in group_subset
        ]
        try:
            status, _ = self.sat.solve(assumptions, conflict_limit=budget.conflicts,
                                       deadline=budget.deadline)
        except BudgetExhausted:
            return "budget"
        return status
