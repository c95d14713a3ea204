"""Solver-vs-oracle tests on raw Boolean+LRA formulas: the oracle enumerates
atom assignments and checks conjunctions with Fourier-Motzkin."""

import itertools
from fractions import Fraction

import pytest

from cgmkit import formulas as F
from cgmkit.encode import EncodedProblem, GroupTag
from cgmkit.smt.solver import Budget, SmtSolver
from fm import feasible, minimize
from generators import random_formula_problem


def problem_for(formula, bools, nums, objective=None):
    return EncodedProblem(
        boolean_vars={b: i for i, b in enumerate(bools)},
        numeric_vars={n: i for i, n in enumerate(nums)},
        hard_constraints=[(GroupTag("GlobalFormula", "0"), formula)],
        objectives=[("min", objective)] if objective is not None else [],
        projection=set(range(len(bools))),
    )


def collect_atoms(f, out):
    if isinstance(f, F.Cmp):
        out.append(f)
    elif isinstance(f, F.Not):
        collect_atoms(f.arg, out)
    elif isinstance(f, (F.And, F.Or)):
        for a in f.args:
            collect_atoms(a, out)
    elif isinstance(f, (F.Implies, F.Iff)):
        collect_atoms(f.lhs, out)
        collect_atoms(f.rhs, out)


def eval_bool_structure(f, benv, aenv):
    """Truth of the formula under Boolean env + fixed atom truth values."""
    if isinstance(f, F.Cmp):
        return aenv[id(f)]
    if isinstance(f, F.Prop):
        return benv[f.label]
    if f == F.TRUE:
        return True
    if f == F.FALSE:
        return False
    if isinstance(f, F.Not):
        return not eval_bool_structure(f.arg, benv, aenv)
    if isinstance(f, F.And):
        return all(eval_bool_structure(a, benv, aenv) for a in f.args)
    if isinstance(f, F.Or):
        return any(eval_bool_structure(a, benv, aenv) for a in f.args)
    if isinstance(f, F.Implies):
        return (not eval_bool_structure(f.lhs, benv, aenv)) or eval_bool_structure(f.rhs, benv, aenv)
    if isinstance(f, F.Iff):
        return eval_bool_structure(f.lhs, benv, aenv) == eval_bool_structure(f.rhs, benv, aenv)
    raise TypeError(f)


def atom_constraints(atom, truth):
    """FM rows for an atom or its negation (equalities split into two rows)."""
    coeffs, const = F.linearize(F.term_sub(atom.lhs, atom.rhs))
    rows = []
    op = atom.op
    if not truth:
        op = {"<": ">=", "<=": ">", "=": "!=", ">=": "<", ">": "<="}[op]
    if op == "=":
        rows.append((dict(coeffs), const, False))
        rows.append(({v: -c for v, c in coeffs.items()}, -const, False))
    elif op in ("<", "<="):
        rows.append((dict(coeffs), const, op == "<"))
    elif op in (">", ">="):
        rows.append(({v: -c for v, c in coeffs.items()}, -const, op == ">"))
    else:  # disequality: split handled by caller
        return None
    return rows


def oracle_verdict_and_min(formula, bools, nums, objective=None):
    atoms = []
    collect_atoms(formula, atoms)
    atoms = list({id(a): a for a in atoms}.values())
    best = None
    seen_sat = False
    for bbits in itertools.product([False, True], repeat=len(bools)):
        benv = dict(zip(bools, bbits))
        for abits in itertools.product([False, True], repeat=len(atoms)):
            aenv = {id(a): v for a, v in zip(atoms, abits)}
            if not eval_bool_structure(formula, benv, aenv):
                continue
            rows = []
            ok = True
            for a, v in zip(atoms, abits):
                r = atom_constraints(a, v)
                if r is None:  # negated equality: branch on < and >
                    ok = None
                    break
                rows.extend(r)
            if ok is None:
                # expand the disequalities by branching
                branches = [[]]
                for a, v in zip(atoms, abits):
                    r = atom_constraints(a, v)
                    if r is not None:
                        for b in branches:
                            b.extend(r)
                    else:
                        coeffs, const = F.linearize(F.term_sub(a.lhs, a.rhs))
                        lt = (dict(coeffs), const, True)
                        gt = ({v2: -c for v2, c in coeffs.items()}, -const, True)
                        branches = [b + [lt] for b in branches] + [b + [gt] for b in branches]
                rowsets = branches
            else:
                rowsets = [rows]
            for rows in rowsets:
                if not feasible(rows):
                    continue
                seen_sat = True
                if objective is None:
                    return True, None
                coeffs, const = F.linearize(objective)
                r = minimize(dict(coeffs), const, rows)
                if r is None:
                    continue
                value, attained = r
                if value is None:
                    return True, (None, False)  # unbounded
                cand = (value, attained)
                if best is None or cand[0] < best[0] or (cand[0] == best[0] and cand[1] and not best[1]):
                    best = cand
    return seen_sat, best


def test_clausify_shapes():
    # (a <-> b) becomes the two binary clauses; (a & b) becomes two units
    f = F.Iff(F.Prop("a"), F.Prop("b"))
    s = SmtSolver(problem_for(f, ["a", "b"], []))
    assert sorted(sorted(c) for c in s.sat.clauses) == [[0, 3], [1, 2]]
    f2 = F.And((F.Prop("a"), F.Prop("b")))
    s2 = SmtSolver(problem_for(f2, ["a", "b"], []))
    assert s2.sat.clauses == []  # units go straight onto the trail
    assert s2.sat.trail == [0, 2]


def test_contradictory_bounds_unsat():
    f = F.And((
        F.Cmp(F.Var("x"), ">=", F.Const(Fraction(3))),
        F.Cmp(F.Var("x"), "<", F.Const(Fraction(3))),
    ))
    s = SmtSolver(problem_for(f, [], ["x"]))
    assert s.solve()[0] == "unsat"


def test_equality_atoms_and_negated_equality():
    f = F.And((
        F.Iff(F.Prop("p"), F.Cmp(F.Var("x"), "=", F.Const(Fraction(2)))),
        F.Not(F.Prop("p")),
        F.Cmp(F.Var("x"), ">=", F.Const(Fraction(2))),
        F.Cmp(F.Var("x"), "<=", F.Const(Fraction(2))),
    ))
    s = SmtSolver(problem_for(f, ["p"], ["x"]))
    assert s.solve()[0] == "unsat"


def test_model_values_exact_and_strict():
    f = F.And((
        F.Cmp(F.Var("x"), ">", F.Const(Fraction(1, 3))),
        F.Cmp(F.Var("x"), "<", F.Const(Fraction(2, 3))),
        F.Cmp(F.Add((F.Var("x"), F.Var("y"))), "=", F.Const(Fraction(1))),
    ))
    s = SmtSolver(problem_for(f, [], ["x", "y"]))
    status, model = s.solve()
    assert status == "sat"
    x, y = model["nums"]["x"], model["nums"]["y"]
    assert Fraction(1, 3) < x < Fraction(2, 3)
    assert x + y == 1


@pytest.mark.parametrize("seed", range(160))
def test_random_formulas_match_fm_oracle(seed):
    formula, bools, nums = random_formula_problem(seed)
    want_sat, _ = oracle_verdict_and_min(formula, bools, nums)
    s = SmtSolver(problem_for(formula, bools, nums), seed=seed % 5)
    status, model = s.solve(budget=Budget(seconds=30))
    assert status in ("sat", "unsat")
    assert (status == "sat") == want_sat
    if status == "sat":
        # independent evaluation of the model
        from cgmkit.reason import _eval_formula

        sat_labels = frozenset(l for l, v in model["bools"].items() if v)
        assert _eval_formula(formula, sat_labels, model["nums"]) is True
