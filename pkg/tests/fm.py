"""Fourier-Motzkin feasibility and one-dimensional optimization over exact
rationals, with strictness tracking.  The formula-level brute-force oracle
for the solver: enumerate atom assignments, check each conjunction here.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

# A constraint is (coeffs, const, strict) meaning  sum coeffs*x + const <= 0
# (< 0 when strict).
Constraint = Tuple[Dict[str, Fraction], Fraction, bool]


def _combine(lo: Constraint, hi: Constraint, var: str) -> Constraint:
    """Eliminate var between a positive-coefficient and negative-coefficient row."""
    cl, kl, sl = lo
    ch, kh, sh = hi
    a = cl[var]
    b = -ch[var]
    out: Dict[str, Fraction] = {}
    for v, c in cl.items():
        if v != var:
            out[v] = out.get(v, Fraction(0)) + b * c
    for v, c in ch.items():
        if v != var:
            out[v] = out.get(v, Fraction(0)) + a * c
    out = {v: c for v, c in out.items() if c != 0}
    return out, b * kl + a * kh, sl or sh


def eliminate(constraints: List[Constraint], var: str) -> Optional[List[Constraint]]:
    """Project out var; returns None when a trivial contradiction appears."""
    pos, neg, rest = [], [], []
    for coeffs, const, strict in constraints:
        c = coeffs.get(var, Fraction(0))
        if c > 0:
            pos.append(({v: x for v, x in coeffs.items() if x != 0}, const, strict))
        elif c < 0:
            neg.append(({v: x for v, x in coeffs.items() if x != 0}, const, strict))
        else:
            rest.append(({v: x for v, x in coeffs.items() if v != var and x != 0}, const, strict))
    for p in pos:
        for q in neg:
            rest.append(_combine(p, q, var))
    return rest


def feasible(constraints: List[Constraint]) -> bool:
    work = list(constraints)
    while True:
        vars_left = set()
        for coeffs, _, _ in work:
            vars_left.update(coeffs)
        for coeffs, const, strict in work:
            if not coeffs and (const > 0 or (strict and const == 0)):
                return False
        if not vars_left:
            return True
        var = sorted(vars_left)[0]
        work = eliminate(work, var)


def minimize(
    obj: Dict[str, Fraction], obj_const: Fraction, constraints: List[Constraint]
) -> Optional[Tuple[Optional[Fraction], bool]]:
    """Minimum of obj over the polytope.

    Returns None when infeasible, (None, False) when unbounded below, else
    (value, attained).
    """
    if not feasible(constraints):
        return None
    t = "__obj__"
    work = list(constraints)
    # t = obj  encoded as two inequalities
    row = dict(obj)
    row[t] = Fraction(-1)
    work.append((dict(row), obj_const, False))
    work.append(({v: -c for v, c in row.items()}, -obj_const, False))
    vars_left = set()
    for coeffs, _, _ in work:
        vars_left.update(coeffs)
    for var in sorted(vars_left - {t}):
        work = eliminate(work, var)
    # remaining rows constrain t alone:  c*t + k <= 0
    best: Optional[Tuple[Fraction, bool]] = None  # (bound, strict)
    for coeffs, const, strict in work:
        c = coeffs.get(t, Fraction(0))
        if c == 0:
            continue
        if c < 0:  # t >= const/(-c) wait: c*t + k <= 0 with c<0 -> t >= -k/c... careful below
            bound = const / (-c)
            # c*t <= -const  with c < 0  =>  t >= -const/c = const/(-c)
            if best is None or bound > best[0] or (bound == best[0] and strict and not best[1]):
                best = (bound, strict)
    if best is None:
        return (None, False)
    return (best[0], not best[1])
