"""Boolean/linear-rational formula and term ASTs shared by the model, DSL and encoder.

Formulas are Boolean structure over propositional atoms (model labels) and
comparison atoms between linear terms.  Terms are linear expressions over
numeric variables with an ``ite`` conditional form; division is not part of
the language.  All nodes are immutable and hashable so they can live inside
frozen model values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Tuple, Union

CMP_OPS = ("<", "<=", "=", ">=", ">")

SUGAR_KINDS = ("Alt", "Causes", "Requires", "AtMostOneOf", "AtLeastOneOf", "OneOf")


# --- terms ---------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    """A numeric variable: an attribute, an objective id, or ``Elem.Attr``."""

    id: str


@dataclass(frozen=True)
class Scale:
    coeff: Fraction
    term: "Term"


@dataclass(frozen=True)
class Add:
    terms: Tuple["Term", ...]


@dataclass(frozen=True)
class Ite:
    cond: "Formula"
    then: "Term"
    orelse: "Term"


Term = Union[Const, Var, Scale, Add, Ite]


# --- formulas ------------------------------------------------------------


@dataclass(frozen=True)
class Prop:
    label: str


@dataclass(frozen=True)
class Cmp:
    lhs: Term
    op: str
    rhs: Term

    def __post_init__(self) -> None:
        if self.op not in CMP_OPS:
            raise ValueError(f"bad comparison operator {self.op!r}")


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class SugarApp:
    name: str
    args: Tuple[str, ...]

    def __post_init__(self) -> None:
        if self.name not in SUGAR_KINDS:
            raise ValueError(f"unknown sugar predicate {self.name!r}")


Formula = Union[Prop, Cmp, Not, And, Or, Implies, Iff, SugarApp]

TRUE: Formula = And(())
FALSE: Formula = Or(())


def conj(*parts: Formula) -> Formula:
    parts = tuple(p for p in parts if p != TRUE)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(*parts: Formula) -> Formula:
    parts = tuple(p for p in parts if p != FALSE)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def term_sub(a: Term, b: Term) -> Term:
    return Add((a, Scale(Fraction(-1), b)))


def iter_props(f: Formula) -> Iterator[str]:
    """Yield every propositional label mentioned in ``f`` (including sugar args)."""
    if isinstance(f, Prop):
        yield f.label
    elif isinstance(f, Cmp):
        for t in (f.lhs, f.rhs):
            yield from _iter_term_props(t)
    elif isinstance(f, Not):
        yield from iter_props(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from iter_props(a)
    elif isinstance(f, (Implies, Iff)):
        yield from iter_props(f.lhs)
        yield from iter_props(f.rhs)
    elif isinstance(f, SugarApp):
        yield from f.args


def _iter_term_props(t: Term) -> Iterator[str]:
    if isinstance(t, Scale):
        yield from _iter_term_props(t.term)
    elif isinstance(t, Add):
        for s in t.terms:
            yield from _iter_term_props(s)
    elif isinstance(t, Ite):
        yield from iter_props(t.cond)
        yield from _iter_term_props(t.then)
        yield from _iter_term_props(t.orelse)


def iter_numvars(f: Formula) -> Iterator[str]:
    """Yield every numeric variable id mentioned in ``f``."""
    if isinstance(f, Cmp):
        yield from iter_term_numvars(f.lhs)
        yield from iter_term_numvars(f.rhs)
    elif isinstance(f, Not):
        yield from iter_numvars(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from iter_numvars(a)
    elif isinstance(f, (Implies, Iff)):
        yield from iter_numvars(f.lhs)
        yield from iter_numvars(f.rhs)


def iter_term_numvars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.id
    elif isinstance(t, Scale):
        yield from iter_term_numvars(t.term)
    elif isinstance(t, Add):
        for s in t.terms:
            yield from iter_term_numvars(s)
    elif isinstance(t, Ite):
        yield from iter_numvars(t.cond)
        yield from iter_term_numvars(t.then)
        yield from iter_term_numvars(t.orelse)


def linearize(t: Term) -> Tuple[dict, Fraction]:
    """Flatten an ite-free term into (coefficients by var id, constant).

    Raises ValueError on Ite nodes; the encoder eliminates those first.
    """
    coeffs: dict = {}
    const = _linearize_into(t, Fraction(1), coeffs)
    return coeffs, const


def _linearize_into(t: Term, factor: Fraction, coeffs: dict) -> Fraction:
    if isinstance(t, Const):
        return factor * t.value
    if isinstance(t, Var):
        coeffs[t.id] = coeffs.get(t.id, Fraction(0)) + factor
        return Fraction(0)
    if isinstance(t, Scale):
        return _linearize_into(t.term, factor * t.coeff, coeffs)
    if isinstance(t, Add):
        c = Fraction(0)
        for s in t.terms:
            c += _linearize_into(s, factor, coeffs)
        return c
    raise ValueError("term contains ite; lower it first")
