"""Recursive-descent parser for the .cgm modelling language.

One statement per ``;``-terminated clause.  Errors are collected with source
spans and recovery resumes at the next statement boundary, so a single parse
reports every problem in the file, not just the first.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .. import formulas as F
from ..model import (
    AssertDecl,
    AttrDecl,
    CGM,
    Declaration,
    EdgeDecl,
    ElementDecl,
    FormatDecl,
    FormulaDecl,
    InvalidModel,
    Kind,
    ObjectiveDecl,
    PreferDecl,
    RefineDecl,
    SetAttrDecl,
    SourceSpan,
    SugarDecl,
    ValidationReport,
    Violation,
    build_model,
)
from .lexer import LexError, Token, tokenize

PREDEF_KEYWORDS = {
    "weight": "Weight",
    "numUnsatPrefs": "numUnsatPrefs",
    "numUnsatRequirements": "numUnsatRequirements",
    "numSatTasks": "numSatTasks",
}

CMP_SYMBOLS = {"<", "<=", "=", ">=", ">"}


@dataclass(frozen=True)
class ParseError(Exception):
    span: SourceSpan
    expected: str
    found: str

    def __str__(self) -> str:
        return f"{self.span}: expected {self.expected}, found {self.found!r}"


class _Fail(Exception):
    def __init__(self, err: ParseError):
        self.err = err


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.pos = 0

    # -- token plumbing --

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def fail(self, expected: str) -> "_Fail":
        t = self.peek()
        found = t.text if t.kind != "EOF" else "end of input"
        return _Fail(ParseError(t.span, expected, found))

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.next()
        raise self.fail(text if text is not None else kind)

    def expect_ident(self, what: str = "identifier") -> Token:
        # keywords are reserved; identifiers are case-sensitive
        if self.at("IDENT"):
            return self.next()
        raise self.fail(what)

    # -- statements --

    def statements(self) -> Tuple[List[Declaration], List[ParseError]]:
        decls: List[Declaration] = []
        errors: List[ParseError] = []
        while not self.at("EOF"):
            try:
                decls.append(self.statement())
            except _Fail as f:
                errors.append(f.err)
                # recover at statement boundary
                while not self.at("EOF") and not self.at("SYMBOL", ";"):
                    self.next()
                if self.at("SYMBOL", ";"):
                    self.next()
        return decls, errors

    def statement(self) -> Declaration:
        t = self.peek()
        handlers = {
            "format": self.stmt_format,
            "goal": lambda: self.stmt_element(Kind.GOAL),
            "assumption": lambda: self.stmt_element(Kind.ASSUMPTION),
            "refine": self.stmt_refine,
            "contrib": self.stmt_contrib,
            "conflict": self.stmt_conflict,
            "bind": self.stmt_bind,
            "prefer": self.stmt_prefer,
            "attr": self.stmt_attr,
            "set": self.stmt_set,
            "formula": self.stmt_formula,
            "assert": self.stmt_assert,
            "objective": self.stmt_objective,
            "sugar": self.stmt_sugar,
        }
        if t.kind == "KEYWORD" and t.text in handlers:
            return handlers[t.text]()
        raise self.fail("a statement keyword")

    def semi(self) -> None:
        self.expect("SYMBOL", ";")

    def stmt_format(self) -> Declaration:
        start = self.next()
        version = self.expect("STRING").text
        self.semi()
        return FormatDecl(version, start.span)

    def stmt_element(self, kind: Kind) -> Declaration:
        start = self.next()
        name = self.expect_ident("element name").text
        display = ""
        reward = penalty = None
        pos = neg = None
        while not self.at("SYMBOL", ";"):
            if self.at("STRING"):
                display = self.next().text
            elif self.at("KEYWORD", "reward"):
                self.next()
                reward = self.number()
            elif self.at("KEYWORD", "penalty"):
                self.next()
                penalty = self.number()
            elif self.at("KEYWORD", "prereq"):
                self.next()
                sign = self.expect("SYMBOL").text
                if sign not in ("+", "-"):
                    raise self.fail("+ or - after prereq")
                self.expect("SYMBOL", "(")
                f = self.formula()
                self.expect("SYMBOL", ")")
                if sign == "+":
                    pos = f
                else:
                    neg = f
            else:
                raise self.fail("reward, penalty, prereq or ;")
        self.semi()
        return ElementDecl(
            name=name,
            kind=kind,
            display_name=display,
            reward=reward,
            penalty=penalty,
            prereq_pos=pos,
            prereq_neg=neg,
            span=start.span,
        )

    def stmt_refine(self) -> Declaration:
        start = self.next()
        label: Optional[str] = None
        # lookahead for "LABEL :"
        if self.peek().kind in ("IDENT", "KEYWORD") and self.peek(1).text == ":":
            label = self.next().text
            self.next()
        target = self.expect_ident("target element").text
        self.expect("SYMBOL", "<-")
        sources = [self.expect_ident("source element").text]
        while self.at("SYMBOL", ","):
            self.next()
            sources.append(self.expect_ident("source element").text)
        pos = neg = None
        while self.at("KEYWORD", "prereq"):
            self.next()
            sign = self.expect("SYMBOL").text
            if sign not in ("+", "-"):
                raise self.fail("+ or - after prereq")
            self.expect("SYMBOL", "(")
            f = self.formula()
            self.expect("SYMBOL", ")")
            if sign == "+":
                pos = f
            else:
                neg = f
        self.semi()
        return RefineDecl(
            target=target,
            sources=tuple(sources),
            label=label,
            prereq_pos=pos,
            prereq_neg=neg,
            span=start.span,
        )

    def stmt_contrib(self) -> Declaration:
        start = self.next()
        a = self.expect_ident().text
        if self.at("SYMBOL", "<->"):
            self.next()
            kind = "mutual"
        else:
            self.expect("SYMBOL", "->")
            kind = "contribution"
        b = self.expect_ident().text
        self.semi()
        return EdgeDecl(kind, a, b, start.span)

    def stmt_conflict(self) -> Declaration:
        start = self.next()
        a = self.expect_ident().text
        self.expect("SYMBOL", "--")
        b = self.expect_ident().text
        self.semi()
        return EdgeDecl("conflict", a, b, start.span)

    def stmt_bind(self) -> Declaration:
        start = self.next()
        a = self.expect_ident().text
        self.expect("SYMBOL", "~")
        b = self.expect_ident().text
        self.semi()
        return EdgeDecl("binding", a, b, start.span)

    def stmt_prefer(self) -> Declaration:
        start = self.next()
        a = self.expect_ident().text
        self.expect("SYMBOL", ">")
        b = self.expect_ident().text
        self.semi()
        return PreferDecl(a, b, start.span)

    def stmt_attr(self) -> Declaration:
        start = self.next()
        name = self.expect_ident("attribute name").text
        term = None
        if self.at("SYMBOL", "="):
            self.next()
            self.expect("SYMBOL", "(")
            term = self.term()
            self.expect("SYMBOL", ")")
        self.semi()
        return AttrDecl(name, term, start.span)

    def stmt_set(self) -> Declaration:
        start = self.next()
        elem = self.expect_ident("element name").text
        self.expect("SYMBOL", ".")
        attr = self.expect_ident("attribute name").text
        sat = deny = None
        if self.at("KEYWORD", "sat"):
            self.next()
            sat = self.number()
        if self.at("KEYWORD", "deny"):
            self.next()
            deny = self.number()
        if sat is None and deny is None:
            raise self.fail("sat or deny")
        self.semi()
        return SetAttrDecl(elem, attr, sat, deny, start.span)

    def stmt_formula(self) -> Declaration:
        start = self.next()
        self.expect("SYMBOL", "(")
        f = self.formula()
        self.expect("SYMBOL", ")")
        self.semi()
        return FormulaDecl(f, start.span)

    def stmt_assert(self) -> Declaration:
        start = self.next()
        name = self.expect_ident("element name").text
        if self.at("KEYWORD", "true"):
            self.next()
            value = True
        elif self.at("KEYWORD", "false"):
            self.next()
            value = False
        else:
            raise self.fail("true or false")
        self.semi()
        return AssertDecl(name, value, start.span)

    def stmt_objective(self) -> Declaration:
        start = self.next()
        t = self.peek()
        if t.kind == "KEYWORD" and t.text in ("min", "max"):
            direction = self.next().text
            kw = self.peek()
            if kw.kind == "KEYWORD" and kw.text in PREDEF_KEYWORDS:
                self.next()
                self.semi()
                return ObjectiveDecl(
                    direction=direction,
                    predefined=PREDEF_KEYWORDS[kw.text],
                    span=start.span,
                )
            raise self.fail("a predefined objective name")
        name = self.expect_ident("objective name").text
        t = self.peek()
        if not (t.kind == "KEYWORD" and t.text in ("min", "max")):
            raise self.fail("min or max")
        direction = self.next().text
        self.expect("SYMBOL", "(")
        body = self.term()
        self.expect("SYMBOL", ")")
        self.semi()
        return ObjectiveDecl(direction=direction, name=name, body=body, span=start.span)

    def stmt_sugar(self) -> Declaration:
        start = self.next()
        name = self.expect_ident("sugar kind").text
        if name not in F.SUGAR_KINDS:
            raise _Fail(
                ParseError(start.span, "one of " + "/".join(F.SUGAR_KINDS), name)
            )
        self.expect("SYMBOL", "(")
        args = [self.expect_ident().text]
        while self.at("SYMBOL", ","):
            self.next()
            args.append(self.expect_ident().text)
        self.expect("SYMBOL", ")")
        self.semi()
        return SugarDecl(name, tuple(args), start.span)

    # -- formulas (precedence: ! > & > | > -> > <->, -> right-assoc) --

    def formula(self) -> F.Formula:
        lhs = self.formula_impl()
        while self.at("SYMBOL", "<->"):
            self.next()
            rhs = self.formula_impl()
            lhs = F.Iff(lhs, rhs)
        return lhs

    def formula_impl(self) -> F.Formula:
        lhs = self.formula_or()
        if self.at("SYMBOL", "->"):
            self.next()
            rhs = self.formula_impl()
            return F.Implies(lhs, rhs)
        return lhs

    def formula_or(self) -> F.Formula:
        parts = [self.formula_and()]
        while self.at("SYMBOL", "|"):
            self.next()
            parts.append(self.formula_and())
        return parts[0] if len(parts) == 1 else F.Or(tuple(parts))

    def formula_and(self) -> F.Formula:
        parts = [self.formula_unary()]
        while self.at("SYMBOL", "&"):
            self.next()
            parts.append(self.formula_unary())
        return parts[0] if len(parts) == 1 else F.And(tuple(parts))

    def formula_unary(self) -> F.Formula:
        if self.at("SYMBOL", "!"):
            self.next()
            return F.Not(self.formula_unary())
        return self.formula_atom()

    def formula_atom(self) -> F.Formula:
        t = self.peek()
        if t.kind == "KEYWORD" and t.text == "true":
            self.next()
            return F.TRUE
        if t.kind == "KEYWORD" and t.text == "false":
            self.next()
            return F.FALSE
        if t.kind == "IDENT" and t.text in F.SUGAR_KINDS and self.peek(1).text == "(":
            self.next()
            self.next()
            args = [self.expect_ident().text]
            while self.at("SYMBOL", ","):
                self.next()
                args.append(self.expect_ident().text)
            self.expect("SYMBOL", ")")
            return F.SugarApp(t.text, tuple(args))
        # try a comparison first; fall back to proposition / parenthesized formula
        mark = self.pos
        try:
            lhs = self.term()
            sym = self.peek()
            if sym.kind == "SYMBOL" and sym.text in CMP_SYMBOLS:
                self.next()
                rhs = self.term()
                return F.Cmp(lhs, sym.text, rhs)
            if isinstance(lhs, F.Var) and "." not in lhs.id:
                return F.Prop(lhs.id)
            raise self.fail("a comparison operator")
        except _Fail as f:
            self.pos = mark
            if self.at("SYMBOL", "("):
                self.next()
                inner = self.formula()
                self.expect("SYMBOL", ")")
                return inner
            if t.kind == "IDENT":
                self.next()
                return F.Prop(t.text)
            raise f

    # -- terms --

    def term(self) -> F.Term:
        lhs = self.term_product()
        while self.peek().kind == "SYMBOL" and self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.term_product()
            if op == "-":
                rhs = F.Scale(Fraction(-1), rhs)
            parts = list(lhs.terms) if isinstance(lhs, F.Add) else [lhs]
            parts.append(rhs)
            lhs = F.Add(tuple(parts))
        return lhs

    def term_product(self) -> F.Term:
        lhs = self.term_primary()
        while self.at("SYMBOL", "*"):
            self.next()
            rhs = self.term_primary()
            if isinstance(lhs, F.Const):
                lhs = F.Scale(lhs.value, rhs) if not isinstance(rhs, F.Const) else F.Const(lhs.value * rhs.value)
            elif isinstance(rhs, F.Const):
                lhs = F.Scale(rhs.value, lhs)
            else:
                raise self.fail("a linear product (one factor must be a constant)")
        return lhs

    def term_primary(self) -> F.Term:
        t = self.peek()
        if t.kind == "SYMBOL" and t.text == "-":
            self.next()
            inner = self.term_primary()
            if isinstance(inner, F.Const):
                return F.Const(-inner.value)
            return F.Scale(Fraction(-1), inner)
        if t.kind == "NUMBER":
            self.next()
            value = Fraction(t.text)
            if self.at("SYMBOL", "/"):
                self.next()
                den = self.expect("NUMBER").text
                value = value / Fraction(den)
            return F.Const(value)
        if t.kind == "KEYWORD" and t.text == "ite":
            self.next()
            self.expect("SYMBOL", "(")
            cond = self.formula()
            self.expect("SYMBOL", ",")
            then = self.term()
            self.expect("SYMBOL", ",")
            orelse = self.term()
            self.expect("SYMBOL", ")")
            return F.Ite(cond, then, orelse)
        if t.kind == "SYMBOL" and t.text == "(":
            self.next()
            inner = self.term()
            self.expect("SYMBOL", ")")
            return inner
        if t.kind == "IDENT":
            self.next()
            if self.at("SYMBOL", "."):
                self.next()
                attr = self.expect_ident("attribute name").text
                return F.Var(f"{t.text}.{attr}")
            return F.Var(t.text)
        raise self.fail("a term")

    def number(self) -> Fraction:
        neg = False
        if self.at("SYMBOL", "-"):
            self.next()
            neg = True
        t = self.expect("NUMBER")
        value = Fraction(t.text)
        if self.at("SYMBOL", "/"):
            self.next()
            den = self.expect("NUMBER").text
            value = value / Fraction(den)
        return -value if neg else value


def parse(text: str, filename: str = "<input>") -> Tuple[List[Declaration], List[ParseError]]:
    """Parse source text into declarations plus all recoverable errors."""
    try:
        toks = tokenize(text, filename)
    except LexError as e:
        return [], [ParseError(e.span, "a valid token", e.message)]
    return _Parser(toks).statements()


def parse_model(text: str, filename: str = "<input>") -> CGM:
    """Parse and validate in one step; raises InvalidModel on any problem."""
    decls, errors = parse(text, filename)
    if errors:
        report = ValidationReport(
            tuple(Violation("ParseError", str(e), e.span) for e in errors)
        )
        raise InvalidModel(report)
    return build_model(decls)
