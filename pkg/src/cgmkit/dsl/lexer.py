"""Tokenizer for the .cgm modelling language."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

from ..model import SourceSpan

KEYWORDS = {
    "format",
    "goal",
    "assumption",
    "refine",
    "contrib",
    "conflict",
    "bind",
    "prefer",
    "attr",
    "set",
    "formula",
    "assert",
    "objective",
    "sugar",
    "prereq",
    "reward",
    "penalty",
    "sat",
    "deny",
    "min",
    "max",
    "true",
    "false",
    "ite",
    "weight",
    "numUnsatPrefs",
    "numUnsatRequirements",
    "numSatTasks",
}

# multi-char operators first so maximal munch works
SYMBOLS = [
    "<->",
    "->",
    "<-",
    "<=",
    ">=",
    "--",
    "(",
    ")",
    ",",
    ";",
    ":",
    "<",
    ">",
    "=",
    "~",
    "!",
    "&",
    "|",
    "+",
    "-",
    "*",
    "/",
    ".",
]


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | NUMBER | STRING | SYMBOL | KEYWORD | EOF
    text: str
    span: SourceSpan


class LexError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


def tokenize(text: str, filename: str = "<input>") -> List[Token]:
    toks: List[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def span(l0: int, c0: int, l1: int, c1: int) -> SourceSpan:
        return SourceSpan(filename, l0, c0, l1, c1)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        l0, c0 = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            toks.append(Token(kind, word, span(l0, c0, line, col - 1)))
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            word = text[i:j]
            col += j - i
            i = j
            toks.append(Token("NUMBER", word, span(l0, c0, line, col - 1)))
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise LexError("unterminated string", span(l0, c0, line, col))
            word = text[i + 1 : j]
            col += j - i + 1
            i = j + 1
            toks.append(Token("STRING", word, span(l0, c0, line, col - 1)))
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                i += len(sym)
                col += len(sym)
                toks.append(Token("SYMBOL", sym, span(l0, c0, line, col - 1)))
                break
        else:
            raise LexError(f"unexpected character {c!r}", span(l0, c0, line, col))
    toks.append(Token("EOF", "", span(line, col, line, col)))
    return toks
