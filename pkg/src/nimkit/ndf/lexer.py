"""Tokenizer for NDF source text.

Identifiers are ASCII ``[A-Za-z_][A-Za-z0-9_]*``; ``//`` starts a comment
that runs to end of line. Anything else outside the small punctuation set
is a lexical error with an exact position.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from string import ascii_letters, digits


class TokenType(enum.Enum):
    IDENT = "identifier"
    LBRACE = "'{'"
    RBRACE = "'}'"
    SEMI = "';'"
    DOT = "'.'"
    PIPE = "'|'"
    ASSIGN = "':='"
    EOF = "end of input"


@dataclass(frozen=True)
class Token:
    type: TokenType
    value: str
    line: int
    column: int


class LexError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_PUNCT = {
    "{": TokenType.LBRACE,
    "}": TokenType.RBRACE,
    ";": TokenType.SEMI,
    ".": TokenType.DOT,
    "|": TokenType.PIPE,
}

_IDENT_START = set(ascii_letters) | {"_"}
_IDENT_CONT = _IDENT_START | set(digits)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch == "/" and source[i + 1 : i + 2] == "/":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch in _IDENT_START:
            start = i
            while i < n and source[i] in _IDENT_CONT:
                i += 1
            tokens.append(Token(TokenType.IDENT, source[start:i], line, col))
            col += i - start
            continue
        if ch == ":":
            if source[i + 1 : i + 2] == "=":
                tokens.append(Token(TokenType.ASSIGN, ":=", line, col))
                i += 2
                col += 2
                continue
            raise LexError("expected ':=' after ':'", line, col)
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, line, col))
            i += 1
            col += 1
            continue
        if ch == "/":
            raise LexError("expected '//' to start a comment", line, col)
        raise LexError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token(TokenType.EOF, "", line, col))
    return tokens
