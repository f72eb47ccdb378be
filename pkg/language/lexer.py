"""Tokenizer for the RxO source language.

Every token records the whitespace and comments preceding it, and the last
token also records what follows it, so concatenating ``leading + text`` of
all tokens plus the final ``trailing`` reproduces the source exactly.
"""

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional, Tuple

from errors import LexError, RxOError
from kernel.values import INT64_MAX, parse_datetime


class TokenKind(Enum):
    """Token categories."""
    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    STRING = "string"
    INTEGER = "integer"
    FLOAT = "float"
    DATETIME = "datetime"
    PUNCT = "punctuation"
    PATH_DOT = "path-dot"
    ALIAS = "alias"
    HASH = "hash"


KEYWORDS = frozenset({
    "CREATE", "CLASS", "EXTEND", "SET", "OF", "KEY", "REFERENCE", "ON",
    "ALTER", "REALIZE", "AS", "STORED", "BEGIN", "END", "DECLARE", "IF",
    "THEN", "ELSE", "RETURN", "RETURNS", "NEW", "WITH", "DESTROY", "EXEC",
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "INSERT", "INTO", "VALUES",
    "DELETE", "UPDATE", "AND", "OR", "NOT", "IS", "NULL", "TRUE", "FALSE",
    # reserved: loops are not part of the language
    "WHILE", "FOR", "LOOP",
})

# Longest first
PUNCTUATION = (":=", "<>", "<=", ">=", "(", ")", "[", "]", ",", ";", "=", "<", ">", "+", "-", "*", "/", ".")

ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}

DATETIME_LITERAL = re.compile(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z")
NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")

Position = Tuple[int, int]


@dataclass
class Token:
    """A lexical token; ``value`` holds the decoded literal or normalized keyword."""
    kind: TokenKind
    text: str
    value: Any
    line: int
    column: int
    leading: str = ""
    trailing: str = ""

    @property
    def position(self) -> Position:
        return (self.line, self.column)

    def is_keyword(self, *words: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.value in words

    def is_punct(self, *marks: str) -> bool:
        return self.kind is TokenKind.PUNCT and self.text in marks

    def describe(self) -> str:
        if self.kind is TokenKind.KEYWORD:
            return self.value
        return repr(self.text)

    def __repr__(self) -> str:
        return f"Token({self.kind.name}, {self.text!r})"


def _is_ident_start(char: str) -> bool:
    return char.isalpha() or char == "_"


def _is_ident_char(char: str) -> bool:
    return char.isalnum() or char == "_"


class Lexer:
    """Single-pass scanner producing a token list."""

    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self.line = 1
        self.column = 1

    def _peek(self, offset: int = 0) -> str:
        index = self.pos + offset
        return self.source[index] if index < len(self.source) else ""

    def _advance(self, count: int) -> str:
        text = self.source[self.pos:self.pos + count]
        for char in text:
            if char == "\n":
                self.line += 1
                self.column = 1
            else:
                self.column += 1
        self.pos += count
        return text

    def _trivia(self) -> str:
        start = self.pos
        while self.pos < len(self.source):
            char = self._peek()
            if char.isspace():
                self._advance(1)
            elif char == "/" and self._peek(1) == "/":
                end = self.source.find("\n", self.pos)
                self._advance((len(self.source) if end < 0 else end) - self.pos)
            else:
                break
        return self.source[start:self.pos]

    def tokenize(self) -> List[Token]:
        tokens: List[Token] = []
        while True:
            leading = self._trivia()
            if self.pos >= len(self.source):
                if tokens:
                    tokens[-1].trailing = leading
                return tokens
            token = self._next(tokens[-1] if tokens else None)
            token.leading = leading
            tokens.append(token)

    def _next(self, previous: Optional[Token]) -> Token:
        line, column = self.line, self.column
        char = self._peek()

        if char in ("'", '"'):
            return self._string(char, line, column)

        if char.isdigit():
            match = NUMBER.match(self.source, self.pos)
            text = self._advance(match.end() - self.pos)
            if match.group(1) or match.group(2):
                value = float(text)
                if not math.isfinite(value):
                    raise LexError(f"float literal {text} out of range", (line, column))
                return Token(TokenKind.FLOAT, text, value, line, column)
            value = int(text)
            if value > INT64_MAX:
                raise LexError(f"integer literal {text} out of range", (line, column))
            return Token(TokenKind.INTEGER, text, value, line, column)

        if _is_ident_start(char):
            text = self._word()
            upper = text.upper()
            if upper in KEYWORDS:
                return Token(TokenKind.KEYWORD, text, upper, line, column)
            return Token(TokenKind.IDENTIFIER, text, text, line, column)

        if char == "#":
            if _is_ident_start(self._peek(1)):
                self._advance(1)
                text = "#" + self._word()
                return Token(TokenKind.ALIAS, text, text, line, column)
            self._advance(1)
            return Token(TokenKind.HASH, "#", "#", line, column)

        if char == "." and (_is_ident_start(self._peek(1)) or self._peek(1) == "#"):
            self._advance(1)
            return Token(TokenKind.PATH_DOT, ".", ".", line, column)

        for mark in PUNCTUATION:
            if self.source.startswith(mark, self.pos):
                self._advance(len(mark))
                return Token(TokenKind.PUNCT, mark, mark, line, column)

        raise LexError(f"illegal character {char!r}", (line, column))

    def _word(self) -> str:
        start = self.pos
        while self.pos < len(self.source) and _is_ident_char(self._peek()):
            self._advance(1)
        return self.source[start:self.pos]

    def _string(self, quote: str, line: int, column: int) -> Token:
        start = self.pos
        self._advance(1)
        chars = []
        while True:
            char = self._peek()
            if char == "":
                raise LexError("unterminated string literal", (line, column))
            if char == "\\":
                escaped = self._peek(1)
                if escaped == "":
                    raise LexError("unterminated string literal", (line, column))
                chars.append(ESCAPES.get(escaped, escaped))
                self._advance(2)
            elif char == quote:
                self._advance(1)
                break
            else:
                chars.append(char)
                self._advance(1)
        text = self.source[start:self.pos]
        value = "".join(chars)
        if quote == "'" and DATETIME_LITERAL.fullmatch(value):
            try:
                return Token(TokenKind.DATETIME, text, parse_datetime(value), line, column)
            except RxOError:
                pass
        return Token(TokenKind.STRING, text, value, line, column)


def tokenize(source: str) -> List[Token]:
    return Lexer(source).tokenize()


def untokenize(tokens: List[Token]) -> str:
    """Inverse of ``tokenize`` for the text it covered."""
    if not tokens:
        return ""
    return "".join(t.leading + t.text for t in tokens) + tokens[-1].trailing
