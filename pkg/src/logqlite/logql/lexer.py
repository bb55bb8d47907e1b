"""Tokenizer for the LogQL subset."""

from __future__ import annotations

from dataclasses import dataclass

from .ast import _UNIT_NS
from .diagnostics import Code, Diagnostic, QuerySyntaxError

# Two-char operators must be tried before their one-char prefixes.
_TWO_CHAR = {
    "|=": "PIPE_EQ",
    "|~": "PIPE_TILDE",
    "!=": "BANG_EQ",
    "!~": "BANG_TILDE",
    "=~": "EQ_TILDE",
    ">=": "GTE",
    "<=": "LTE",
}
_ONE_CHAR = {
    "{": "LBRACE",
    "}": "RBRACE",
    "(": "LPAREN",
    ")": "RPAREN",
    "[": "LBRACKET",
    "]": "RBRACKET",
    ",": "COMMA",
    "=": "EQ",
    "|": "PIPE",
    ">": "GT",
    "<": "LT",
}

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}

# Longest unit first so "ms" beats "m".
_UNITS = sorted(_UNIT_NS, key=len, reverse=True)


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    lexeme: str
    pos: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.pos, self.pos + max(len(self.lexeme), 1))


def _error(message: str, pos: int, end: int | None = None) -> QuerySyntaxError:
    return QuerySyntaxError(
        [Diagnostic(Code.SYNTAX, (pos, end if end is not None else pos + 1), message)]
    )


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        pair = text[i : i + 2]
        if pair in _TWO_CHAR:
            tokens.append(Token(_TWO_CHAR[pair], pair, pair, i))
            i += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token(_ONE_CHAR[ch], ch, ch, i))
            i += 1
            continue
        if ch == '"':
            tok, i = _lex_string(text, i)
            tokens.append(tok)
            continue
        if ch.isdigit():
            tok, i = _lex_number_or_duration(text, i)
            tokens.append(tok)
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            lexeme = text[start:i]
            tokens.append(Token("IDENT", lexeme, lexeme, start))
            continue
        raise _error(f"unexpected character {ch!r}", i)
    tokens.append(Token("EOF", None, "", n))
    return tokens


def _lex_string(text: str, start: int) -> tuple[Token, int]:
    i = start + 1
    n = len(text)
    chars: list[str] = []
    while i < n:
        ch = text[i]
        if ch == '"':
            lexeme = text[start : i + 1]
            return Token("STRING", "".join(chars), lexeme, start), i + 1
        if ch == "\\":
            if i + 1 >= n:
                raise _error("unterminated string literal", start, n)
            esc = text[i + 1]
            if esc in _ESCAPES:
                chars.append(_ESCAPES[esc])
            else:
                # Unknown escapes keep the backslash (regex patterns rely on it).
                chars.append("\\" + esc)
            i += 2
            continue
        chars.append(ch)
        i += 1
    raise _error("unterminated string literal", start, n)


def _lex_number_or_duration(text: str, start: int) -> tuple[Token, int]:
    i = start
    n = len(text)
    while i < n and text[i].isdigit():
        i += 1
    if i < n and text[i] == ".":
        i += 1
        if i >= n or not text[i].isdigit():
            raise _error("malformed number", start, i)
        while i < n and text[i].isdigit():
            i += 1
        lexeme = text[start:i]
        if i < n and (text[i].isalpha() or text[i] == "_"):
            raise _error(f"malformed number {text[start:i + 1]!r}", start, i + 1)
        return Token("NUMBER", float(lexeme), lexeme, start), i
    for unit in _UNITS:
        if text.startswith(unit, i):
            after = i + len(unit)
            if after < n and (text[after].isalnum() or text[after] == "_"):
                continue
            lexeme = text[start:after]
            return Token("DURATION", (int(text[start:i]), unit), lexeme, start), after
    lexeme = text[start:i]
    if i < n and (text[i].isalpha() or text[i] == "_"):
        raise _error(f"malformed number or duration {text[start:i + 1]!r}", start, i + 1)
    return Token("NUMBER", int(lexeme), lexeme, start), i
