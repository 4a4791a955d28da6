# src/ministra/lexer.py

"""
Byte-level tokenizer shared by the Liberty, Verilog and SDF grammars.

Each grammar supplies one compiled ``bytes`` regular expression whose named
groups are token kinds. Groups named ``ws``, ``nl`` and ``comment`` are
skipped; every other group produces a ``Token``. The stream keeps exactly one
token of lookahead, which is all the grammars need.
"""

import re
from dataclasses import dataclass

from .exceptions import ParseError
from .sources import Source

_SKIP = frozenset({"ws", "nl", "comment", "directive"})


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    offset: int
    line: int


class TokenStream:
    """Single-pass token cursor over ``source.data[start:end]``."""

    def __init__(self, source: Source, pattern: re.Pattern[bytes], start: int = 0, end: int | None = None):
        self.source = source
        self._pattern = pattern
        self._data = source.data
        self._pos = start
        self._end = len(self._data) if end is None else end
        self._line = self._data.count(b"\n", 0, start) + 1
        self._peeked: Token | None = None

    # --- Cursor ---
    def _scan(self) -> Token | None:
        data, end = self._data, self._end
        while self._pos < end:
            m = self._pattern.match(data, self._pos, end)
            if m is None or m.end() == self._pos:
                raise self.error(
                    f"unexpected byte {data[self._pos:self._pos + 1]!r}", offset=self._pos
                )
            kind = m.lastgroup or "other"
            start = self._pos
            line = self._line
            self._line += data.count(b"\n", start, m.end())
            self._pos = m.end()
            if kind in _SKIP:
                continue
            return Token(kind, m.group().decode("utf-8", "replace"), start, line)
        return None

    def peek(self) -> Token | None:
        if self._peeked is None:
            self._peeked = self._scan()
        return self._peeked

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self._peeked = None
        return tok

    def at_end(self) -> bool:
        return self.peek() is None

    def accept(self, text: str) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self._peeked = None
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise self.error(f"expected '{text}', found '{tok.text}'", token=tok)
        return tok

    def expect_kind(self, *kinds: str) -> Token:
        tok = self.next()
        if tok.kind not in kinds:
            raise self.error(f"expected {' or '.join(kinds)}, found '{tok.text}'", token=tok)
        return tok

    # --- Diagnostics ---
    def error(self, message: str, token: Token | None = None, offset: int | None = None) -> ParseError:
        if token is not None:
            return ParseError(message, file=self.source.name, offset=token.offset, line=token.line)
        off = self._pos if offset is None else offset
        return ParseError(message, file=self.source.name, offset=off, line=self.source.line_of(off))
