# src/ministra/boolexpr.py

"""
Liberty boolean expressions (pin ``function`` and arc ``when`` attributes).

Evaluation is three-valued: a variable may be 0, 1 or unknown (``None``), and
an operator yields a constant only when its known operands force one.
"""

import re
from collections.abc import Mapping
from dataclasses import dataclass

from .exceptions import ParseError

Logic = int | None

_TOKEN = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_.\[\]]*)|(?P<const>[01])|(?P<op>[!'&*^|+()]))"
)


class Expr:
    def evaluate(self, env: Mapping[str, Logic]) -> Logic:
        raise NotImplementedError

    def variables(self) -> frozenset[str]:
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: int

    def evaluate(self, env: Mapping[str, Logic]) -> Logic:
        return self.value

    def variables(self) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str

    def evaluate(self, env: Mapping[str, Logic]) -> Logic:
        return env.get(self.name)

    def variables(self) -> frozenset[str]:
        return frozenset((self.name,))


@dataclass(frozen=True, slots=True)
class Not(Expr):
    operand: Expr

    def evaluate(self, env: Mapping[str, Logic]) -> Logic:
        v = self.operand.evaluate(env)
        return None if v is None else 1 - v

    def variables(self) -> frozenset[str]:
        return self.operand.variables()


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    op: str  # "&", "|" or "^"
    left: Expr
    right: Expr

    def evaluate(self, env: Mapping[str, Logic]) -> Logic:
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "&":
            if a == 0 or b == 0:
                return 0
            return 1 if a == 1 and b == 1 else None
        if self.op == "|":
            if a == 1 or b == 1:
                return 1
            return 0 if a == 0 and b == 0 else None
        if a is None or b is None:
            return None
        return a ^ b

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        stripped = text.strip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"bad character in boolean expression {text!r} at {pos}")
            kind = m.lastgroup or "op"
            self.tokens.append((kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of boolean expression {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> Expr:
        expr = self.parse_or()
        if self.peek() is not None:
            raise ParseError(f"trailing input in boolean expression {self.text!r}")
        return expr

    def parse_or(self) -> Expr:
        left = self.parse_xor()
        while (tok := self.peek()) is not None and tok[1] in ("|", "+"):
            self.take()
            left = BinOp("|", left, self.parse_xor())
        return left

    def parse_xor(self) -> Expr:
        left = self.parse_and()
        while (tok := self.peek()) is not None and tok[1] == "^":
            self.take()
            left = BinOp("^", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_unary()
        while (tok := self.peek()) is not None:
            if tok[1] in ("&", "*"):
                self.take()
            elif not (tok[0] in ("ident", "const") or tok[1] in ("!", "(")):
                break
            # juxtaposition is AND
            left = BinOp("&", left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        kind, text = self.take()
        if text == "!":
            node: Expr = Not(self.parse_unary())
        elif text == "(":
            node = self.parse_or()
            if self.take()[1] != ")":
                raise ParseError(f"missing ')' in boolean expression {self.text!r}")
        elif kind == "ident":
            node = Var(text)
        elif kind == "const":
            node = Const(int(text))
        else:
            raise ParseError(f"unexpected '{text}' in boolean expression {self.text!r}")
        while (tok := self.peek()) is not None and tok[1] == "'":
            self.take()
            node = Not(node)
        return node


def parse_expr(text: str) -> Expr:
    """Parse a Liberty ``function``/``when`` string."""
    return _Parser(text).parse()
