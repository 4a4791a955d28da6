# src/ministra/tcl.py

"""
A small Tcl interpreter for constraint scripts.

Supported: word splitting with ``{}`` / ``""`` / ``[]``, ``$var`` and command
substitution, comments, and the commands set, unset, expr, if, foreach, for,
while, incr, list, llength, lindex, lappend, concat, join, break, continue
and puts. There are no procs, namespaces or string commands.

Values are Python objects. A word that consists of a single substitution keeps
the substituted object as-is, so collections returned by object queries flow
through variables and lists without being turned into text.
"""

import logging
import math
import re
from collections.abc import Callable
from typing import Any

from .exceptions import TclError

logger = logging.getLogger(__name__)

Command = Callable[[list[Any], int], Any]

_VAR_NAME = re.compile(r"[A-Za-z0-9_]+(?:::[A-Za-z0-9_]+)*")
_BACKSLASH = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "[": "[", "]": "]", "$": "$", '"': '"',
              "{": "{", "}": "}", ";": ";", " ": " "}


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


# --- Value helpers ---


def to_str(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e16:
            return f"{value:.1f}"
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_quote_element(to_str(v)) for v in value)
    if hasattr(value, "describe"):
        return value.describe()
    return str(value)


def _quote_element(text: str) -> str:
    if text == "":
        return "{}"
    if re.search(r'[\s{}\[\]$";\\]', text):
        return "{" + text + "}"
    return text


def to_list(value: Any) -> list[Any]:
    """Interpret ``value`` as a Tcl list."""
    if isinstance(value, list):
        return value
    if isinstance(value, tuple):
        return list(value)
    if not isinstance(value, str) and hasattr(value, "__iter__"):
        return list(value)
    text = to_str(value)
    items: list[Any] = []
    i, n = 0, len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            return items
        if text[i] == "{":
            end = _match_brace(text, i)
            if end is None:
                raise TclError("unbalanced braces in list", file="<tcl>")
            items.append(text[i + 1:end])
            i = end + 1
        elif text[i] == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise TclError("unbalanced quotes in list", file="<tcl>")
            items.append(text[i + 1:end])
            i = end + 1
        else:
            start = i
            while i < n and not text[i].isspace():
                i += 1
            items.append(text[start:i])


def _match_brace(text: str, start: int) -> int | None:
    depth = 0
    i = start
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            i += 2
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


def to_number(value: Any) -> int | float:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float)):
        return value
    text = to_str(value).strip()
    try:
        if re.fullmatch(r"[+-]?(0[xX][0-9a-fA-F]+|\d+)", text):
            return int(text, 0) if text.lstrip("+-").lower().startswith("0x") else int(text)
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number but got \"{text}\"") from None


def to_bool(value: Any) -> bool:
    text = to_str(value).strip().lower()
    if text in ("true", "yes", "on"):
        return True
    if text in ("false", "no", "off"):
        return False
    try:
        return to_number(value) != 0
    except ValueError:
        raise TclError(f"expected boolean value but got \"{text}\"", file="<tcl>") from None


# --- Interpreter ---


class Interp:
    """
    Evaluates Tcl scripts against a command table.

    ``unknown`` is called for commands missing from the table; by default it
    raises ``TclError``.
    """

    def __init__(self, name: str = "<tcl>", unknown: Callable[[str, list[Any], int], Any] | None = None):
        self.name = name
        self.vars: dict[str, Any] = {}
        self.commands: dict[str, Command] = {}
        self.unknown = unknown
        self.output: list[str] = []
        self._register_builtins()

    def register(self, name: str, fn: Command) -> None:
        self.commands[name] = fn

    def error(self, message: str, line: int | None) -> TclError:
        return TclError(message, file=self.name, line=line)

    # --- Script evaluation ---
    def eval(self, script: str, line: int = 1) -> Any:
        parser = _ScriptParser(self, script, line)
        result: Any = ""
        while (cmd := parser.next_command()) is not None:
            words, cmd_line = cmd
            if not words:
                continue
            result = self.invoke(words, cmd_line)
        return result

    def invoke(self, words: list[Any], line: int) -> Any:
        name = to_str(words[0])
        fn = self.commands.get(name)
        if fn is None:
            if self.unknown is None:
                raise self.error(f"invalid command name \"{name}\"", line)
            return self.unknown(name, words[1:], line)
        return fn(words[1:], line)

    def get_var(self, name: str, line: int) -> Any:
        if name not in self.vars:
            raise self.error(f"can't read \"{name}\": no such variable", line)
        return self.vars[name]

    # --- Builtins ---
    def _register_builtins(self) -> None:
        for name in ("set", "unset", "expr", "if", "foreach", "for", "while", "incr", "list", "llength",
                     "lindex", "lappend", "concat", "join", "break", "continue", "puts"):
            self.commands[name] = getattr(self, f"_cmd_{name}")

    def _arity(self, name: str, args: list[Any], low: int, high: int | None, usage: str, line: int) -> None:
        if len(args) < low or (high is not None and len(args) > high):
            raise self.error(f"wrong # args: should be \"{name} {usage}\"", line)

    def _cmd_set(self, args: list[Any], line: int) -> Any:
        self._arity("set", args, 1, 2, "varName ?newValue?", line)
        name = to_str(args[0])
        if len(args) == 2:
            self.vars[name] = args[1]
        return self.get_var(name, line)

    def _cmd_unset(self, args: list[Any], line: int) -> Any:
        for a in args:
            self.vars.pop(to_str(a), None)
        return ""

    def _cmd_expr(self, args: list[Any], line: int) -> Any:
        if not args:
            raise self.error("wrong # args: should be \"expr arg ?arg ...?\"", line)
        return self.expr(" ".join(to_str(a) for a in args), line)

    def expr(self, text: str, line: int) -> Any:
        return _ExprParser(self, text, line).evaluate()

    def condition(self, value: Any, line: int) -> bool:
        return to_bool(self.expr(to_str(value), line))

    def _cmd_if(self, args: list[Any], line: int) -> Any:
        i = 0
        while True:
            if i >= len(args):
                raise self.error("wrong # args: no expression after \"if\"", line)
            cond = args[i]
            i += 1
            if i < len(args) and to_str(args[i]) == "then":
                i += 1
            if i >= len(args):
                raise self.error("wrong # args: no script following condition", line)
            body = args[i]
            i += 1
            if self.condition(cond, line):
                return self.eval(to_str(body), line)
            if i >= len(args):
                return ""
            word = to_str(args[i])
            if word == "elseif":
                i += 1
                continue
            if word == "else":
                i += 1
            if i != len(args) - 1:
                raise self.error("wrong # args: extra words after \"else\" clause", line)
            return self.eval(to_str(args[i]), line)

    def _loop_body(self, body: str, line: int) -> bool:
        """Run one iteration; returns False on ``break``."""
        try:
            self.eval(body, line)
        except _Break:
            return False
        except _Continue:
            pass
        return True

    def _cmd_foreach(self, args: list[Any], line: int) -> Any:
        if len(args) < 3 or len(args) % 2 == 0:
            raise self.error("wrong # args: should be \"foreach varList list ?varList list ...? command\"", line)
        body = to_str(args[-1])
        pairs = [([to_str(v) for v in to_list(args[j])], to_list(args[j + 1])) for j in range(0, len(args) - 1, 2)]
        rounds = max((math.ceil(len(values) / max(len(names), 1)) for names, values in pairs), default=0)
        for r in range(rounds):
            for names, values in pairs:
                for k, name in enumerate(names):
                    idx = r * len(names) + k
                    self.vars[name] = values[idx] if idx < len(values) else ""
            if not self._loop_body(body, line):
                break
        return ""

    def _cmd_while(self, args: list[Any], line: int) -> Any:
        self._arity("while", args, 2, 2, "test command", line)
        while self.condition(args[0], line):
            if not self._loop_body(to_str(args[1]), line):
                break
        return ""

    def _cmd_for(self, args: list[Any], line: int) -> Any:
        self._arity("for", args, 4, 4, "start test next command", line)
        start, test, nxt, body = (to_str(a) for a in args)
        self.eval(start, line)
        while self.condition(test, line):
            if not self._loop_body(body, line):
                break
            self.eval(nxt, line)
        return ""

    def _cmd_incr(self, args: list[Any], line: int) -> Any:
        self._arity("incr", args, 1, 2, "varName ?increment?", line)
        name = to_str(args[0])
        try:
            current = to_number(self.vars.get(name, 0))
            step = to_number(args[1]) if len(args) == 2 else 1
        except ValueError as e:
            raise self.error(str(e), line) from e
        if not isinstance(current, int) or not isinstance(step, int):
            raise self.error("incr expects integer values", line)
        self.vars[name] = current + step
        return self.vars[name]

    def _cmd_list(self, args: list[Any], line: int) -> Any:
        return list(args)

    def _cmd_llength(self, args: list[Any], line: int) -> Any:
        self._arity("llength", args, 1, 1, "list", line)
        return len(to_list(args[0]))

    def _cmd_lindex(self, args: list[Any], line: int) -> Any:
        self._arity("lindex", args, 1, None, "list ?index ...?", line)
        value = args[0]
        for raw in args[1:]:
            items = to_list(value)
            text = to_str(raw)
            try:
                index = len(items) - 1 if text == "end" else (
                    len(items) - 1 - int(text[4:]) if text.startswith("end-") else int(text)
                )
            except ValueError as e:
                raise self.error(f"bad index \"{text}\"", line) from e
            value = items[index] if 0 <= index < len(items) else ""
        return value

    def _cmd_lappend(self, args: list[Any], line: int) -> Any:
        self._arity("lappend", args, 1, None, "varName ?value ...?", line)
        name = to_str(args[0])
        items = list(to_list(self.vars.get(name, [])))
        items.extend(args[1:])
        self.vars[name] = items
        return items

    def _cmd_concat(self, args: list[Any], line: int) -> Any:
        out: list[Any] = []
        for a in args:
            out.extend(to_list(a))
        return out

    def _cmd_join(self, args: list[Any], line: int) -> Any:
        self._arity("join", args, 1, 2, "list ?joinString?", line)
        sep = to_str(args[1]) if len(args) == 2 else " "
        return sep.join(to_str(v) for v in to_list(args[0]))

    def _cmd_break(self, args: list[Any], line: int) -> Any:
        raise _Break()

    def _cmd_continue(self, args: list[Any], line: int) -> Any:
        raise _Continue()

    def _cmd_puts(self, args: list[Any], line: int) -> Any:
        words = [to_str(a) for a in args if to_str(a) != "-nonewline"]
        text = words[-1] if words else ""
        self.output.append(text)
        logger.info("puts", extra={"script": self.name, "line": line, "text": text})
        return ""


def tcl_eval(script: str, interp: Interp | None = None) -> str:
    """Evaluate ``script`` and return the last command's result as text."""
    interp = interp or Interp()
    try:
        return to_str(interp.eval(script))
    except (_Break, _Continue):
        raise interp.error("break/continue outside of a loop", None) from None


# --- Script parsing ---


class _ScriptParser:
    """Splits a script into commands, performing substitution word by word."""

    def __init__(self, interp: Interp, text: str, line: int):
        self.interp = interp
        self.text = text
        self.pos = 0
        self.line = line

    def error(self, message: str) -> TclError:
        return self.interp.error(message, self.line)

    def _advance(self, n: int = 1) -> None:
        self.line += self.text.count("\n", self.pos, self.pos + n)
        self.pos += n

    def next_command(self) -> tuple[list[Any], int] | None:
        text = self.text
        # skip separators and comments
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n;":
                self._advance()
            elif ch == "\\" and text.startswith("\\\n", self.pos):
                self._advance(2)
            elif ch == "#":
                end = text.find("\n", self.pos)
                self._advance((end if end >= 0 else len(text)) - self.pos)
            else:
                break
        if self.pos >= len(text):
            return None
        line = self.line
        words: list[Any] = []
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r":
                self._advance()
                continue
            if ch == "\\" and text.startswith("\\\n", self.pos):
                self._advance(2)
                continue
            if ch in "\n;":
                self._advance()
                break
            words.append(self.word())
        return words, line

    def word(self) -> Any:
        text = self.text
        ch = text[self.pos]
        if ch == "{":
            end = _match_brace(text, self.pos)
            if end is None:
                raise self.error("missing close-brace")
            value = text[self.pos + 1:end].replace("\\\n", " ")
            self._advance(end + 1 - self.pos)
            self._check_word_end("close-brace")
            return value
        if ch == '"':
            self._advance()
            parts = self.substitute_until('"')
            if self.pos >= len(text):
                raise self.error("missing \"")
            self._advance()
            self._check_word_end("close-quote")
            return _join(parts)
        return _join(self.substitute_until(None))

    def _check_word_end(self, what: str) -> None:
        if self.pos < len(self.text) and self.text[self.pos] not in " \t\r\n;]":
            raise self.error(f"extra characters after {what}")

    def substitute_until(self, terminator: str | None) -> list[Any]:
        """Collect word parts up to ``terminator`` (or a word break when None)."""
        text = self.text
        parts: list[Any] = []
        buf: list[str] = []

        def flush():
            if buf:
                parts.append("".join(buf))
                buf.clear()

        while self.pos < len(text):
            ch = text[self.pos]
            if terminator is None and ch in " \t\r\n;":
                break
            if terminator is not None and ch == terminator:
                break
            if ch == "\\":
                nxt = text[self.pos + 1:self.pos + 2]
                if nxt == "\n":
                    if terminator is None:
                        break
                    buf.append(" ")
                else:
                    buf.append(_BACKSLASH.get(nxt, nxt))
                self._advance(2)
            elif ch == "$":
                value = self.variable()
                if value is None:
                    buf.append("$")
                else:
                    flush()
                    parts.append(value)
            elif ch == "[":
                flush()
                parts.append(self.command_substitution())
            else:
                buf.append(ch)
                self._advance()
        flush()
        return parts

    def variable(self) -> Any | None:
        text = self.text
        start_line = self.line
        if text.startswith("${", self.pos):
            end = text.find("}", self.pos)
            if end < 0:
                raise self.error("missing close-brace for variable name")
            name = text[self.pos + 2:end]
            self._advance(end + 1 - self.pos)
            return self.interp.get_var(name, start_line)
        m = _VAR_NAME.match(text, self.pos + 1)
        if m is None:
            self._advance()
            return None
        self._advance(m.end() - self.pos)
        return self.interp.get_var(m.group(0), start_line)

    def command_substitution(self) -> Any:
        text = self.text
        depth = 0
        i = self.pos
        in_brace = 0
        while i < len(text):
            ch = text[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "{":
                in_brace += 1
            elif ch == "}" and in_brace:
                in_brace -= 1
            elif not in_brace and ch == "[":
                depth += 1
            elif not in_brace and ch == "]":
                depth -= 1
                if depth == 0:
                    break
            i += 1
        else:
            raise self.error("missing close-bracket")
        inner = text[self.pos + 1:i]
        line = self.line
        self._advance(i + 1 - self.pos)
        return self.interp.eval(inner, line)


def _join(parts: list[Any]) -> Any:
    if not parts:
        return ""
    if len(parts) == 1:
        return parts[0]
    return "".join(to_str(p) for p in parts)


# --- expr ---

_EXPR_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|0[xX][0-9a-fA-F]+)
       |(?P<op>\*\*|==|!=|<=|>=|&&|\|\||[-+*/%<>!?:(),])
       |(?P<word>[A-Za-z_][A-Za-z0-9_]*)
    )""",
    re.VERBOSE,
)

_FUNCS: dict[str, Callable[..., Any]] = {
    "abs": abs,
    "min": min,
    "max": max,
    "int": lambda x: int(x),
    "double": lambda x: float(x),
    "round": lambda x: int(math.floor(x + 0.5)),
    "sqrt": math.sqrt,
    "pow": lambda a, b: float(a) ** float(b),
}

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!=", "eq", "ne"),
    ("<", ">", "<=", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class _ExprParser:
    """Recursive-descent evaluator; ``live`` is False inside short-circuited operands."""

    def __init__(self, interp: Interp, text: str, line: int):
        self.interp = interp
        self.text = text
        self.line = line
        self.pos = 0
        self.live = True

    def error(self, message: str) -> TclError:
        return self.interp.error(f"malformed expression \"{self.text.strip()}\": {message}", self.line)

    def evaluate(self) -> Any:
        value = self.ternary()
        self._skip_ws()
        if self.pos != len(self.text):
            raise self.error(f"unexpected \"{self.text[self.pos:].strip()}\"")
        return value

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek_op(self) -> str | None:
        self._skip_ws()
        m = _EXPR_TOKEN.match(self.text, self.pos)
        if m is None:
            return None
        return m.group("op") or (m.group("word") if m.group("word") in ("eq", "ne") else None)

    def _take_op(self, op: str) -> None:
        self._skip_ws()
        self.pos += len(op)

    def _with_live(self, live: bool, fn: Callable[[], Any]) -> Any:
        saved = self.live
        self.live = saved and live
        try:
            return fn()
        finally:
            self.live = saved

    def ternary(self) -> Any:
        cond = self.binary(0)
        if self._peek_op() != "?":
            return cond
        self._take_op("?")
        truth = to_bool(cond) if self.live else False
        a = self._with_live(truth, self.ternary)
        if self._peek_op() != ":":
            raise self.error("missing ':' in ternary")
        self._take_op(":")
        b = self._with_live(not truth, self.ternary)
        return a if truth else b

    def binary(self, level: int) -> Any:
        if level == len(_BINARY_LEVELS):
            return self.power()
        left = self.binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while (op := self._peek_op()) in ops:
            self._take_op(op)
            if op in ("&&", "||"):
                lhs = to_bool(left) if self.live else False
                needed = (not lhs) if op == "||" else lhs
                right = self._with_live(needed, lambda lv=level: self.binary(lv + 1))
                if not self.live:
                    left = 0
                elif op == "||":
                    left = int(lhs or to_bool(right))
                else:
                    left = int(lhs and to_bool(right))
                continue
            right = self.binary(level + 1)
            left = self.apply(op, left, right)
        return left

    def power(self) -> Any:
        base = self.unary()
        if self._peek_op() == "**":
            self._take_op("**")
            exp = self.power()
            return self.apply("**", base, exp)
        return base

    def unary(self) -> Any:
        op = self._peek_op()
        if op in ("-", "+", "!"):
            self._take_op(op)
            value = self.unary()
            if not self.live:
                return 0
            if op == "!":
                return int(not to_bool(value))
            num = self.num(value)
            return -num if op == "-" else num
        return self.primary()

    def num(self, value: Any) -> int | float:
        try:
            return to_number(value)
        except ValueError as e:
            raise self.error(str(e)) from e

    def apply(self, op: str, a: Any, b: Any) -> Any:
        if not self.live:
            return 0
        if op in ("eq", "ne"):
            return int((to_str(a) == to_str(b)) == (op == "eq"))
        if op in ("==", "!=", "<", ">", "<=", ">="):
            try:
                x, y = to_number(a), to_number(b)
            except ValueError:
                x, y = to_str(a), to_str(b)
            result = {"==": x == y, "!=": x != y, "<": x < y, ">": x > y, "<=": x <= y, ">=": x >= y}[op]
            return int(result)
        x, y = self.num(a), self.num(b)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if op == "**":
            return x ** y
        if y == 0:
            raise self.error("divide by zero")
        if op == "/":
            return x // y if isinstance(x, int) and isinstance(y, int) else x / y
        if not (isinstance(x, int) and isinstance(y, int)):
            raise self.error("can't use floating-point value as operand of \"%\"")
        return x % y

    def primary(self) -> Any:
        self._skip_ws()
        if self.pos >= len(self.text):
            raise self.error("premature end of expression")
        ch = self.text[self.pos]
        if ch == "(":
            self.pos += 1
            value = self.ternary()
            if self._peek_op() != ")":
                raise self.error("missing ')'")
            self._take_op(")")
            return value
        if ch == "$":
            return self._substituted(self._variable)
        if ch == "[":
            return self._substituted(self._command)
        if ch == '"':
            end = self.text.find('"', self.pos + 1)
            if end < 0:
                raise self.error("missing '\"'")
            inner = self.text[self.pos + 1:end]
            self.pos = end + 1
            if not self.live:
                return inner
            return _join(_ScriptParser(self.interp, inner, self.line).substitute_until(None)) if inner else ""
        if ch == "{":
            end = _match_brace(self.text, self.pos)
            if end is None:
                raise self.error("missing '}'")
            inner = self.text[self.pos + 1:end]
            self.pos = end + 1
            return inner
        m = _EXPR_TOKEN.match(self.text, self.pos)
        if m is None or m.group("op"):
            raise self.error(f"unexpected \"{self.text[self.pos:].strip()}\"")
        self.pos = m.end()
        if m.group("num"):
            return self.num(m.group("num"))
        word = m.group("word")
        if word in ("true", "false", "yes", "no", "on", "off"):
            return int(word in ("true", "yes", "on"))
        if self._peek_op() == "(":
            return self.call(word)
        raise self.error(f"invalid bareword \"{word}\"")

    def call(self, name: str) -> Any:
        fn = _FUNCS.get(name)
        if fn is None:
            raise self.error(f"unknown math function \"{name}\"")
        self._take_op("(")
        args = []
        if self._peek_op() != ")":
            while True:
                args.append(self.ternary())
                if self._peek_op() == ",":
                    self._take_op(",")
                    continue
                break
        if self._peek_op() != ")":
            raise self.error("missing ')' after function arguments")
        self._take_op(")")
        if not self.live:
            return 0
        try:
            return fn(*(self.num(a) for a in args))
        except (TypeError, ValueError) as e:
            raise self.error(f"bad arguments to {name}(): {e}") from e

    def _substituted(self, reader: Callable[[_ScriptParser], Any]) -> Any:
        sub = _ScriptParser(self.interp, self.text, self.line)
        sub.pos = self.pos
        if not self.live:
            # skip without evaluating
            if self.text[self.pos] == "[":
                depth = 0
                i = self.pos
                while i < len(self.text):
                    if self.text[i] == "[":
                        depth += 1
                    elif self.text[i] == "]":
                        depth -= 1
                        if depth == 0:
                            break
                    i += 1
                self.pos = i + 1
            else:
                m = _VAR_NAME.match(self.text, self.pos + 1)
                self.pos = m.end() if m else self.pos + 1
            return 0
        value = reader(sub)
        self.pos = sub.pos
        return value

    @staticmethod
    def _variable(sub: _ScriptParser) -> Any:
        value = sub.variable()
        if value is None:
            raise sub.error("invalid variable reference")
        return value

    @staticmethod
    def _command(sub: _ScriptParser) -> Any:
        return sub.command_substitution()
