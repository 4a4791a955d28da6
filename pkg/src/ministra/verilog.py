# src/ministra/verilog.py

"""
Gate-level structural Verilog reader.

Only the netlist subset is accepted: module headers (ANSI or not), port and
net declarations, continuous assigns and cell/module instances. Buses are kept
as declared ranges; bit expansion happens during elaboration.
"""

import logging
import re
from dataclasses import dataclass, field

from .chunking import map_chunks, split_chunks
from .exceptions import BehavioralConstructError, ParseError
from .lexer import Token, TokenStream
from .sources import Source, load_source

logger = logging.getLogger(__name__)

_TOKENS = re.compile(
    rb"""
    (?P<comment>//[^\n]*|/\*[\s\S]*?\*/|\(\*[\s\S]*?\*\))
    |(?P<directive>`[^\n]*)
    |(?P<ws>[ \t\r\f]+)
    |(?P<nl>\n)
    |(?P<escaped>\\[^\s]+)
    |(?P<based>(?:[0-9][0-9_]*\s*)?'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+)
    |(?P<number>[0-9][0-9_]*)
    |(?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
    |(?P<string>"(?:[^"\\]|\\.)*")
    |(?P<punct>[()\[\]{}:;,.=#@+\-*/])
    """,
    re.VERBOSE,
)

_BEHAVIORAL = frozenset({"always", "initial", "always_ff", "always_comb", "function", "task", "generate"})
_NET_KINDS = frozenset({"wire", "reg", "tri", "wand", "wor", "supply0", "supply1", "logic"})
_DIRECTIONS = frozenset({"input", "output", "inout"})
_BASES = {"b": 2, "o": 8, "d": 10, "h": 16}


# --- Expressions ---


@dataclass(frozen=True, slots=True)
class Ref:
    """A net or port, optionally a single bit (msb == lsb) or a part-select."""

    name: str
    msb: int | None = None
    lsb: int | None = None


@dataclass(frozen=True, slots=True)
class Const:
    """Literal bits, most significant first; ``width`` None for unsized literals."""

    width: int | None
    bits: str


@dataclass(frozen=True, slots=True)
class Concat:
    parts: tuple["VExpr", ...]


VExpr = Ref | Const | Concat


# --- Design structure ---


@dataclass(slots=True)
class PortDecl:
    name: str
    direction: str
    msb: int | None = None
    lsb: int | None = None


@dataclass(slots=True)
class Instance:
    cell: str
    name: str
    named: dict[str, VExpr | None] | None
    positional: list[VExpr | None] | None
    line: int


@dataclass(slots=True)
class Assign:
    lhs: VExpr
    rhs: VExpr
    line: int


@dataclass(slots=True)
class Module:
    name: str
    line: int
    port_order: list[str] = field(default_factory=list)
    ports: dict[str, PortDecl] = field(default_factory=dict)
    wires: dict[str, tuple[int | None, int | None]] = field(default_factory=dict)
    assigns: list[Assign] = field(default_factory=list)
    instances: list[Instance] = field(default_factory=list)

    def range_of(self, name: str) -> tuple[int | None, int | None] | None:
        if name in self.ports:
            p = self.ports[name]
            return p.msb, p.lsb
        return self.wires.get(name)


@dataclass(slots=True)
class VerilogDesign:
    modules: dict[str, Module]
    top: str | None = None

    def roots(self) -> list[str]:
        """Modules that no other module in the design instantiates."""
        used = {inst.cell for m in self.modules.values() for inst in m.instances}
        return [name for name in self.modules if name not in used]


# --- Parser ---


def _parse_based(text: str) -> Const:
    size_text, _, rest = text.partition("'")
    rest = rest.strip()
    if rest[:1] in "sS":
        rest = rest[1:]
    base = _BASES[rest[0].lower()]
    digits = rest[1:].replace("_", "").strip().lower().replace("?", "z")
    width = int(size_text.replace("_", "")) if size_text.strip() else None
    if base == 10:
        if any(c in "xz" for c in digits):
            bits = digits[-1] * (width or 1)
        else:
            bits = format(int(digits), "b")
    else:
        per = {2: 1, 8: 3, 16: 4}[base]
        chunks = []
        for c in digits:
            chunks.append(c * per if c in "xz" else format(int(c, base), f"0{per}b"))
        bits = "".join(chunks)
    if width is not None:
        if len(bits) < width:
            pad = bits[0] if bits[0] in "xz" else "0"
            bits = pad * (width - len(bits)) + bits
        bits = bits[-width:]
    return Const(width, bits)


class _Parser:
    def __init__(self, ts: TokenStream):
        self.ts = ts

    def ident(self) -> str:
        tok = self.ts.expect_kind("ident", "escaped")
        return self._name(tok)

    @staticmethod
    def _name(tok: Token) -> str:
        return tok.text[1:] if tok.kind == "escaped" else tok.text

    def int_value(self) -> int:
        tok = self.ts.expect_kind("number")
        return int(tok.text.replace("_", ""))

    def range(self) -> tuple[int | None, int | None]:
        if not self.ts.accept("["):
            return None, None
        msb = self.int_value()
        lsb = self.int_value() if self.ts.accept(":") else msb
        self.ts.expect("]")
        return msb, lsb

    def skip_statement(self) -> None:
        depth = 0
        while True:
            tok = self.ts.next()
            if tok.text in ("(", "[", "{"):
                depth += 1
            elif tok.text in (")", "]", "}"):
                depth -= 1
            elif tok.text == ";" and depth <= 0:
                return

    def skip_parens(self) -> None:
        self.ts.expect("(")
        depth = 1
        while depth:
            tok = self.ts.next()
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1

    # --- Expressions ---
    def expr(self) -> VExpr:
        tok = self.ts.next()
        if tok.kind == "based":
            return _parse_based(tok.text)
        if tok.kind == "number":
            return Const(None, format(int(tok.text.replace("_", "")), "b"))
        if tok.kind in ("ident", "escaped"):
            name = self._name(tok)
            if self.ts.accept("["):
                msb = self.int_value()
                lsb = self.int_value() if self.ts.accept(":") else msb
                self.ts.expect("]")
                return Ref(name, msb, lsb)
            return Ref(name)
        if tok.text == "{":
            first = self.expr()
            if isinstance(first, Const) and self.ts.peek() is not None and self.ts.peek().text == "{":
                # replication {n{...}}
                count = int(first.bits, 2)
                inner = self.expr()
                self.ts.expect("}")
                return Concat(tuple([inner] * count))
            parts = [first]
            while self.ts.accept(","):
                parts.append(self.expr())
            self.ts.expect("}")
            return Concat(tuple(parts))
        raise self.ts.error(f"unexpected '{tok.text}' in expression", token=tok)

    # --- Module items ---
    def module(self) -> Module:
        kw = self.ts.expect("module")
        mod = Module(self.ident(), kw.line)
        if self.ts.accept("#"):
            self.skip_parens()
        if self.ts.accept("("):
            if not self.ts.accept(")"):
                self.port_list(mod)
        self.ts.expect(";")
        while True:
            tok = self.ts.peek()
            if tok is None:
                raise self.ts.error(f"module '{mod.name}' is missing endmodule")
            if tok.text == "endmodule":
                self.ts.next()
                return mod
            self.item(mod)

    def port_list(self, mod: Module) -> None:
        direction: str | None = None
        msb = lsb = None
        while True:
            tok = self.ts.peek()
            if tok is not None and tok.text in _DIRECTIONS:
                direction = self.ts.next().text
                while (t := self.ts.peek()) is not None and t.text in _NET_KINDS | {"signed"}:
                    self.ts.next()
                msb, lsb = self.range()
            name = self.ident()
            mod.port_order.append(name)
            if direction is not None:
                mod.ports[name] = PortDecl(name, direction, msb, lsb)
            if self.ts.accept(")"):
                return
            self.ts.expect(",")

    def declaration(self, mod: Module, kw: Token) -> None:
        direction = kw.text if kw.text in _DIRECTIONS else None
        while (t := self.ts.peek()) is not None and t.text in _NET_KINDS | {"signed"}:
            self.ts.next()
        msb, lsb = self.range()
        while True:
            name_tok = self.ts.expect_kind("ident", "escaped")
            name = self._name(name_tok)
            if direction is not None:
                mod.ports[name] = PortDecl(name, direction, msb, lsb)
                if name not in mod.port_order:
                    raise self.ts.error(f"'{name}' is declared {direction} but is not in the port list",
                                        token=name_tok)
            elif name not in mod.ports:
                mod.wires[name] = (msb, lsb)
            if self.ts.accept("="):
                mod.assigns.append(Assign(Ref(name), self.expr(), name_tok.line))
            if self.ts.accept(";"):
                return
            self.ts.expect(",")

    def instance(self, mod: Module, cell_tok: Token) -> None:
        cell = self._name(cell_tok)
        if self.ts.accept("#"):
            self.skip_parens()
        while True:
            name_tok = self.ts.expect_kind("ident", "escaped")
            msb, _ = self.range()
            if msb is not None:
                raise self.ts.error("instance arrays are not supported", token=name_tok)
            self.ts.expect("(")
            named: dict[str, VExpr | None] | None = None
            positional: list[VExpr | None] | None = None
            if not self.ts.accept(")"):
                if self.ts.peek() is not None and self.ts.peek().text == ".":
                    named = {}
                    while True:
                        self.ts.expect(".")
                        pin = self.ident()
                        self.ts.expect("(")
                        named[pin] = None if self.ts.accept(")") else self._close(self.expr())
                        if self.ts.accept(")"):
                            break
                        self.ts.expect(",")
                else:
                    positional = []
                    while True:
                        t = self.ts.peek()
                        positional.append(None if t is not None and t.text in (",", ")") else self.expr())
                        if self.ts.accept(")"):
                            break
                        self.ts.expect(",")
            else:
                named = {}
            mod.instances.append(Instance(cell, self._name(name_tok), named, positional, name_tok.line))
            if self.ts.accept(";"):
                return
            self.ts.expect(",")

    def _close(self, value: VExpr) -> VExpr:
        self.ts.expect(")")
        return value

    def item(self, mod: Module) -> None:
        tok = self.ts.next()
        text = tok.text
        if text in _BEHAVIORAL:
            raise BehavioralConstructError(
                text, file=self.ts.source.name, offset=tok.offset, line=tok.line
            )
        if text in _DIRECTIONS or text in _NET_KINDS:
            self.declaration(mod, tok)
        elif text == "assign":
            while True:
                lhs = self.expr()
                self.ts.expect("=")
                mod.assigns.append(Assign(lhs, self.expr(), tok.line))
                if self.ts.accept(";"):
                    break
                self.ts.expect(",")
        elif text in ("parameter", "localparam", "defparam", "genvar"):
            self.skip_statement()
        elif text == "specify":
            while self.ts.next().text != "endspecify":
                pass
        elif tok.kind in ("ident", "escaped"):
            self.instance(mod, tok)
        elif text == ";":
            return
        else:
            raise self.ts.error(f"unexpected '{text}' in module '{mod.name}'", token=tok)


def _parse_range(source: Source, start: int, end: int) -> list[Module]:
    ts = TokenStream(source, _TOKENS, start, end)
    parser = _Parser(ts)
    modules = []
    while not ts.at_end():
        tok = ts.peek()
        if tok is not None and tok.text == "module":
            modules.append(parser.module())
        else:
            raise ts.error(f"expected 'module', found '{tok.text}'", token=tok)
    return modules


def parse_verilog(source, chunks: int = 1, threads: int = 1) -> VerilogDesign:
    """Parse a gate-level netlist; ``chunks > 1`` splits at module boundaries."""
    src = load_source(source)
    ranges = split_chunks(src, chunks, "verilog")
    parts = map_chunks(lambda s, e: _parse_range(src, s, e), ranges, threads)

    modules: dict[str, Module] = {}
    for part in parts:
        for mod in part:
            if mod.name in modules:
                raise ParseError(f"module '{mod.name}' defined twice", file=src.name,
                                 offset=0, line=mod.line)
            modules[mod.name] = mod
    for mod in modules.values():
        missing = [p for p in mod.port_order if p not in mod.ports]
        if missing:
            raise ParseError(f"ports {missing} of module '{mod.name}' have no direction",
                             file=src.name, offset=0, line=mod.line)
    logger.debug("Verilog parsed", extra={"source": src.name, "modules": len(modules), "chunks": len(ranges)})
    return VerilogDesign(modules)
