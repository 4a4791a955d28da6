# src/ministra/sdf.py

"""
SDF 3.0 reader (ABSOLUTE IOPATH / INTERCONNECT delays, SETUP / HOLD checks).

The file is read as nested S-expressions. Constructs outside the subset
(COND, INCREMENT, other timing checks) are skipped with a warning; malformed
value triples are errors. All values are scaled to ps by the header TIMESCALE.
"""

import logging
import re
from dataclasses import dataclass, field

from .chunking import map_chunks, split_chunks
from .lexer import Token, TokenStream
from .sources import Source, load_source

logger = logging.getLogger(__name__)

_TOKENS = re.compile(
    rb"""
    (?P<comment>//[^\n]*|/\*[\s\S]*?\*/)
    |(?P<ws>[ \t\r\f]+)
    |(?P<nl>\n)
    |(?P<string>"(?:[^"\\]|\\.)*")
    |(?P<punct>[()])
    |(?P<word>[^\s()"]+)
    """,
    re.VERBOSE,
)
_TIMESCALE = re.compile(r"^\s*([0-9.]+)?\s*(s|ms|us|ns|ps|fs)\s*$", re.IGNORECASE)
_TIME_PS = {"s": 1e12, "ms": 1e9, "us": 1e6, "ns": 1e3, "ps": 1.0, "fs": 1e-3}


@dataclass(frozen=True, slots=True)
class Triple:
    min: float
    typ: float
    max: float

    @property
    def early(self) -> float:
        return self.min if self.min != self.max else self.typ

    @property
    def late(self) -> float:
        return self.max if self.min != self.max else self.typ


@dataclass(frozen=True, slots=True)
class SdfIopath:
    instance: str
    celltype: str
    from_pin: str
    from_edge: str | None
    to_pin: str
    rise: Triple | None
    fall: Triple | None


@dataclass(frozen=True, slots=True)
class SdfInterconnect:
    from_pin: str
    to_pin: str
    rise: Triple | None
    fall: Triple | None


@dataclass(frozen=True, slots=True)
class SdfCheck:
    instance: str
    celltype: str
    kind: str  # "setup" | "hold"
    data_pin: str
    data_edge: str | None
    clock_pin: str
    clock_edge: str | None
    value: Triple


@dataclass(slots=True)
class SdfData:
    timescale_ps: float = 1000.0
    divider: str = "/"
    design: str = ""
    iopaths: list[SdfIopath] = field(default_factory=list)
    interconnects: list[SdfInterconnect] = field(default_factory=list)
    checks: list[SdfCheck] = field(default_factory=list)
    skipped: int = 0

    @property
    def entries(self) -> list[SdfIopath | SdfInterconnect]:
        return [*self.iopaths, *self.interconnects]


@dataclass(slots=True)
class SNode:
    head: str
    items: list["SNode | Token"]
    token: Token


def _read_list(ts: TokenStream, open_tok: Token) -> SNode:
    head = ts.next()
    if head.text == ")":
        return SNode("", [], open_tok)
    if head.text == "(":
        raise ts.error("expected a keyword after '('", token=head)
    items: list[SNode | Token] = []
    while True:
        tok = ts.next()
        if tok.text == ")":
            return SNode(head.text.upper(), items, open_tok)
        if tok.text == "(":
            items.append(_read_list(ts, tok))
        else:
            items.append(tok)


class _Interpreter:
    def __init__(self, ts: TokenStream, data: SdfData, target_divider: str):
        self.ts = ts
        self.data = data
        self.target_divider = target_divider

    def warn(self, what: str, tok: Token) -> None:
        self.data.skipped += 1
        logger.warning("Unsupported SDF construct skipped",
                       extra={"construct": what, "line": tok.line, "source": self.ts.source.name})

    def path(self, text: str) -> str:
        text = text.strip('"')
        if self.data.divider != self.target_divider:
            text = re.sub(r"(?<!\\)" + re.escape(self.data.divider), self.target_divider, text)
        return text.replace("\\", "")

    def triple(self, node: SNode | Token) -> Triple | None:
        if isinstance(node, Token):
            raise self.ts.error(f"expected a value in parentheses, found '{node.text}'", token=node)
        # A value list has no keyword head; the reader stores its first atom as head.
        raw = [node.head, *(t.text for t in node.items if isinstance(t, Token))] if node.head else []
        text = "".join(raw)
        if not text:
            return None
        parts = text.split(":")
        if len(parts) == 1:
            parts = [parts[0]] * 3
        if len(parts) != 3:
            raise self.ts.error(f"malformed delay triple '({text})'", token=node.token)
        try:
            vals = [float(p) if p else None for p in parts]
        except ValueError as e:
            raise self.ts.error(f"malformed delay triple '({text})'", token=node.token) from e
        mn, ty, mx = vals
        if ty is None:
            ty = mx if mx is not None else mn
        if ty is None:
            return None
        mn = ty if mn is None else mn
        mx = ty if mx is None else mx
        if not mn <= ty <= mx:
            raise self.ts.error(f"delay triple '({text})' violates min <= typ <= max", token=node.token)
        s = self.data.timescale_ps
        return Triple(mn * s, ty * s, mx * s)

    def port(self, item: SNode | Token) -> tuple[str, str | None]:
        if isinstance(item, Token):
            return self.path(item.text), None
        edge = item.head.lower()
        if edge not in ("posedge", "negedge") or len(item.items) != 1 or not isinstance(item.items[0], Token):
            raise self.ts.error(f"unsupported port specification '({item.head} ...)'", token=item.token)
        return self.path(item.items[0].text), edge

    # --- Header ---
    def header_item(self, node: SNode) -> None:
        atoms = [t.text for t in node.items if isinstance(t, Token)]
        if node.head == "TIMESCALE":
            m = _TIMESCALE.match(" ".join(atoms))
            if m is None:
                raise self.ts.error(f"bad TIMESCALE '{' '.join(atoms)}'", token=node.token)
            self.data.timescale_ps = float(m.group(1) or 1.0) * _TIME_PS[m.group(2).lower()]
        elif node.head == "DIVIDER" and atoms:
            self.data.divider = atoms[0]
        elif node.head == "DESIGN" and atoms:
            self.data.design = atoms[0].strip('"')

    # --- Cells ---
    def cell(self, node: SNode) -> None:
        celltype = instance = ""
        for item in node.items:
            if isinstance(item, Token):
                raise self.ts.error(f"unexpected '{item.text}' in CELL", token=item)
            if item.head == "CELLTYPE":
                celltype = "".join(t.text for t in item.items if isinstance(t, Token)).strip('"')
            elif item.head == "INSTANCE":
                atoms = [t.text for t in item.items if isinstance(t, Token)]
                instance = self.path(atoms[0]) if atoms else ""
                if instance == "*":
                    self.warn("INSTANCE *", item.token)
                    return
            elif item.head == "DELAY":
                self.delay(item, instance, celltype)
            elif item.head == "TIMINGCHECK":
                self.timingcheck(item, instance, celltype)
            else:
                self.warn(item.head, item.token)

    def delay(self, node: SNode, instance: str, celltype: str) -> None:
        for block in node.items:
            if isinstance(block, Token):
                raise self.ts.error(f"unexpected '{block.text}' in DELAY", token=block)
            if block.head != "ABSOLUTE":
                self.warn(block.head, block.token)
                continue
            for entry in block.items:
                if isinstance(entry, Token):
                    raise self.ts.error(f"unexpected '{entry.text}' in ABSOLUTE", token=entry)
                if entry.head == "IOPATH":
                    src, edge = self.port(entry.items[0])
                    dst, _ = self.port(entry.items[1])
                    rise, fall = self.rise_fall(entry.items[2:], entry)
                    self.data.iopaths.append(SdfIopath(instance, celltype, src, edge, dst, rise, fall))
                elif entry.head == "INTERCONNECT":
                    src, _ = self.port(entry.items[0])
                    dst, _ = self.port(entry.items[1])
                    if instance:
                        src = f"{instance}{self.target_divider}{src}"
                        dst = f"{instance}{self.target_divider}{dst}"
                    rise, fall = self.rise_fall(entry.items[2:], entry)
                    self.data.interconnects.append(SdfInterconnect(src, dst, rise, fall))
                else:
                    self.warn(entry.head, entry.token)

    def rise_fall(self, values: list, entry: SNode) -> tuple[Triple | None, Triple | None]:
        triples = [self.triple(v) for v in values]
        if not triples:
            raise self.ts.error(f"{entry.head} without delay values", token=entry.token)
        rise = triples[0]
        fall = triples[1] if len(triples) > 1 else triples[0]
        return rise, fall

    def timingcheck(self, node: SNode, instance: str, celltype: str) -> None:
        for entry in node.items:
            if isinstance(entry, Token):
                raise self.ts.error(f"unexpected '{entry.text}' in TIMINGCHECK", token=entry)
            if entry.head not in ("SETUP", "HOLD", "SETUPHOLD"):
                self.warn(entry.head, entry.token)
                continue
            if any(isinstance(i, SNode) and i.head == "COND" for i in entry.items[:2]):
                self.warn("COND", entry.token)
                continue
            data_pin, data_edge = self.port(entry.items[0])
            clock_pin, clock_edge = self.port(entry.items[1])
            kinds = ["setup", "hold"] if entry.head == "SETUPHOLD" else [entry.head.lower()]
            for kind, raw in zip(kinds, entry.items[2:]):
                value = self.triple(raw)
                if value is not None:
                    self.data.checks.append(
                        SdfCheck(instance, celltype, kind, data_pin, data_edge, clock_pin, clock_edge, value)
                    )


def _parse_header(src: Source, target_divider: str) -> tuple[SdfData, int]:
    ts = TokenStream(src, _TOKENS)
    data = SdfData()
    interp = _Interpreter(ts, data, target_divider)
    ts.expect("(")
    head = ts.next()
    if head.text.upper() != "DELAYFILE":
        raise ts.error(f"expected DELAYFILE, found '{head.text}'", token=head)
    while True:
        tok = ts.peek()
        if tok is None:
            raise ts.error("missing ')' closing DELAYFILE")
        if tok.text == ")":
            return data, tok.offset
        open_tok = ts.next()
        if open_tok.text != "(":
            raise ts.error(f"unexpected '{open_tok.text}' in DELAYFILE header", token=open_tok)
        nxt = ts.peek()
        if nxt is not None and nxt.text.upper() == "CELL":
            return data, open_tok.offset
        interp.header_item(_read_list(ts, open_tok))


def _parse_cells(src: Source, start: int, end: int, header: SdfData, target_divider: str) -> SdfData:
    ts = TokenStream(src, _TOKENS, start, end)
    part = SdfData(timescale_ps=header.timescale_ps, divider=header.divider, design=header.design)
    interp = _Interpreter(ts, part, target_divider)
    closed = False
    while (tok := ts.peek()) is not None:
        if closed:
            raise ts.error(f"unexpected '{tok.text}' after DELAYFILE", token=tok)
        open_tok = ts.next()
        if open_tok.text == ")":
            closed = True
            continue
        if open_tok.text != "(":
            raise ts.error(f"unexpected '{open_tok.text}'", token=open_tok)
        node = _read_list(ts, open_tok)
        if node.head != "CELL":
            raise ts.error(f"expected CELL, found '{node.head}'", token=open_tok)
        interp.cell(node)
    if end == len(src.data) and not closed:
        raise ts.error("missing ')' closing DELAYFILE")
    return part


def parse_sdf(source, hierarchy_divider: str = "/", chunks: int = 1, threads: int = 1) -> SdfData:
    """Parse an SDF file; ``chunks > 1`` reads CELL blocks in parallel."""
    src = load_source(source)
    header, body_start = _parse_header(src, hierarchy_divider)
    ranges = split_chunks(src, chunks, "sdf")
    body_ranges = [(max(s, body_start), e) for s, e in ranges if e > body_start]
    parts = map_chunks(lambda s, e: _parse_cells(src, s, e, header, hierarchy_divider), body_ranges, threads)
    for part in parts:
        header.iopaths.extend(part.iopaths)
        header.interconnects.extend(part.interconnects)
        header.checks.extend(part.checks)
        header.skipped += part.skipped
    if header.skipped:
        logger.warning("SDF constructs outside the supported subset were skipped",
                       extra={"count": header.skipped, "source": src.name})
    return header

