# src/ministra/spef.py

"""
SPEF reader for detailed (*D_NET) parasitics.

The header (units, delimiters, name map) is read once; *D_NET blocks are then
read chunk by chunk with that header as shared context. Capacitances come out
in fF and resistances in kOhm. *R_NET blocks are skipped with a warning.
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
    (?P<comment>//[^\n]*)
    |(?P<ws>[ \t\r\f]+)
    |(?P<nl>\n)
    |(?P<string>"[^"\n]*")
    |(?P<word>[^\s"]+)
    """,
    re.VERBOSE,
)

_CAP_UNITS = {"FF": 1.0, "PF": 1e3, "NF": 1e6, "UF": 1e9}
_RES_UNITS = {"OHM": 1e-3, "KOHM": 1.0, "MOHM": 1e3}
_NET_SECTIONS = frozenset({"*CONN", "*CAP", "*RES", "*INDUC", "*END"})


@dataclass(frozen=True, slots=True)
class SpefConn:
    kind: str  # "P" (port) or "I" (instance pin)
    node: str
    direction: str


@dataclass(frozen=True, slots=True)
class SpefCap:
    node: str
    partner: str | None
    value: float


@dataclass(frozen=True, slots=True)
class SpefRes:
    node_a: str
    node_b: str
    value: float


@dataclass(slots=True)
class SpefNet:
    name: str
    total_cap: float
    line: int
    conns: list[SpefConn] = field(default_factory=list)
    caps: list[SpefCap] = field(default_factory=list)
    resistors: list[SpefRes] = field(default_factory=list)


@dataclass(slots=True)
class SpefHeader:
    design: str = ""
    divider: str = "/"
    delimiter: str = ":"
    bus_open: str = "["
    bus_close: str = "]"
    cap_scale: float = 1e3
    res_scale: float = 1e-3
    name_map: dict[int, str] = field(default_factory=dict)
    body_start: int = 0


@dataclass(slots=True)
class SpefData:
    name_map: dict[int, str]
    nets: list[SpefNet]
    delimiter: str = ":"
    design: str = ""
    skipped_rnets: int = 0


class _Reader:
    def __init__(self, ts: TokenStream, header: SpefHeader, target_divider: str):
        self.ts = ts
        self.header = header
        self.target_divider = target_divider
        self._divider_re = (
            re.compile(r"(?<!\\)" + re.escape(header.divider))
            if header.divider != target_divider
            else None
        )

    def line_tokens(self, first: Token) -> list[Token]:
        """``first`` plus every following token on the same line."""
        out = [first]
        while (t := self.ts.peek()) is not None and t.line == first.line:
            out.append(self.ts.next())
        return out

    def name(self, raw: str, tok: Token) -> str:
        h = self.header
        if raw.startswith("*"):
            idx_text, sep, rest = raw[1:].partition(h.delimiter)
            if not idx_text.isdigit():
                raise self.ts.error(f"malformed name reference '{raw}'", token=tok)
            resolved = h.name_map.get(int(idx_text))
            if resolved is None:
                raise self.ts.error(f"unresolved name-map index '*{idx_text}'", token=tok)
            raw = resolved + (sep + rest if sep else "")
        if self._divider_re is not None:
            raw = self._divider_re.sub(self.target_divider, raw)
        if h.bus_open != "[":
            raw = raw.replace(h.bus_open, "[").replace(h.bus_close, "]")
        return raw.replace("\\", "")

    def value(self, text: str, tok: Token) -> float:
        # min:typ:max triples keep the typical value
        parts = text.split(":")
        pick = parts[1] if len(parts) == 3 else parts[0]
        try:
            return float(pick)
        except ValueError as e:
            raise self.ts.error(f"bad numeric value '{text}'", token=tok) from e

    # --- Header ---
    def read_header(self) -> None:
        h = self.header
        while (tok := self.ts.peek()) is not None:
            if tok.text in ("*D_NET", "*R_NET"):
                h.body_start = tok.offset
                return
            tok = self.ts.next()
            key = tok.text
            if key == "*NAME_MAP":
                while (t := self.ts.peek()) is not None and re.fullmatch(r"\*\d+", t.text):
                    self.ts.next()
                    target = self.ts.expect_kind("word", "string")
                    h.name_map[int(t.text[1:])] = target.text.strip('"')
                continue
            rest = self.line_tokens(tok)[1:]
            if key == "*DESIGN" and rest:
                h.design = rest[0].text.strip('"')
            elif key == "*DIVIDER" and rest:
                h.divider = rest[0].text
            elif key == "*DELIMITER" and rest:
                h.delimiter = rest[0].text
            elif key == "*BUS_DELIMITER" and rest:
                h.bus_open = rest[0].text[0]
                h.bus_close = rest[1].text if len(rest) > 1 else rest[0].text[-1]
            elif key in ("*C_UNIT", "*R_UNIT"):
                if len(rest) != 2:
                    raise self.ts.error(f"{key} takes a magnitude and a unit", token=tok)
                table = _CAP_UNITS if key == "*C_UNIT" else _RES_UNITS
                unit = rest[1].text.upper()
                if unit not in table:
                    raise self.ts.error(f"unsupported unit '{rest[1].text}' for {key}", token=rest[1])
                scale = float(rest[0].text) * table[unit]
                if key == "*C_UNIT":
                    h.cap_scale = scale
                else:
                    h.res_scale = scale
            # every other header line (and *PORTS entries) is informational
        h.body_start = len(self.ts.source.data)

    # --- Body ---
    def read_nets(self) -> tuple[list[SpefNet], int]:
        nets: list[SpefNet] = []
        skipped = 0
        while (tok := self.ts.peek()) is not None:
            if tok.text == "*D_NET":
                nets.append(self.read_dnet())
            elif tok.text == "*R_NET":
                self.skip_rnet()
                skipped += 1
            else:
                raise self.ts.error(f"expected *D_NET, found '{tok.text}'", token=tok)
        return nets, skipped

    def skip_rnet(self) -> None:
        start = self.ts.next()
        while (tok := self.ts.peek()) is not None:
            self.ts.next()
            if tok.text == "*END":
                logger.warning("Skipped reduced *R_NET block", extra={"line": start.line})
                return
        raise self.ts.error("missing *END for *R_NET", token=start)

    def read_dnet(self) -> SpefNet:
        start = self.ts.next()
        header = self.line_tokens(start)
        if len(header) < 3:
            raise self.ts.error("*D_NET needs a net name and a total capacitance", token=start)
        net = SpefNet(
            self.name(header[1].text, header[1]),
            self.value(header[2].text, header[2]) * self.header.cap_scale,
            start.line,
        )
        section = None
        while True:
            tok = self.ts.peek()
            if tok is None or tok.text in ("*D_NET", "*R_NET"):
                raise self.ts.error(f"missing *END for *D_NET '{net.name}'", token=start)
            tok = self.ts.next()
            if tok.text in _NET_SECTIONS:
                if tok.text == "*END":
                    return net
                section = tok.text
                continue
            line = self.line_tokens(tok)
            if section == "*CONN":
                if tok.text not in ("*P", "*I") or len(line) < 3:
                    raise self.ts.error(f"bad *CONN entry starting '{tok.text}'", token=tok)
                net.conns.append(SpefConn(tok.text[1], self.name(line[1].text, line[1]), line[2].text))
            elif section == "*CAP":
                if len(line) == 3:
                    net.caps.append(SpefCap(self.name(line[1].text, line[1]), None,
                                            self.value(line[2].text, line[2]) * self.header.cap_scale))
                elif len(line) == 4:
                    net.caps.append(SpefCap(self.name(line[1].text, line[1]), self.name(line[2].text, line[2]),
                                            self.value(line[3].text, line[3]) * self.header.cap_scale))
                else:
                    raise self.ts.error("bad *CAP entry", token=tok)
            elif section == "*RES":
                if len(line) != 4:
                    raise self.ts.error("bad *RES entry", token=tok)
                value = self.value(line[3].text, line[3]) * self.header.res_scale
                if value < 0:
                    raise self.ts.error("negative resistance", token=line[3])
                net.resistors.append(SpefRes(self.name(line[1].text, line[1]),
                                             self.name(line[2].text, line[2]), value))
            elif section == "*INDUC":
                continue
            else:
                raise self.ts.error(f"unexpected '{tok.text}' outside a *D_NET section", token=tok)


def read_spef_header(src: Source, target_divider: str = "/") -> SpefHeader:
    header = SpefHeader()
    reader = _Reader(TokenStream(src, _TOKENS), header, target_divider)
    reader.read_header()
    return header


def parse_spef(source, hierarchy_divider: str = "/", chunks: int = 1, threads: int = 1) -> SpefData:
    """
    Parse SPEF text (optionally gzipped) into ``SpefData``.

    Names are resolved through the name map and rewritten to use
    ``hierarchy_divider``; ``chunks > 1`` parses *D_NET blocks in parallel.
    """
    src = load_source(source)
    header = read_spef_header(src, hierarchy_divider)

    ranges = split_chunks(src, chunks, "spef")
    body_ranges = [(max(s, header.body_start), e) for s, e in ranges if e > header.body_start]

    def _body(start: int, end: int) -> tuple[list[SpefNet], int]:
        return _Reader(TokenStream(src, _TOKENS, start, end), header, hierarchy_divider).read_nets()

    parts = map_chunks(_body, body_ranges, threads)
    nets = [net for part, _ in parts for net in part]
    skipped = sum(n for _, n in parts)
    if skipped:
        logger.warning("Reduced *R_NET sections are not supported", extra={"count": skipped, "source": src.name})
    logger.debug("SPEF parsed", extra={"source": src.name, "nets": len(nets), "chunks": len(body_ranges)})
    return SpefData(
        name_map=dict(header.name_map),
        nets=nets,
        delimiter=header.delimiter,
        design=header.design,
        skipped_rnets=skipped,
    )
