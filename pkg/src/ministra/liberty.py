# src/ministra/liberty.py

"""
Liberty (.lib) reader.

Parsing happens in two passes. The first pass turns each file into a generic
tree of groups and attributes with nothing but syntax checking. The second
pass resolves units across all files, builds lookup-table templates, and then
converts every ``cell`` group into typed cells, pins and timing arcs. Values
are converted to ps / fF / kOhm as they are read.
"""

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from .boolexpr import Expr, parse_expr
from .chunking import parallel_map
from .exceptions import LibraryMergeError, ParseError, TableDimensionError
from .lexer import TokenStream
from .sources import Source, load_source

logger = logging.getLogger(__name__)

ArcKind = Literal[
    "combinational",
    "rising_edge_clk_to_q",
    "falling_edge_clk_to_q",
    "setup_rising",
    "setup_falling",
    "hold_rising",
    "hold_falling",
]
Sense = Literal["positive_unate", "negative_unate", "non_unate"]

DELAY_KINDS = frozenset({"combinational", "rising_edge_clk_to_q", "falling_edge_clk_to_q"})
CHECK_KINDS = frozenset({"setup_rising", "setup_falling", "hold_rising", "hold_falling"})
DELAY_TABLES = ("cell_rise", "cell_fall", "rise_transition", "fall_transition")
CHECK_TABLES = ("rise_constraint", "fall_constraint")

_TIMING_TYPES: dict[str, ArcKind] = {
    "combinational": "combinational",
    "combinational_rise": "combinational",
    "combinational_fall": "combinational",
    "rising_edge": "rising_edge_clk_to_q",
    "falling_edge": "falling_edge_clk_to_q",
    "setup_rising": "setup_rising",
    "setup_falling": "setup_falling",
    "hold_rising": "hold_rising",
    "hold_falling": "hold_falling",
}

# Template variables, split by axis role and by physical dimension.
_SLEW_AXIS = frozenset({"input_net_transition", "input_transition_time", "constrained_pin_transition"})
_LOAD_AXIS = frozenset({"total_output_net_capacitance", "related_pin_transition"})
_TIME_VARS = frozenset(
    {"input_net_transition", "input_transition_time", "constrained_pin_transition", "related_pin_transition"}
)
_CAP_VARS = frozenset({"total_output_net_capacitance"})

_DEFAULT_TIME_PS = 1000.0  # 1ns
_DEFAULT_CAP_FF = 1000.0  # 1pf
_DEFAULT_RES_KOHM = 1.0  # 1kohm

_TIME_SUFFIX = {"s": 1e12, "ms": 1e9, "us": 1e6, "ns": 1e3, "ps": 1.0, "fs": 1e-3}
_CAP_SUFFIX = {"f": 1e15, "mf": 1e12, "uf": 1e9, "nf": 1e6, "pf": 1e3, "ff": 1.0}
_RES_SUFFIX = {"ohm": 1e-3, "kohm": 1.0, "mohm": 1e3}

_TOKENS = re.compile(
    rb"""
    (?P<comment>/\*[\s\S]*?\*/|//[^\n]*)
    |(?P<ws>[ \t\r\f]+|\\\r?\n)
    |(?P<nl>\n)
    |(?P<string>"(?:[^"\\]|\\[\s\S])*")
    |(?P<punct>[{}();:,])
    |(?P<word>[^\s{}();:,"\\]+)
    """,
    re.VERBOSE,
)
_UNIT = re.compile(r"^\s*([0-9.eE+-]*)\s*([A-Za-z]+)\s*$")


# --- Generic group tree ---


@dataclass(slots=True)
class Group:
    kind: str
    args: list[str]
    line: int
    attrs: dict[str, str] = field(default_factory=dict)
    complex_attrs: dict[str, list[list[str]]] = field(default_factory=dict)
    groups: list["Group"] = field(default_factory=list)

    def children(self, kind: str) -> list["Group"]:
        return [g for g in self.groups if g.kind == kind]


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        text = text[1:-1]
        text = re.sub(r"\\\r?\n", "", text)
        text = text.replace('\\"', '"')
    return text


def _parse_body(ts: TokenStream, parent: Group, closing: bool) -> None:
    while True:
        tok = ts.peek()
        if tok is None:
            if closing:
                raise ts.error(f"missing '}}' for group '{parent.kind}' opened on line {parent.line}")
            return
        if tok.text == "}":
            if not closing:
                raise ts.error("unbalanced '}'", token=tok)
            ts.next()
            return
        if tok.text == ";":
            ts.next()
            continue

        name = ts.expect_kind("word", "string")
        sep = ts.next()
        if sep.text == ":":
            parts: list[str] = []
            while (t := ts.peek()) is not None and t.text not in (";", "}") and t.line == sep.line:
                parts.append(_unquote(ts.next().text))
            ts.accept(";")
            if not parts:
                raise ts.error(f"attribute '{name.text}' has no value", token=sep)
            parent.attrs[name.text] = " ".join(parts)
        elif sep.text == "(":
            args: list[str] = []
            while True:
                t = ts.next()
                if t.text == ")":
                    break
                if t.text == ",":
                    continue
                if t.kind not in ("word", "string"):
                    raise ts.error(f"unexpected '{t.text}' in argument list of '{name.text}'", token=t)
                args.append(_unquote(t.text))
            if ts.accept("{"):
                child = Group(name.text, args, name.line)
                _parse_body(ts, child, closing=True)
                parent.groups.append(child)
            else:
                ts.accept(";")
                parent.complex_attrs.setdefault(name.text, []).append(args)
        else:
            raise ts.error(f"expected ':' or '(' after '{name.text}', found '{sep.text}'", token=sep)


def parse_group_tree(source: Source) -> Group:
    """Syntax pass: return the top-level ``library`` group of one file."""
    ts = TokenStream(source, _TOKENS)
    root = Group("<file>", [], 1)
    _parse_body(ts, root, closing=False)
    libs = root.children("library")
    if len(libs) != 1 or len(root.groups) != 1:
        raise ParseError("expected exactly one top-level library group", file=source.name, offset=0, line=1)
    return libs[0]


# --- Typed library model ---


@dataclass(slots=True, eq=False)
class Lut2D:
    """NLDM table; ``index_1`` is the slew axis and ``index_2`` the load axis."""

    index_1: np.ndarray | None
    index_2: np.ndarray | None
    values: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lut2D):
            return NotImplemented
        return (
            _same_axis(self.index_1, other.index_1)
            and _same_axis(self.index_2, other.index_2)
            and np.array_equal(self.values, other.values)
        )


def _same_axis(a: np.ndarray | None, b: np.ndarray | None) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


@dataclass(frozen=True, slots=True)
class LutTemplate:
    name: str
    variables: tuple[str, ...]
    index_1: np.ndarray | None = field(compare=False)
    index_2: np.ndarray | None = field(compare=False)


@dataclass(slots=True)
class LibertyPin:
    name: str
    direction: Literal["input", "output", "inout"]
    capacitance: float = 0.0
    function: str | None = None
    function_expr: Expr | None = None
    max_capacitance: float | None = None
    is_clock: bool = False


@dataclass(slots=True)
class TimingArc:
    from_pin: str
    to_pin: str
    sense: Sense
    kind: ArcKind
    when: str | None = None
    when_expr: Expr | None = None
    tables: dict[str, Lut2D] = field(default_factory=dict)

    @property
    def is_check(self) -> bool:
        return self.kind in CHECK_KINDS


@dataclass(slots=True)
class LibertyCell:
    name: str
    pins: list[LibertyPin]
    arcs: list[TimingArc]
    is_sequential: bool
    area: float = 0.0
    _pin_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._pin_index = {p.name: i for i, p in enumerate(self.pins)}

    def pin_id(self, name: str) -> int | None:
        return self._pin_index.get(name)


@dataclass
class LibertyLibrary:
    name: str
    time_unit: float  # seconds per unit
    cap_unit: float  # farads per unit
    res_unit: float  # ohms per unit
    templates: dict[str, LutTemplate]
    cells: list[LibertyCell]
    skipped_groups: int = 0
    _cell_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._cell_index = {c.name: i for i, c in enumerate(self.cells)}

    def cell_id(self, name: str) -> int | None:
        return self._cell_index.get(name)

    def cell(self, name: str) -> LibertyCell:
        return self.cells[self._cell_index[name]]

    @property
    def time_unit_ps(self) -> float:
        return self.time_unit * 1e12

    @property
    def cap_unit_ff(self) -> float:
        return self.cap_unit * 1e15

    @cached_property
    def default_input_slew(self) -> float:
        """Smallest slew-axis breakpoint of any delay table (0 if none)."""
        best = np.inf
        for cell in self.cells:
            for arc in cell.arcs:
                for name in ("cell_rise", "cell_fall", "rise_transition", "fall_transition"):
                    table = arc.tables.get(name)
                    if table is not None and table.index_1 is not None and table.index_1.size:
                        best = min(best, float(table.index_1[0]))
        return 0.0 if best == np.inf else best


# --- Units ---


@dataclass(frozen=True, slots=True)
class _Units:
    time_ps: float
    cap_ff: float
    res_kohm: float


def _scale_unit(text: str, table: dict[str, float], what: str, source: Source, line: int) -> float:
    m = _UNIT.match(text)
    suffix = m.group(2).lower() if m else None
    if m is None or suffix not in table:
        raise ParseError(f"unrecognised {what} unit '{text}'", file=source.name, offset=0, line=line)
    magnitude = float(m.group(1)) if m.group(1) else 1.0
    return magnitude * table[suffix]


def _declared_units(lib: Group, source: Source) -> dict[str, float]:
    declared: dict[str, float] = {}
    if "time_unit" in lib.attrs:
        declared["time"] = _scale_unit(lib.attrs["time_unit"], _TIME_SUFFIX, "time", source, lib.line)
    if "capacitive_load_unit" in lib.complex_attrs:
        args = lib.complex_attrs["capacitive_load_unit"][-1]
        if len(args) != 2:
            raise ParseError("capacitive_load_unit takes (value, unit)", file=source.name, offset=0, line=lib.line)
        declared["cap"] = _scale_unit(f"{args[0]}{args[1]}", _CAP_SUFFIX, "capacitance", source, lib.line)
    if "pulling_resistance_unit" in lib.attrs:
        declared["res"] = _scale_unit(lib.attrs["pulling_resistance_unit"], _RES_SUFFIX, "resistance", source, lib.line)
    return declared


# --- Semantic pass ---


@dataclass(slots=True)
class _FileTree:
    source: Source
    root: Group
    declared: dict[str, float]
    units: _Units | None = None


class _Builder:
    def __init__(self, files: list[_FileTree]):
        self.files = files
        self.skipped = 0
        self.templates: dict[str, tuple[LutTemplate, _FileTree]] = {}

    def error(self, ft: _FileTree, line: int, message: str) -> ParseError:
        return ParseError(message, file=ft.source.name, offset=0, line=line)

    def _floats(self, ft: _FileTree, line: int, parts: Sequence[str]) -> np.ndarray:
        try:
            return np.array(
                [float(x) for part in parts for x in part.replace(",", " ").split()], dtype=np.float64
            )
        except ValueError as e:
            raise self.error(ft, line, f"bad numeric list: {e}") from e

    def _axis(self, ft: _FileTree, line: int, raw: np.ndarray, variable: str | None) -> np.ndarray:
        units = ft.units
        assert units is not None
        scale = 1.0
        if variable in _TIME_VARS:
            scale = units.time_ps
        elif variable in _CAP_VARS:
            scale = units.cap_ff
        axis = raw * scale
        if axis.size > 1 and not np.all(np.diff(axis) > 0):
            raise self.error(ft, line, "table index is not strictly ascending")
        return axis

    # --- Templates ---
    def collect_templates(self) -> None:
        for ft in self.files:
            for g in ft.root.children("lu_table_template"):
                if not g.args:
                    raise self.error(ft, g.line, "lu_table_template without a name")
                variables = tuple(
                    g.attrs[f"variable_{i}"] for i in (1, 2, 3) if f"variable_{i}" in g.attrs
                )
                if len(variables) > 2:
                    self.skipped += 1
                    continue
                idx = []
                for i in (1, 2):
                    key = f"index_{i}"
                    if key in g.complex_attrs and i <= len(variables):
                        raw = self._floats(ft, g.line, g.complex_attrs[key][-1])
                        idx.append(self._axis(ft, g.line, raw, variables[i - 1]))
                    else:
                        idx.append(None)
                tmpl = LutTemplate(g.args[0], variables, idx[0], idx[1])
                self.templates[tmpl.name] = (tmpl, ft)

    # --- Tables ---
    def build_table(self, ft: _FileTree, g: Group, value_scale: float) -> Lut2D:
        tmpl_name = g.args[0] if g.args else "scalar"
        if tmpl_name == "scalar":
            variables: tuple[str, ...] = ()
            base: list[np.ndarray | None] = [None, None]
        else:
            entry = self.templates.get(tmpl_name)
            if entry is None:
                raise self.error(ft, g.line, f"table references undefined template '{tmpl_name}'")
            tmpl = entry[0]
            variables = tmpl.variables
            base = [tmpl.index_1, tmpl.index_2]

        axes: list[np.ndarray | None] = []
        for i in (1, 2):
            key = f"index_{i}"
            if key in g.complex_attrs and i <= len(variables):
                raw = self._floats(ft, g.line, g.complex_attrs[key][-1])
                axes.append(self._axis(ft, g.line, raw, variables[i - 1]))
            else:
                axes.append(base[i - 1] if i <= len(variables) else None)
        for i, axis in enumerate(axes[: len(variables)]):
            if axis is None:
                raise self.error(ft, g.line, f"table '{g.kind}' has no index_{i + 1}")

        if "values" not in g.complex_attrs:
            raise self.error(ft, g.line, f"table '{g.kind}' has no values")
        flat = self._floats(ft, g.line, g.complex_attrs["values"][-1])
        n1 = axes[0].size if axes[0] is not None else 1
        n2 = axes[1].size if axes[1] is not None else 1
        if flat.size != n1 * n2:
            raise TableDimensionError(
                f"table '{g.kind}' has {flat.size} values but its indices describe {n1}x{n2}",
                file=ft.source.name,
                offset=0,
                line=g.line,
            )
        values = flat.reshape(n1, n2) * value_scale
        idx1, idx2 = axes

        # Canonical orientation: slew axis first, load axis second.
        if len(variables) == 2 and variables[0] in _LOAD_AXIS and variables[1] in _SLEW_AXIS:
            idx1, idx2, values = idx2, idx1, values.T.copy()
        elif len(variables) == 1 and variables[0] in _LOAD_AXIS:
            idx1, idx2, values = None, idx1, values.reshape(1, n1)
        return Lut2D(idx1, idx2, values)

    # --- Cells ---
    def build_cell(self, ft: _FileTree, g: Group, derate: float) -> LibertyCell:
        units = ft.units
        assert units is not None
        if not g.args:
            raise self.error(ft, g.line, "cell group without a name")
        name = g.args[0]
        state_vars: set[str] = set()
        sequential = False
        for kind in ("ff", "latch", "ff_bank", "latch_bank"):
            for sg in g.children(kind):
                sequential = True
                state_vars.update(sg.args)

        pins: list[LibertyPin] = []
        pin_groups: list[tuple[LibertyPin, Group]] = []
        for sg in g.groups:
            if sg.kind != "pin":
                if sg.kind not in ("ff", "latch", "ff_bank", "latch_bank"):
                    self.skipped += 1
                continue
            direction = sg.attrs.get("direction", "input")
            if direction == "internal":
                self.skipped += 1
                continue
            if direction not in ("input", "output", "inout"):
                raise self.error(ft, sg.line, f"pin direction '{direction}' is not supported")
            cap_attr = sg.attrs.get("capacitance")
            if cap_attr is None:
                rise_fall = [sg.attrs[a] for a in ("rise_capacitance", "fall_capacitance") if a in sg.attrs]
                cap = max((float(v) for v in rise_fall), default=0.0)
            else:
                cap = float(cap_attr)
            max_cap = sg.attrs.get("max_capacitance")
            for pin_name in sg.args:
                pin = LibertyPin(
                    name=pin_name,
                    direction=direction,  # type: ignore[arg-type]
                    capacitance=cap * units.cap_ff,
                    function=sg.attrs.get("function"),
                    max_capacitance=float(max_cap) * units.cap_ff if max_cap is not None else None,
                    is_clock=sg.attrs.get("clock", "false").lower() == "true",
                )
                pins.append(pin)
                pin_groups.append((pin, sg))

        declared = {p.name for p in pins}
        for pin, sg in pin_groups:
            if pin.function is not None:
                try:
                    pin.function_expr = parse_expr(pin.function)
                except ParseError as e:
                    raise self.error(ft, sg.line, e.message.split(": ", 1)[-1]) from e
                unknown = pin.function_expr.variables() - declared - state_vars
                if unknown:
                    raise self.error(
                        ft, sg.line, f"function of pin '{pin.name}' references undeclared {sorted(unknown)}"
                    )

        arcs: list[TimingArc] = []
        pin_by_name = {p.name: p for p in pins}
        for pin, sg in pin_groups:
            for tg in sg.children("timing"):
                arcs.extend(self.build_arcs(ft, tg, pin, pin_by_name, derate))
            for other in sg.groups:
                if other.kind != "timing":
                    self.skipped += 1

        sequential = sequential or any(a.kind != "combinational" for a in arcs)
        return LibertyCell(name=name, pins=pins, arcs=arcs, is_sequential=sequential,
                           area=float(g.attrs.get("area", 0.0)))

    def build_arcs(
        self,
        ft: _FileTree,
        tg: Group,
        pin: LibertyPin,
        pin_by_name: dict[str, LibertyPin],
        derate: float,
    ) -> list[TimingArc]:
        units = ft.units
        assert units is not None
        timing_type = tg.attrs.get("timing_type", "combinational")
        kind = _TIMING_TYPES.get(timing_type)
        if kind is None:
            self.skipped += 1
            return []
        related = tg.attrs.get("related_pin", "").split()
        if not related:
            raise self.error(ft, tg.line, f"timing group on pin '{pin.name}' has no related_pin")

        wanted = CHECK_TABLES if kind in CHECK_KINDS else DELAY_TABLES
        tables: dict[str, Lut2D] = {}
        for sub in tg.groups:
            if sub.kind in wanted:
                scale = units.time_ps * (derate if sub.kind.endswith("_transition") else 1.0)
                tables[sub.kind] = self.build_table(ft, sub, scale)
            else:
                self.skipped += 1

        when = tg.attrs.get("when")
        when_expr = None
        if when is not None:
            try:
                when_expr = parse_expr(when)
            except ParseError as e:
                raise self.error(ft, tg.line, e.message.split(": ", 1)[-1]) from e

        arcs = []
        for rel in related:
            if rel not in pin_by_name:
                raise self.error(ft, tg.line, f"related_pin '{rel}' is not a pin of this cell")
            sense = tg.attrs.get("timing_sense")
            if sense is None:
                sense = _infer_sense(pin, rel) if kind == "combinational" else "non_unate"
            if sense not in ("positive_unate", "negative_unate", "non_unate"):
                raise self.error(ft, tg.line, f"unknown timing_sense '{sense}'")
            arcs.append(
                TimingArc(
                    from_pin=rel,
                    to_pin=pin.name,
                    sense=sense,  # type: ignore[arg-type]
                    kind=kind,
                    when=when,
                    when_expr=when_expr,
                    tables=dict(tables),
                )
            )
        return arcs


def _infer_sense(pin: LibertyPin, related: str) -> Sense:
    """Derive unateness of ``pin``'s function with respect to ``related``."""
    expr = pin.function_expr
    if expr is None or related not in expr.variables():
        return "non_unate"
    others = sorted(expr.variables() - {related})
    if len(others) > 12:
        return "non_unate"
    rises = falls = False
    for bits in range(1 << len(others)):
        env = {name: (bits >> i) & 1 for i, name in enumerate(others)}
        lo = expr.evaluate({**env, related: 0})
        hi = expr.evaluate({**env, related: 1})
        if lo is None or hi is None:
            return "non_unate"
        rises |= hi > lo
        falls |= hi < lo
    if rises and falls:
        return "non_unate"
    return "negative_unate" if falls else "positive_unate"


def _resolve_units(files: list[_FileTree]) -> _Units:
    finest: dict[str, float] = {}
    for ft in files:
        for dim, value in ft.declared.items():
            finest[dim] = min(finest.get(dim, value), value)
    merged = _Units(
        time_ps=finest.get("time", _DEFAULT_TIME_PS),
        cap_ff=finest.get("cap", _DEFAULT_CAP_FF),
        res_kohm=finest.get("res", _DEFAULT_RES_KOHM),
    )
    for ft in files:
        ft.units = _Units(
            time_ps=ft.declared.get("time", merged.time_ps),
            cap_ff=ft.declared.get("cap", merged.cap_ff),
            res_kohm=ft.declared.get("res", merged.res_kohm),
        )
    return merged


def parse_liberty(sources: Sequence, threads: int = 1) -> LibertyLibrary:
    """
    Parse and merge one or more Liberty files.

    ``sources`` may hold paths, bytes or ``Source`` objects (gzip allowed).
    The merge is independent of file order: cells and templates are keyed by
    name and a cell defined twice must be defined identically.
    """
    if not sources:
        raise ValueError("parse_liberty needs at least one source")
    loaded = [load_source(s) for s in sources]

    def _syntax(src: Source) -> _FileTree:
        root = parse_group_tree(src)
        return _FileTree(src, root, _declared_units(root, src))

    files = parallel_map(_syntax, loaded, threads)
    merged_units = _resolve_units(files)

    builder = _Builder(files)
    builder.collect_templates()

    cells: dict[str, LibertyCell] = {}
    for ft in files:
        derate = float(ft.root.attrs.get("slew_derate_from_library", 1.0))
        for g in ft.root.groups:
            if g.kind in ("lu_table_template", "cell"):
                continue
            builder.skipped += 1
        for g in ft.root.children("cell"):
            cell = builder.build_cell(ft, g, derate)
            existing = cells.get(cell.name)
            if existing is None:
                cells[cell.name] = cell
            elif existing != cell:
                raise LibraryMergeError(cell.name, context={"file": ft.source.name})
            else:
                logger.debug("Identical duplicate cell ignored", extra={"cell": cell.name})

    library = LibertyLibrary(
        name=",".join(sorted({ft.root.args[0] if ft.root.args else "" for ft in files})),
        time_unit=merged_units.time_ps * 1e-12,
        cap_unit=merged_units.cap_ff * 1e-15,
        res_unit=merged_units.res_kohm * 1e3,
        templates={name: entry[0] for name, entry in sorted(builder.templates.items())},
        cells=[cells[name] for name in sorted(cells)],
        skipped_groups=builder.skipped,
    )
    if builder.skipped:
        logger.info(
            "Skipped unsupported Liberty groups",
            extra={"count": builder.skipped, "files": [ft.source.name for ft in files]},
        )
    logger.info("Liberty library loaded", extra={"cells": len(library.cells), "files": len(files)})
    return library
