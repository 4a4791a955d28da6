# src/ministra/sdc.py

"""
SDC command layer on top of the Tcl interpreter.

``eval_sdc`` runs a constraint script against a frozen netlist and returns an
immutable ``Constraints`` object. Times are in ps and capacitances in fF; the
script's units default to the main library's units unless ``set_units``
overrides them.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, Literal

from .exceptions import ConstraintError, TclError
from .liberty import LibertyLibrary
from .netlist import DIR_INOUT, DIR_INPUT, DIR_OUTPUT, FlatNetlist
from .query import ObjectKind, ObjectQuery, ObjectSet
from .tcl import Interp, to_list, to_number, to_str

logger = logging.getLogger(__name__)

ExceptionKind = Literal["false_path", "multicycle", "max_delay", "min_delay"]

_TIME_PS = {"s": 1e12, "ms": 1e9, "us": 1e6, "ns": 1e3, "ps": 1.0, "fs": 1e-3}
_CAP_FF = {"f": 1e15, "mf": 1e12, "uf": 1e9, "nf": 1e6, "pf": 1e3, "ff": 1.0}

_IGNORED_COMMANDS = frozenset({
    "create_generated_clock",
    "set_clock_groups",
    "set_clock_uncertainty",
    "set_clock_latency",
    "set_propagated_clock",
    "set_driving_cell",
    "set_max_transition",
    "set_max_fanout",
    "set_timing_derate",
    "set_clock_transition",
    "set_max_capacitance",
    "set_operating_conditions",
    "set_wire_load_model",
})


# --- Constraint model ---


@dataclass(frozen=True, slots=True)
class SdcClock:
    name: str
    period: float
    waveform: tuple[float, float]
    sources: tuple[int, ...]

    @property
    def is_virtual(self) -> bool:
        return not self.sources


@dataclass(frozen=True, slots=True)
class IoDelay:
    pin: int
    clock: str | None
    clock_fall: bool
    mode: Literal["min", "max", "both"]
    edge: Literal["rise", "fall", "both"]
    value: float
    direction: Literal["input", "output"]

    def applies(self, mode: str, edge: str) -> bool:
        return self.mode in ("both", mode) and self.edge in ("both", edge)


@dataclass(frozen=True, slots=True)
class NodeSet:
    """Pins and clock names named by one ``-from`` / ``-through`` / ``-to`` argument."""

    pins: frozenset[int] = frozenset()
    clocks: frozenset[str] = frozenset()

    def __bool__(self) -> bool:
        return bool(self.pins or self.clocks)


@dataclass(frozen=True, slots=True)
class PathException:
    kind: ExceptionKind
    from_: NodeSet | None
    through: tuple[NodeSet, ...]
    to: NodeSet | None
    priority: int
    line: int
    # multicycle
    multiplier: int = 1
    apply: Literal["setup", "hold"] = "setup"
    anchor: Literal["start", "end"] = "end"
    # min/max delay
    value: float = 0.0
    # false path
    setup: bool = True
    hold: bool = True

    def applies_to(self, check: Literal["setup", "hold"]) -> bool:
        if self.kind == "max_delay":
            return check == "setup"
        if self.kind == "min_delay":
            return check == "hold"
        if self.kind == "false_path":
            return self.setup if check == "setup" else self.hold
        return True


@dataclass(frozen=True, slots=True)
class CaseValue:
    pin: int
    value: int


@dataclass(frozen=True, slots=True)
class DisabledArc:
    """``set_disable_timing`` target: a whole pin, or lib-pin arcs of one cell."""

    pin: int | None = None
    cell: int | None = None
    from_pin: str | None = None
    to_pin: str | None = None


@dataclass(frozen=True)
class Constraints:
    clocks: tuple[SdcClock, ...] = ()
    io_delays: tuple[IoDelay, ...] = ()
    exceptions: tuple[PathException, ...] = ()
    case_values: tuple[CaseValue, ...] = ()
    input_transitions: dict[int, tuple[float, float]] = field(default_factory=dict)
    loads: dict[int, float] = field(default_factory=dict)
    disabled: tuple[DisabledArc, ...] = ()
    warnings: int = 0

    def clock(self, name: str) -> SdcClock | None:
        return next((c for c in self.clocks if c.name == name), None)

    @property
    def clock_names(self) -> list[str]:
        return [c.name for c in self.clocks]


# --- Option parsing ---


@dataclass(slots=True)
class _Options:
    flags: set[str] = field(default_factory=set)
    values: dict[str, Any] = field(default_factory=dict)
    repeated: dict[str, list[Any]] = field(default_factory=dict)
    positional: list[Any] = field(default_factory=list)


def _parse_options(
    command: str,
    args: list[Any],
    line: int,
    flags: frozenset[str] = frozenset(),
    valued: frozenset[str] = frozenset(),
    repeated: frozenset[str] = frozenset(),
) -> _Options:
    out = _Options()
    i = 0
    while i < len(args):
        word = args[i]
        text = word if isinstance(word, str) else None
        if text is not None and text.startswith("-") and len(text) > 1 and not _is_number(text):
            name = text[1:]
            if name in flags:
                out.flags.add(name)
            elif name in valued or name in repeated:
                if i + 1 >= len(args):
                    raise ConstraintError(f"{command}: option '{text}' needs a value", line=line)
                i += 1
                if name in repeated:
                    out.repeated.setdefault(name, []).append(args[i])
                else:
                    out.values[name] = args[i]
            else:
                raise ConstraintError(f"{command}: unknown option '{text}'", line=line)
        else:
            out.positional.append(word)
        i += 1
    return out


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


# --- Interpreter binding ---


class _SdcSession:
    def __init__(self, netlist: FlatNetlist, lib: LibertyLibrary, name: str):
        self.netlist = netlist
        self.query = ObjectQuery(netlist)
        self.name = name
        self.time_scale = lib.time_unit_ps
        self.cap_scale = lib.cap_unit_ff
        self.clocks: dict[str, SdcClock] = {}
        self.io_delays: list[IoDelay] = []
        self.exceptions: list[PathException] = []
        self.case_values: dict[int, int] = {}
        self.input_transitions: dict[int, tuple[float, float]] = {}
        self.loads: dict[int, float] = {}
        self.disabled: list[DisabledArc] = []
        self.warnings = 0
        self.interp = Interp(name=name, unknown=self.unknown)
        self._register()

    def warn(self, line: int, message: str) -> None:
        self.warnings += 1
        logger.warning(f"SDC-WARN {line}: {message}", extra={"script": self.name})

    def unknown(self, name: str, args: list[Any], line: int) -> Any:
        self.warn(line, f"unknown command '{name}' skipped")
        return ""

    def _register(self) -> None:
        table: dict[str, Callable[[list[Any], int], Any]] = {
            "get_ports": self.get_ports,
            "get_pins": self.get_pins,
            "get_cells": self.get_cells,
            "get_nets": self.get_nets,
            "get_clocks": self.get_clocks,
            "all_inputs": lambda args, line: self.query.all_inputs(),
            "all_outputs": lambda args, line: self.query.all_outputs(),
            "all_clocks": lambda args, line: ObjectSet("clocks", tuple(self.clocks), ("all_clocks",)),
            "all_registers": self.all_registers,
            "current_design": lambda args, line: "",
            "set_units": self.set_units,
            "create_clock": self.create_clock,
            "set_input_delay": lambda args, line: self.io_delay("input", args, line),
            "set_output_delay": lambda args, line: self.io_delay("output", args, line),
            "set_false_path": lambda args, line: self.path_exception("false_path", args, line),
            "set_multicycle_path": lambda args, line: self.path_exception("multicycle", args, line),
            "set_max_delay": lambda args, line: self.path_exception("max_delay", args, line),
            "set_min_delay": lambda args, line: self.path_exception("min_delay", args, line),
            "set_case_analysis": self.set_case_analysis,
            "set_input_transition": self.set_input_transition,
            "set_load": self.set_load,
            "set_disable_timing": self.set_disable_timing,
        }
        for name in _IGNORED_COMMANDS:
            table[name] = self._ignored(name)
        for name, fn in table.items():
            self.interp.register(name, fn)

    def _ignored(self, name: str) -> Callable[[list[Any], int], Any]:
        def handler(args: list[Any], line: int) -> Any:
            self.warn(line, f"'{name}' is not supported and was ignored")
            return ""

        return handler

    # --- Values ---
    def time(self, value: Any, line: int, what: str) -> float:
        try:
            return float(to_number(value)) * self.time_scale
        except ValueError as e:
            raise ConstraintError(f"{what}: expected a time value, got '{to_str(value)}'", line=line) from e

    def number(self, value: Any, line: int, what: str) -> float:
        try:
            return float(to_number(value))
        except ValueError as e:
            raise ConstraintError(f"{what}: expected a number, got '{to_str(value)}'", line=line) from e

    # --- Object handling ---
    def _query(self, kind: ObjectKind, args: list[Any], line: int) -> ObjectSet:
        opts = _parse_options(f"get_{kind}", args, line,
                              flags=frozenset({"hierarchical", "quiet", "nocase", "regexp"}),
                              valued=frozenset({"filter", "of_objects"}))
        if "filter" in opts.values:
            self.warn(line, f"get_{kind} -filter is not supported and was ignored")
        if "of_objects" in opts.values:
            return self.of_objects(kind, opts.values["of_objects"], line)
        patterns = [to_str(p) for a in opts.positional for p in to_list(a)]
        return self.query.query(kind, patterns, list(self.clocks))

    def get_ports(self, args: list[Any], line: int) -> ObjectSet:
        return self._query("ports", args, line)

    def get_pins(self, args: list[Any], line: int) -> ObjectSet:
        return self._query("pins", args, line)

    def get_cells(self, args: list[Any], line: int) -> ObjectSet:
        return self._query("cells", args, line)

    def get_nets(self, args: list[Any], line: int) -> ObjectSet:
        return self._query("nets", args, line)

    def get_clocks(self, args: list[Any], line: int) -> ObjectSet:
        return self._query("clocks", args, line)

    def of_objects(self, kind: ObjectKind, value: Any, line: int) -> ObjectSet:
        sources = self.objects(value, line, ("cells", "pins", "nets"))
        netlist = self.netlist
        pins = [int(p) for s in sources for p in self.query.pins_of(s)]
        if kind in ("pins", "ports"):
            ids = sorted({p for p in pins if netlist.is_port(p) == (kind == "ports")})
        elif kind == "cells":
            ids = sorted({c for p in pins if (c := netlist.cell_of(p)) is not None})
        elif kind == "nets":
            ids = sorted({int(netlist.pin_net[p]) for p in pins if int(netlist.pin_net[p]) < netlist.num_nets})
        else:
            ids = []
        return ObjectSet(kind, tuple(ids), ("-of_objects",))

    def all_registers(self, args: list[Any], line: int) -> ObjectSet:
        opts = _parse_options("all_registers", args, line,
                              flags=frozenset({"clock_pins", "data_pins", "cells", "edge_triggered"}),
                              valued=frozenset({"clock"}))
        if "clock_pins" in opts.flags:
            return self.query.all_registers("clock_pins")
        if "data_pins" in opts.flags:
            return self.query.all_registers("data_pins")
        return self.query.all_registers("cells")

    def objects(self, value: Any, line: int, kinds: tuple[ObjectKind, ...]) -> list[ObjectSet]:
        """Flatten a command argument into object collections; bare names are looked up."""
        if isinstance(value, ObjectSet):
            return [value]
        out: list[ObjectSet] = []
        for item in to_list(value):
            if isinstance(item, ObjectSet):
                out.append(item)
            elif isinstance(item, (list, tuple)):
                out.extend(self.objects(item, line, kinds))
            else:
                out.append(self.query.resolve_name(to_str(item), kinds, list(self.clocks)))
        return out

    def required(self, value: Any, line: int, command: str, kinds: tuple[ObjectKind, ...]) -> list[ObjectSet]:
        sets = self.objects(value, line, kinds)
        for s in sets:
            if not s:
                raise ConstraintError(f"{command}: '{s.describe()}' matches no objects", line=line)
        if not sets:
            raise ConstraintError(f"{command}: no objects given", line=line)
        return sets

    def pins(self, sets: list[ObjectSet]) -> list[int]:
        return sorted({int(p) for s in sets for p in self.query.pins_of(s)})

    def node_set(self, value: Any, line: int, command: str, kinds: tuple[ObjectKind, ...]) -> NodeSet:
        sets = self.required(value, line, command, kinds)
        clocks = frozenset(c for s in sets if s.kind == "clocks" for c in s.ids)
        pins = frozenset(self.pins([s for s in sets if s.kind != "clocks"]))
        return NodeSet(pins, clocks)

    # --- Commands ---
    def set_units(self, args: list[Any], line: int) -> Any:
        opts = _parse_options("set_units", args, line,
                              valued=frozenset({"time", "capacitance", "resistance", "voltage", "current", "power"}))
        if "time" in opts.values:
            self.time_scale = self._unit(to_str(opts.values["time"]), _TIME_PS, line)
        if "capacitance" in opts.values:
            self.cap_scale = self._unit(to_str(opts.values["capacitance"]), _CAP_FF, line)
        return ""

    def _unit(self, text: str, table: dict[str, float], line: int) -> float:
        lowered = text.strip().lower()
        digits = lowered.rstrip("abcdefghijklmnopqrstuvwxyz")
        suffix = lowered[len(digits):]
        if suffix not in table:
            raise ConstraintError(f"set_units: unsupported unit '{text}'", line=line)
        return (float(digits) if digits else 1.0) * table[suffix]

    def create_clock(self, args: list[Any], line: int) -> Any:
        opts = _parse_options("create_clock", args, line, flags=frozenset({"add"}),
                              valued=frozenset({"period", "name", "waveform", "comment"}))
        if "period" not in opts.values:
            raise ConstraintError("create_clock: -period is required", line=line)
        period = self.time(opts.values["period"], line, "create_clock -period")
        if period <= 0:
            raise ConstraintError("create_clock: period must be positive", line=line)
        if "waveform" in opts.values:
            edges = [self.time(v, line, "create_clock -waveform") for v in to_list(opts.values["waveform"])]
            if len(edges) != 2:
                raise ConstraintError("create_clock: -waveform takes exactly a rise and a fall edge", line=line)
            waveform = (edges[0], edges[1])
        else:
            waveform = (0.0, period / 2)
        if not 0 <= waveform[0] < waveform[1] < period:
            raise ConstraintError(f"create_clock: waveform {waveform} is invalid for period {period}", line=line)
        sources: list[int] = []
        if opts.positional:
            sets = self.required(opts.positional, line, "create_clock", ("ports", "pins"))
            sources = self.pins(sets)
        name = to_str(opts.values["name"]) if "name" in opts.values else None
        if name is None:
            if not sources:
                raise ConstraintError("create_clock: a virtual clock needs -name", line=line)
            name = self.netlist.pin_name(sources[0])
        if name in self.clocks:
            self.warn(line, f"clock '{name}' redefined")
        self.clocks[name] = SdcClock(name, period, waveform, tuple(sources))
        return name

    def io_delay(self, direction: Literal["input", "output"], args: list[Any], line: int) -> Any:
        command = f"set_{direction}_delay"
        opts = _parse_options(command, args, line,
                              flags=frozenset({"clock_fall", "min", "max", "rise", "fall", "add_delay",
                                               "network_latency_included", "source_latency_included",
                                               "level_sensitive"}),
                              valued=frozenset({"clock", "reference_pin"}))
        if len(opts.positional) != 2:
            raise ConstraintError(f"{command}: expected a delay value and a port list", line=line)
        value = self.time(opts.positional[0], line, command)
        clock = None
        if "clock" in opts.values:
            clocks = self.required(opts.values["clock"], line, command, ("clocks",))
            names = [c for s in clocks for c in s.ids]
            if len(names) != 1 or clocks[0].kind != "clocks":
                raise ConstraintError(f"{command}: -clock must name exactly one clock", line=line)
            clock = names[0]
        mode = "both" if ("min" in opts.flags) == ("max" in opts.flags) else ("min" if "min" in opts.flags else "max")
        edge = "both" if ("rise" in opts.flags) == ("fall" in opts.flags) else ("rise" if "rise" in opts.flags else "fall")
        pins = self.pins(self.required(opts.positional[1], line, command, ("ports", "pins")))
        wanted = DIR_INPUT if direction == "input" else DIR_OUTPUT
        for pin in pins:
            if not self.netlist.is_port(pin):
                raise ConstraintError(f"{command}: '{self.netlist.pin_name(pin)}' is not a port", line=line)
            d = int(self.netlist.pin_dir[pin])
            if d not in (wanted, DIR_INOUT):
                raise ConstraintError(
                    f"{command}: port '{self.netlist.pin_name(pin)}' is not an {direction}", line=line
                )
        if "add_delay" not in opts.flags:
            drop = set(pins)
            self.io_delays = [
                d for d in self.io_delays
                if not (d.pin in drop and d.direction == direction and d.clock == clock
                        and (mode == "both" or d.mode in (mode, "both"))
                        and (edge == "both" or d.edge in (edge, "both")))
            ]
        for pin in pins:
            self.io_delays.append(IoDelay(pin, clock, "clock_fall" in opts.flags, mode, edge, value, direction))
        return ""

    def path_exception(self, kind: ExceptionKind, args: list[Any], line: int) -> Any:
        command = {"false_path": "set_false_path", "multicycle": "set_multicycle_path",
                   "max_delay": "set_max_delay", "min_delay": "set_min_delay"}[kind]
        edged = ("rise_from", "fall_from", "rise_to", "fall_to", "rise_through", "fall_through")
        opts = _parse_options(command, args, line,
                              flags=frozenset({"setup", "hold", "start", "end", "rise", "fall", "ignore_clock_latency"}),
                              valued=frozenset({"from", "to", "comment", *edged[:2], *edged[2:4]}),
                              repeated=frozenset({"through", *edged[4:]}))
        for key in edged:
            if key in opts.values or key in opts.repeated:
                self.warn(line, f"{command} -{key} is treated as -{key.split('_')[1]}")
                plain = key.split("_")[1]
                if key in opts.repeated:
                    opts.repeated.setdefault(plain, []).extend(opts.repeated.pop(key))
                elif plain in opts.values:
                    raise ConstraintError(f"{command}: -{plain} given twice", line=line)
                else:
                    opts.values[plain] = opts.values.pop(key)
        if "rise" in opts.flags or "fall" in opts.flags:
            self.warn(line, f"{command} -rise/-fall are ignored")

        from_ = self.node_set(opts.values["from"], line, command, ("ports", "pins", "cells")) \
            if "from" in opts.values else None
        to = self.node_set(opts.values["to"], line, command, ("ports", "pins", "cells")) \
            if "to" in opts.values else None
        through = tuple(self.node_set(t, line, command, ("pins", "ports", "cells", "nets"))
                        for t in opts.repeated.get("through", []))
        if from_ is None and to is None and not through:
            raise ConstraintError(f"{command}: at least one of -from, -through or -to is required", line=line)

        extra: dict[str, Any] = {}
        if kind == "multicycle":
            if len(opts.positional) != 1:
                raise ConstraintError(f"{command}: expected one path multiplier", line=line)
            n = self.number(opts.positional[0], line, command)
            if n != int(n) or n < 0 or ("hold" not in opts.flags and n < 1):
                raise ConstraintError(f"{command}: multiplier must be a positive integer", line=line)
            apply = "hold" if "hold" in opts.flags else "setup"
            default_anchor = "end" if apply == "setup" else "start"
            anchor = "start" if "start" in opts.flags else "end" if "end" in opts.flags else default_anchor
            extra = {"multiplier": int(n), "apply": apply, "anchor": anchor}
        elif kind in ("max_delay", "min_delay"):
            if len(opts.positional) != 1:
                raise ConstraintError(f"{command}: expected one delay value", line=line)
            extra = {"value": self.time(opts.positional[0], line, command)}
        elif opts.positional:
            raise ConstraintError(f"{command}: unexpected argument '{to_str(opts.positional[0])}'", line=line)
        if kind == "false_path" and ("setup" in opts.flags or "hold" in opts.flags):
            extra = {"setup": "setup" in opts.flags, "hold": "hold" in opts.flags}

        self.exceptions.append(PathException(
            kind=kind, from_=from_, through=through, to=to,
            priority=len(self.exceptions), line=line, **extra,
        ))
        return ""

    def set_case_analysis(self, args: list[Any], line: int) -> Any:
        if len(args) != 2:
            raise ConstraintError("set_case_analysis: expected a value and an object list", line=line)
        raw = to_str(args[0]).strip().lower()
        values = {"0": 0, "zero": 0, "1": 1, "one": 1}
        if raw not in values:
            self.warn(line, f"set_case_analysis value '{raw}' is not supported")
            return ""
        for pin in self.pins(self.required(args[1], line, "set_case_analysis", ("ports", "pins"))):
            self.case_values[pin] = values[raw]
        return ""

    def set_input_transition(self, args: list[Any], line: int) -> Any:
        opts = _parse_options("set_input_transition", args, line,
                              flags=frozenset({"min", "max", "rise", "fall"}), valued=frozenset({"clock"}))
        if len(opts.positional) != 2:
            raise ConstraintError("set_input_transition: expected a value and a port list", line=line)
        value = self.time(opts.positional[0], line, "set_input_transition")
        rise = "fall" not in opts.flags or "rise" in opts.flags
        fall = "rise" not in opts.flags or "fall" in opts.flags
        for pin in self.pins(self.required(opts.positional[1], line, "set_input_transition", ("ports",))):
            old = self.input_transitions.get(pin, (value, value))
            self.input_transitions[pin] = (value if rise else old[0], value if fall else old[1])
        return ""

    def set_load(self, args: list[Any], line: int) -> Any:
        opts = _parse_options("set_load", args, line,
                              flags=frozenset({"pin_load", "wire_load", "min", "max", "subtract_pin_load"}))
        if len(opts.positional) != 2:
            raise ConstraintError("set_load: expected a value and an object list", line=line)
        value = self.number(opts.positional[0], line, "set_load") * self.cap_scale
        sets = self.required(opts.positional[1], line, "set_load", ("ports", "nets"))
        for s in sets:
            if s.kind == "nets":
                for net in s.ids:
                    driver = int(self.netlist.net_driver[net])
                    if driver < self.netlist.num_pins:
                        self.loads[driver] = value
            else:
                for pin in s.ids:
                    self.loads[int(pin)] = value
        return ""

    def set_disable_timing(self, args: list[Any], line: int) -> Any:
        opts = _parse_options("set_disable_timing", args, line, valued=frozenset({"from", "to"}))
        from_pin = to_str(opts.values["from"]) if "from" in opts.values else None
        to_pin = to_str(opts.values["to"]) if "to" in opts.values else None
        for s in self.required(opts.positional, line, "set_disable_timing", ("cells", "pins", "ports")):
            if s.kind == "cells":
                for cell in s.ids:
                    self.disabled.append(DisabledArc(cell=int(cell), from_pin=from_pin, to_pin=to_pin))
            elif s.kind in ("pins", "ports"):
                if from_pin or to_pin:
                    self.warn(line, "set_disable_timing -from/-to apply to cells only")
                for pin in s.ids:
                    self.disabled.append(DisabledArc(pin=int(pin)))
            else:
                raise ConstraintError(f"set_disable_timing: cannot disable {s.kind}", line=line)
        return ""

    # --- Result ---
    def freeze(self) -> Constraints:
        for exc in self.exceptions:
            for ns in (exc.from_, exc.to, *exc.through):
                if ns is None:
                    continue
                unknown = [c for c in ns.clocks if c not in self.clocks]
                if unknown:
                    raise ConstraintError(f"exception references undefined clock(s) {unknown}", line=exc.line)
        for d in self.io_delays:
            if d.clock is not None and d.clock not in self.clocks:
                raise ConstraintError(f"I/O delay references undefined clock '{d.clock}'")
        return Constraints(
            clocks=tuple(self.clocks.values()),
            io_delays=tuple(self.io_delays),
            exceptions=tuple(self.exceptions),
            case_values=tuple(CaseValue(p, v) for p, v in sorted(self.case_values.items())),
            input_transitions=dict(sorted(self.input_transitions.items())),
            loads=dict(sorted(self.loads.items())),
            disabled=tuple(self.disabled),
            warnings=self.warnings,
        )


def eval_sdc(script: str, netlist: FlatNetlist, lib: LibertyLibrary, name: str = "<sdc>") -> Constraints:
    """Evaluate an SDC script; commands apply in script order."""
    session = _SdcSession(netlist, lib, name)
    try:
        session.interp.eval(script)
    except RecursionError as e:
        raise TclError("script nesting too deep", file=name) from e
    constraints = session.freeze()
    logger.info(
        "Constraints loaded",
        extra={
            "script": name,
            "clocks": len(constraints.clocks),
            "io_delays": len(constraints.io_delays),
            "exceptions": len(constraints.exceptions),
            "case_values": len(constraints.case_values),
            "warnings": constraints.warnings,
        },
    )
    return constraints
