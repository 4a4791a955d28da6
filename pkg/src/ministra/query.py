# src/ministra/query.py

"""
Object queries over a frozen netlist (``get_ports``, ``get_pins``, ...).

Patterns use ``*`` and ``?`` wildcards only; brackets are literal so bus bits
such as ``data[3]`` match themselves. A bus base name also matches every bit.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .netlist import DIR_INOUT, DIR_INPUT, DIR_OUTPUT, FlatNetlist

ObjectKind = Literal["ports", "pins", "cells", "nets", "clocks"]


@dataclass(frozen=True, slots=True)
class ObjectSet:
    """
    A typed, index-sorted collection produced by an object query.

    ``ids`` are pin ids for ports and pins, cell ids for cells, net ids for
    nets and clock names for clocks. ``patterns`` keeps the query text for
    error messages.
    """

    kind: ObjectKind
    ids: tuple
    patterns: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        for i in self.ids:
            yield ObjectSet(self.kind, (i,), self.patterns)

    def __bool__(self) -> bool:
        return bool(self.ids)

    def describe(self) -> str:
        return " ".join(self.patterns) or f"<{self.kind}>"


@lru_cache(maxsize=512)
def compile_pattern(pattern: str) -> re.Pattern[str]:
    body = re.escape(pattern).replace(r"\*", ".*").replace(r"\?", ".")
    if "[" not in pattern:
        body += r"(?:\[\d+\])?"
    return re.compile(f"^{body}$")


def _match(names: list[str], pattern: str) -> list[int]:
    rx = compile_pattern(pattern)
    return [i for i, name in enumerate(names) if rx.match(name)]


class ObjectQuery:
    """Name indices over one netlist plus the clock names defined so far."""

    def __init__(self, netlist: FlatNetlist):
        self.netlist = netlist
        self._ports = [int(p) for p in netlist.port_pins]
        self._port_names = [netlist.pin_name(p) for p in self._ports]
        self._cell_pins = [p for p in range(netlist.num_pins) if not netlist.is_port(p)]
        self._cell_pin_names = [netlist.pin_name(p) for p in self._cell_pins]
        self._cell_names = [netlist.cell_name_of(c) for c in range(netlist.num_cells)]
        self._net_names = [netlist.net_name_of(n) for n in range(netlist.num_nets)]

    def query(self, kind: ObjectKind, patterns: list[str], clocks: list[str] | None = None) -> ObjectSet:
        found: set = set()
        for pattern in patterns:
            if kind == "ports":
                found.update(self._ports[i] for i in _match(self._port_names, pattern))
            elif kind == "pins":
                found.update(self._cell_pins[i] for i in _match(self._cell_pin_names, pattern))
            elif kind == "cells":
                found.update(_match(self._cell_names, pattern))
            elif kind == "nets":
                found.update(_match(self._net_names, pattern))
            else:
                names = clocks or []
                found.update(names[i] for i in _match(names, pattern))
        if kind == "clocks":
            order = {name: i for i, name in enumerate(clocks or [])}
            ids = tuple(sorted(found, key=order.__getitem__))
        else:
            ids = tuple(sorted(found))
        return ObjectSet(kind, ids, tuple(patterns))

    # --- Derived collections ---
    def all_ports(self, direction: int) -> ObjectSet:
        dirs = self.netlist.pin_dir
        ids = tuple(p for p in self._ports if int(dirs[p]) in (direction, DIR_INOUT))
        label = "all_inputs" if direction == DIR_INPUT else "all_outputs"
        return ObjectSet("ports", ids, (label,))

    def all_inputs(self) -> ObjectSet:
        return self.all_ports(DIR_INPUT)

    def all_outputs(self) -> ObjectSet:
        return self.all_ports(DIR_OUTPUT)

    def all_registers(self, part: Literal["cells", "clock_pins", "data_pins"] = "cells") -> ObjectSet:
        netlist = self.netlist
        seq = [c for c in range(netlist.num_cells) if netlist.lib_cell_of(c).is_sequential]
        if part == "cells":
            return ObjectSet("cells", tuple(seq), ("all_registers",))
        pins: set[int] = set()
        for c in seq:
            lib_cell = netlist.lib_cell_of(c)
            wanted = set()
            for arc in lib_cell.arcs:
                if arc.is_check:
                    wanted.add(arc.from_pin if part == "clock_pins" else arc.to_pin)
                elif part == "clock_pins" and arc.kind != "combinational":
                    wanted.add(arc.from_pin)
            for p in netlist.cell_pins(c):
                if netlist.lib_pin_of(int(p)).name in wanted:
                    pins.add(int(p))
        return ObjectSet("pins", tuple(sorted(pins)), (f"all_registers -{part}",))

    # --- Name resolution for bare strings ---
    def resolve_name(self, pattern: str, kinds: tuple[ObjectKind, ...], clocks: list[str] | None = None) -> ObjectSet:
        """First non-empty match among ``kinds`` in the given order."""
        for kind in kinds:
            found = self.query(kind, [pattern], clocks)
            if found:
                return found
        return ObjectSet(kinds[0], (), (pattern,))

    def pins_of(self, objects: ObjectSet) -> np.ndarray:
        """Expand any collection to the pin ids it covers."""
        netlist = self.netlist
        if objects.kind in ("ports", "pins"):
            return np.array(objects.ids, dtype=np.uint32)
        if objects.kind == "cells":
            parts = [netlist.cell_pins(c) for c in objects.ids]
        elif objects.kind == "nets":
            parts = [netlist.net_pins(n) for n in objects.ids]
        else:
            return np.zeros(0, dtype=np.uint32)
        return np.unique(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.uint32)
