# src/ministra/clocks.py

"""
Ideal clock network and clock edge relationships.

Clocks travel from their source pins through net arcs and combinational
arcs (inverting on negative-unate arcs, both polarities on non-unate arcs)
until they reach register clock pins. Latency is zero everywhere.

Unclocked startpoints are launched by a virtual clock appended after the SDC
clocks. Its period is the largest defined period, or infinite when the design
has no clocks at all.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import get_config
from .graph import CELL_CHECK_ARC, FALLING_EDGE, NEGATIVE, NON_UNATE, RISING_EDGE, TimingGraph
from .sdc import Constraints

logger = logging.getLogger(__name__)

VIRTUAL_CLOCK = "(virtual)"
RISE, FALL = 0, 1

# edge times are compared on an integer grid of 1e-3 ps
_GRID = 1000


@dataclass(frozen=True, slots=True)
class ClockDef:
    name: str
    period: float
    rise: float
    fall: float
    sources: tuple[int, ...] = ()

    def edge_time(self, edge: int) -> float:
        return self.rise if edge == RISE else self.fall


@dataclass(eq=False)
class ClockNetwork:
    clocks: list[ClockDef]
    pin_clocks: dict[int, frozenset[tuple[int, bool]]]
    register_clock_pins: frozenset[int]
    source_pins: frozenset[int]
    expansion_cap: int = 64
    _relationships: dict[tuple[str, int, int, int, int], float] = field(default_factory=dict, repr=False)

    @property
    def virtual(self) -> int:
        return len(self.clocks) - 1

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.clocks]

    def index(self, name: str) -> int:
        for i, c in enumerate(self.clocks):
            if c.name == name:
                return i
        raise KeyError(name)

    def clocks_at(self, pin: int) -> frozenset[tuple[int, bool]]:
        return self.pin_clocks.get(pin, frozenset())

    def period(self, clock: int) -> float:
        return self.clocks[clock].period

    def edge_time(self, clock: int, edge: int) -> float:
        return self.clocks[clock].edge_time(edge)

    def setup_relationship(self, launch: int, launch_edge: int, capture: int, capture_edge: int) -> float:
        """
        Smallest positive distance from a launch edge to the next capture edge,
        searched over the common period of both clocks.
        """
        return self._relationship("setup", launch, launch_edge, capture, capture_edge)

    def hold_relationship(self, launch: int, launch_edge: int, capture: int, capture_edge: int) -> float:
        """
        Largest distance from a launch edge back to the latest capture edge at
        or before it, searched over the same window as the setup relationship.
        Never positive.
        """
        return self._relationship("hold", launch, launch_edge, capture, capture_edge)

    def _relationship(self, check: str, launch: int, launch_edge: int, capture: int, capture_edge: int) -> float:
        key = (check, launch, launch_edge, capture, capture_edge)
        cached = self._relationships.get(key)
        if cached is not None:
            return cached
        lc, cc = self.clocks[launch], self.clocks[capture]
        if math.isinf(lc.period) or math.isinf(cc.period):
            value = math.inf if check == "setup" else -math.inf
        else:
            value = self._expand(check, lc, launch_edge, cc, capture_edge)
        self._relationships[key] = value
        return value

    def _expand(self, check: str, lc: ClockDef, launch_edge: int, cc: ClockDef, capture_edge: int) -> float:
        pl, pc = round(lc.period * _GRID), round(cc.period * _GRID)
        tl, tc = round(lc.edge_time(launch_edge) * _GRID), round(cc.edge_time(capture_edge) * _GRID)
        window = math.lcm(pl, pc)
        limit = self.expansion_cap * max(pl, pc)
        if window > limit:
            logger.warning(
                "Clock edge expansion capped",
                extra={"launch": lc.name, "capture": cc.name, "common_period": window / _GRID, "check": check},
            )
            window = limit
        best = None
        launch_time = tl
        while launch_time < tl + window:
            if check == "setup":
                gap = tc + ((launch_time - tc) // pc + 1) * pc - launch_time
                best = gap if best is None else min(best, gap)
            else:
                gap = tc + ((launch_time - tc) // pc) * pc - launch_time
                best = gap if best is None else max(best, gap)
            launch_time += pl
        return best / _GRID


def register_clock_pins(graph: TimingGraph) -> frozenset[int]:
    """Pins that trigger edge arcs or clock timing checks."""
    kinds = graph.edge_kind
    senses = graph.edge_sense
    mask = (kinds == CELL_CHECK_ARC) | (senses == RISING_EDGE) | (senses == FALLING_EDGE)
    return frozenset(int(p) for p in np.unique(graph.edge_from[mask]))


def trace_clocks(graph: TimingGraph, constraints: Constraints, expansion_cap: int | None = None) -> ClockNetwork:
    cap = expansion_cap if expansion_cap is not None else get_config().clock_expansion_cap
    clocks = [ClockDef(c.name, c.period, c.waveform[0], c.waveform[1], c.sources) for c in constraints.clocks]
    period = max((c.period for c in clocks), default=math.inf)
    clocks.append(ClockDef(VIRTUAL_CLOCK, period, 0.0, 0.0 if math.isinf(period) else period / 2))

    registers = register_clock_pins(graph)
    propagating = graph.propagating()
    found: dict[int, set[tuple[int, bool]]] = {}
    stack: list[tuple[int, int, bool]] = []
    for idx, clock in enumerate(clocks[:-1]):
        for pin in clock.sources:
            stack.append((pin, idx, False))
    while stack:
        pin, idx, inverted = stack.pop()
        seen = found.setdefault(pin, set())
        if (idx, inverted) in seen:
            continue
        seen.add((idx, inverted))
        if pin in registers:
            continue
        for e in graph.fanout(pin):
            sense = int(graph.edge_sense[e])
            if not propagating[e] or sense in (RISING_EDGE, FALLING_EDGE):
                continue
            nxt = int(graph.edge_to[e])
            if sense == NON_UNATE:
                stack.append((nxt, idx, False))
                stack.append((nxt, idx, True))
            else:
                stack.append((nxt, idx, inverted != (sense == NEGATIVE)))

    network = ClockNetwork(
        clocks=clocks,
        pin_clocks={p: frozenset(s) for p, s in found.items()},
        register_clock_pins=registers,
        source_pins=frozenset(p for c in clocks for p in c.sources),
        expansion_cap=cap,
    )
    unclocked = sum(1 for p in registers if p not in found)
    logger.info(
        "Clock network traced",
        extra={"clocks": len(clocks) - 1, "clocked_registers": len(registers) - unclocked, "unclocked_registers": unclocked},
    )
    return network
