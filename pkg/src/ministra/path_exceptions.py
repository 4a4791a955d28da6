# src/ministra/path_exceptions.py

"""
Timing exceptions compiled into bit-tracked automata.

Every exception owns a contiguous range of bits in a tag's exception state:
one bit for its ``-from`` segment (if any) followed by one bit per
``-through`` segment. Bits are set strictly in order, so a path prefix has
matched the first ``k`` segments exactly when the first ``k`` bits are set.
The ``-to`` segment is never tracked; it is tested at the endpoint.
"""

import logging
from dataclasses import dataclass
from typing import Literal

from .clocks import ClockNetwork
from .graph import CELL_CHECK_ARC, TimingGraph
from .sdc import Constraints, NodeSet, PathException

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Segment:
    pins: frozenset[int]
    clocks: frozenset[int]
    expanded: frozenset[int] = frozenset()  # pins reached through the named clocks

    def matches(self, pin: int, clock: int | None) -> bool:
        return pin in self.pins or (clock is not None and clock in self.clocks)

    def __len__(self) -> int:
        return len(self.pins | self.expanded)


@dataclass(frozen=True, slots=True)
class ExceptionAutomaton:
    exception: PathException
    from_: Segment | None
    through: tuple[Segment, ...]
    to: Segment | None
    base: int

    @property
    def width(self) -> int:
        return (1 if self.from_ is not None else 0) + len(self.through)

    @property
    def mask(self) -> int:
        return ((1 << self.width) - 1) << self.base

    def through_bit(self, k: int) -> int:
        return self.base + (1 if self.from_ is not None else 0) + k

    def complete(self, bits: int) -> bool:
        return bits & self.mask == self.mask


@dataclass(frozen=True, slots=True)
class PathOverrides:
    """Exceptions whose patterns a concrete path (or tag) fully matches."""

    false_setup: bool = False
    false_hold: bool = False
    max_delay: float | None = None
    min_delay: float | None = None
    setup_multicycle: PathException | None = None
    hold_multicycle: PathException | None = None

    def is_false(self, check: Literal["setup", "hold"]) -> bool:
        return self.false_setup if check == "setup" else self.false_hold

    def delay_limit(self, check: Literal["setup", "hold"]) -> float | None:
        return self.max_delay if check == "setup" else self.min_delay


NO_OVERRIDES = PathOverrides()


class ExceptionSet:
    def __init__(self, automata: list[ExceptionAutomaton]):
        self.automata = automata
        self.width = sum(a.width for a in automata)
        self._through_index: dict[int, list[tuple[int, int]]] = {}
        self._from_pins: dict[int, list[int]] = {}
        self._from_clocks: dict[int, list[int]] = {}
        for x, a in enumerate(automata):
            if a.from_ is not None:
                for p in a.from_.pins:
                    self._from_pins.setdefault(p, []).append(x)
                for c in a.from_.clocks:
                    self._from_clocks.setdefault(c, []).append(x)
            for k, seg in enumerate(a.through):
                for p in seg.pins:
                    self._through_index.setdefault(p, []).append((x, k))
        for entries in self._through_index.values():
            entries.sort()
        self._resolved: dict[tuple[int, int, int, int | None], PathOverrides] = {}

    def __len__(self) -> int:
        return len(self.automata)

    def segments_at(self, pin: int) -> list[tuple[int, int]]:
        """(exception, through segment) pairs that contain ``pin``."""
        return self._through_index.get(pin, [])

    def seed(self, pin: int, clock: int) -> int:
        """Exception state of a path that starts at ``pin`` launched by ``clock``."""
        bits = 0
        hits = set(self._from_pins.get(pin, ())) | set(self._from_clocks.get(clock, ()))
        for x in hits:
            bits |= 1 << self.automata[x].base
        return self.advance(bits, pin)

    def advance(self, bits: int, pin: int) -> int:
        for x, k in self._through_index.get(pin, ()):
            a = self.automata[x]
            bit = a.through_bit(k)
            below = ((1 << bit) - 1) & a.mask
            if bits & below == below and not bits >> bit & 1:
                bits |= 1 << bit
        return bits

    def resolve(self, bits: int, endpoint: int, launch: int, capture: int | None) -> PathOverrides:
        key = (bits, endpoint, launch, capture)
        cached = self._resolved.get(key)
        if cached is not None:
            return cached
        false_setup = false_hold = False
        limits: dict[str, PathException] = {}
        cycles: dict[str, PathException] = {}
        for a in self.automata:
            if not a.complete(bits):
                continue
            if a.to is not None and not a.to.matches(endpoint, capture):
                continue
            ex = a.exception
            if ex.kind == "false_path":
                false_setup = false_setup or ex.setup
                false_hold = false_hold or ex.hold
            elif ex.kind in ("max_delay", "min_delay"):
                if ex.kind not in limits or ex.priority > limits[ex.kind].priority:
                    limits[ex.kind] = ex
            elif ex.apply not in cycles or ex.priority > cycles[ex.apply].priority:
                cycles[ex.apply] = ex
        result = PathOverrides(
            false_setup=false_setup,
            false_hold=false_hold,
            max_delay=limits["max_delay"].value if "max_delay" in limits else None,
            min_delay=limits["min_delay"].value if "min_delay" in limits else None,
            setup_multicycle=cycles.get("setup"),
            hold_multicycle=cycles.get("hold"),
        )
        self._resolved[key] = result
        return result


def _clock_startpoints(graph: TimingGraph, clocks: ClockNetwork, constraints: Constraints, clock: int) -> set[int]:
    pins = {p for p in clocks.register_clock_pins if any(c == clock for c, _ in clocks.clocks_at(p))}
    name = clocks.clocks[clock].name
    for d in constraints.io_delays:
        if d.direction == "input" and d.clock == name:
            pins.add(d.pin)
    return pins


def _clock_endpoints(graph: TimingGraph, clocks: ClockNetwork, constraints: Constraints, clock: int) -> set[int]:
    pins: set[int] = set()
    for e in range(graph.num_edges):
        if int(graph.edge_kind[e]) != CELL_CHECK_ARC:
            continue
        if any(c == clock for c, _ in clocks.clocks_at(int(graph.edge_from[e]))):
            pins.add(int(graph.edge_to[e]))
    name = clocks.clocks[clock].name
    for d in constraints.io_delays:
        if d.direction == "output" and d.clock == name:
            pins.add(d.pin)
    return pins


def _segment(node_set: NodeSet, clocks: ClockNetwork, expand) -> Segment:
    ids = frozenset(clocks.index(name) for name in node_set.clocks)
    expanded: set[int] = set()
    for c in ids:
        expanded |= expand(c)
    return Segment(pins=node_set.pins, clocks=ids, expanded=frozenset(expanded))


def compile_exceptions(graph: TimingGraph, constraints: Constraints, clocks: ClockNetwork) -> ExceptionSet:
    """
    Build one automaton per exception, dropping exceptions with a segment
    that covers no objects once clocks are expanded.
    """
    netlist = graph.netlist
    automata: list[ExceptionAutomaton] = []
    base = 0
    for ex in constraints.exceptions:
        from_ = _segment(ex.from_, clocks, lambda c: _clock_startpoints(graph, clocks, constraints, c)) \
            if ex.from_ is not None else None
        to = _segment(ex.to, clocks, lambda c: _clock_endpoints(graph, clocks, constraints, c)) \
            if ex.to is not None else None
        through = tuple(_segment(t, clocks, lambda c: set()) for t in ex.through)
        segments = [s for s in (from_, *through, to) if s is not None]
        if any(len(s) == 0 for s in segments):
            logger.warning(
                "Timing exception matches no objects and was dropped",
                extra={"kind": ex.kind, "line": ex.line},
            )
            continue
        for seg in through:
            if all(len(graph.fanin(p)) == 0 and len(graph.fanout(p)) == 0 for p in seg.pins):
                logger.warning(
                    "Timing exception -through pins are not on any timing arc",
                    extra={"kind": ex.kind, "line": ex.line, "pins": [netlist.pin_name(p) for p in sorted(seg.pins)][:5]},
                )
        automaton = ExceptionAutomaton(exception=ex, from_=from_, through=through, to=to, base=base)
        base += automaton.width
        automata.append(automaton)
    if automata:
        logger.info("Timing exceptions compiled", extra={"count": len(automata), "state_bits": base})
    return ExceptionSet(automata)

