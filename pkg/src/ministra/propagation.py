# src/ministra/propagation.py

"""
Tag-based arrival propagation, endpoint checks and pin slacks.

A tag is ``(launch clock, launch clock edge, exception bits)``. Every pin
keeps one arrival block per tag, indexed ``[signal edge, mode]`` with mode 0
early (min) and 1 late (max); a missing arrival is ``+inf`` early and
``-inf`` late. Arrivals are merged per tag, so a dominated arrival of the
same tag never survives.

Required times are evaluated per endpoint and tag, so exceptions resolve on
the exact exception state the tag carries. Pin slacks come from a reverse
levelized min-plus (setup) and max-plus (hold) sweep over the same tags.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .chunking import parallel_map
from .clocks import ClockNetwork, trace_clocks
from .config import get_config
from .delaycalc import ArcTiming
from .graph import CELL_CHECK_ARC, TimingGraph
from .netlist import DIR_INOUT, DIR_INPUT, DIR_OUTPUT
from .path_exceptions import ExceptionSet, PathOverrides, compile_exceptions
from .sdc import Constraints, IoDelay, PathException

logger = logging.getLogger(__name__)

EARLY, LATE = 0, 1
RISE, FALL = 0, 1
INF = math.inf

Tag = tuple[int, int, int]
Check = Literal["setup", "hold"]
CHECKS: tuple[Check, ...] = ("setup", "hold")


def unset_arrival() -> np.ndarray:
    a = np.empty((2, 2))
    a[:, EARLY] = INF
    a[:, LATE] = -INF
    return a


def _has_arrival(a: np.ndarray) -> bool:
    return bool((a[:, LATE] > -INF).any() or (a[:, EARLY] < INF).any())


def _combine(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.empty((2, 2))
    out[:, EARLY] = np.minimum(x[:, EARLY], y[:, EARLY])
    out[:, LATE] = np.maximum(x[:, LATE], y[:, LATE])
    return out


# --- Endpoints ---


@dataclass(frozen=True, slots=True)
class CaptureContext:
    """One way an endpoint is captured: a register check or an output delay."""

    clock: int
    edge: int
    setup_arc: int | None = None
    hold_arc: int | None = None
    output_max: tuple[float | None, float | None] | None = None
    output_min: tuple[float | None, float | None] | None = None

    @property
    def is_output(self) -> bool:
        return self.output_max is not None


@dataclass(frozen=True, slots=True)
class Endpoint:
    pin: int
    contexts: tuple[CaptureContext, ...]


@dataclass(frozen=True, slots=True)
class Requirement:
    required: np.ndarray  # per data edge; +inf (setup) or -inf (hold) when unchecked
    capture: tuple[int | None, int | None]
    constrained: bool


# --- State ---


@dataclass(eq=False)
class TimingState:
    graph: TimingGraph
    arcs: ArcTiming
    constraints: Constraints
    clocks: ClockNetwork
    exceptions: ExceptionSet
    seeds: dict[int, dict[Tag, np.ndarray]]
    arrivals: list[dict[Tag, np.ndarray]]
    aliases: list[dict[Tag, Tag]]
    endpoints: list[Endpoint] = field(default_factory=list)
    endpoint_at: dict[int, Endpoint] = field(default_factory=dict)
    constrained: set[int] = field(default_factory=set)
    setup_slack: np.ndarray | None = None
    hold_slack: np.ndarray | None = None
    clock_slack: dict[tuple[Check, int | None], dict[int, float]] = field(default_factory=dict)
    required_late: list[dict[Tag, np.ndarray]] | None = None
    required_early: list[dict[Tag, np.ndarray]] | None = None
    pin_setup_slack: np.ndarray | None = None
    pin_hold_slack: np.ndarray | None = None
    tag_merges: int = 0
    _requirements: dict[tuple[int, Tag, Check], Requirement] = field(default_factory=dict, repr=False)

    @property
    def netlist(self):
        return self.graph.netlist

    def canonical(self, pin: int, tag: Tag) -> Tag:
        return self.aliases[pin].get(tag, tag)

    def advance(self, tag: Tag, pin: int) -> Tag:
        return tag[0], tag[1], self.exceptions.advance(tag[2], pin)

    def slack(self, check: Check) -> np.ndarray:
        return self.setup_slack if check == "setup" else self.hold_slack

    @property
    def pin_arrival(self) -> np.ndarray:
        """Worst late arrival per pin over tags and edges (``-inf`` if none)."""
        out = np.full(self.netlist.num_pins, -INF)
        for p, entries in enumerate(self.arrivals):
            for a in entries.values():
                out[p] = max(out[p], float(a[:, LATE].max()))
        return out

    # --- Relationships ---
    def setup_relationship(self, tag: Tag, ctx: CaptureContext, cycle: PathException | None) -> float:
        clocks = self.clocks
        rel = clocks.setup_relationship(tag[0], tag[1], ctx.clock, ctx.edge)
        if cycle is not None and not math.isinf(rel):
            anchor = ctx.clock if cycle.anchor == "end" else tag[0]
            rel += (cycle.multiplier - 1) * clocks.period(anchor)
        return rel

    def hold_relationship(self, tag: Tag, ctx: CaptureContext, overrides: PathOverrides) -> float:
        clocks = self.clocks
        rel = clocks.hold_relationship(tag[0], tag[1], ctx.clock, ctx.edge)
        if math.isinf(rel):
            return -INF
        # the hold edge follows a moved setup edge
        setup_cycle = overrides.setup_multicycle
        if setup_cycle is not None:
            anchor = ctx.clock if setup_cycle.anchor == "end" else tag[0]
            rel += (setup_cycle.multiplier - 1) * clocks.period(anchor)
        cycle = overrides.hold_multicycle
        if cycle is not None:
            anchor = tag[0] if cycle.anchor == "start" else ctx.clock
            rel -= cycle.multiplier * self.clocks.period(anchor)
        return rel

    # --- Endpoint requirements ---
    def requirement(self, pin: int, tag: Tag, check: Check) -> Requirement:
        """Required time per data edge at endpoint ``pin`` for paths carrying ``tag``."""
        key = (pin, tag, check)
        cached = self._requirements.get(key)
        if cached is not None:
            return cached
        setup = check == "setup"
        endpoint = self.endpoint_at[pin]
        launch_time = self.clocks.edge_time(tag[0], tag[1])
        required = np.full(2, INF if setup else -INF)
        capture: list[int | None] = [None, None]
        constrained = False
        for ctx in endpoint.contexts or (None,):
            overrides = self.exceptions.resolve(tag[2], pin, tag[0], ctx.clock if ctx else None)
            limit = overrides.delay_limit(check)
            if ctx is None and limit is None:
                continue
            constrained = True
            if overrides.is_false(check):
                continue
            for edge in (RISE, FALL):
                value = self._required(tag, ctx, edge, check, overrides, limit, launch_time)
                if value is None:
                    continue
                if (value < required[edge]) if setup else (value > required[edge]):
                    required[edge] = value
                    capture[edge] = ctx.clock if ctx else None
        result = Requirement(required, (capture[0], capture[1]), constrained)
        self._requirements[key] = result
        return result

    def _required(self, tag: Tag, ctx: CaptureContext | None, edge: int, check: Check,
                  overrides: PathOverrides, limit: float | None, launch_time: float) -> float | None:
        margin = offset = 0.0
        if ctx is not None:
            if ctx.is_output:
                offset = (ctx.output_max if check == "setup" else ctx.output_min)[edge]
                if offset is None:
                    return None
            else:
                arc = ctx.setup_arc if check == "setup" else ctx.hold_arc
                if arc is None and limit is None:
                    return None
                if arc is not None:
                    margin = self.arcs.margin(arc, edge, check)
        if check == "setup":
            rel = limit if limit is not None else self.setup_relationship(tag, ctx, overrides.setup_multicycle)
            return launch_time + rel - margin - offset
        rel = limit if limit is not None else self.hold_relationship(tag, ctx, overrides)
        return launch_time + rel + margin - offset


# --- Seeding ---


def _io_value(delays: list[IoDelay], mode: str, edge: str, pick) -> float | None:
    values = [d.value for d in delays if d.applies(mode, edge)]
    if not values:
        other = "min" if mode == "max" else "max"
        values = [d.value for d in delays if d.applies(other, edge)]
    return pick(values) if values else None


def _group_io(constraints: Constraints, direction: str) -> dict[tuple[int, str | None, bool], list[IoDelay]]:
    groups: dict[tuple[int, str | None, bool], list[IoDelay]] = {}
    for d in constraints.io_delays:
        if d.direction == direction:
            groups.setdefault((d.pin, d.clock, d.clock_fall), []).append(d)
    return groups


def seed_startpoints(graph: TimingGraph, constraints: Constraints, clocks: ClockNetwork,
                     exceptions: ExceptionSet) -> dict[int, dict[Tag, np.ndarray]]:
    """
    Input ports launch at their input delays (the virtual clock at time 0 if
    none is given); register clock pins launch at every clock edge reaching
    them.
    """
    netlist = graph.netlist
    seeds: dict[int, dict[Tag, np.ndarray]] = {}
    groups = _group_io(constraints, "input")
    by_port: dict[int, list[tuple[str | None, bool]]] = {}
    for pin, clock, fall in groups:
        by_port.setdefault(pin, []).append((clock, fall))

    unclocked = 0
    for pin in netlist.port_pins:
        pin = int(pin)
        if int(netlist.pin_dir[pin]) not in (DIR_INPUT, DIR_INOUT) or pin in clocks.source_pins:
            continue
        entries: dict[Tag, np.ndarray] = {}
        keys = by_port.get(pin)
        if not keys:
            unclocked += 1
            tag = (clocks.virtual, RISE, exceptions.seed(pin, clocks.virtual))
            a = np.zeros((2, 2))
            entries[tag] = a
        for clock_name, fall in sorted(keys or (), key=lambda k: (k[0] or "", k[1])):
            delays = groups[(pin, clock_name, fall)]
            clock = clocks.index(clock_name) if clock_name is not None else clocks.virtual
            launch_edge = FALL if fall else RISE
            base = clocks.edge_time(clock, launch_edge)
            a = unset_arrival()
            for edge, edge_name in ((RISE, "rise"), (FALL, "fall")):
                late = _io_value(delays, "max", edge_name, max)
                early = _io_value(delays, "min", edge_name, min)
                if late is not None:
                    a[edge, LATE] = base + late
                if early is not None:
                    a[edge, EARLY] = base + early
            if _has_arrival(a):
                tag = (clock, launch_edge, exceptions.seed(pin, clock))
                entries[tag] = _combine(entries[tag], a) if tag in entries else a
        seeds[pin] = entries
    if unclocked:
        logger.warning("Input ports without input delay are launched by the virtual clock",
                       extra={"count": unclocked})

    for pin in sorted(clocks.register_clock_pins):
        entries = {}
        for clock, inverted in sorted(clocks.clocks_at(pin)):
            for pin_edge in (RISE, FALL):
                clock_edge = pin_edge if not inverted else 1 - pin_edge
                tag = (clock, clock_edge, exceptions.seed(pin, clock))
                a = entries.setdefault(tag, unset_arrival())
                t = clocks.edge_time(clock, clock_edge)
                a[pin_edge, EARLY] = min(a[pin_edge, EARLY], t)
                a[pin_edge, LATE] = max(a[pin_edge, LATE], t)
        if entries:
            seeds[pin] = entries
    return seeds


# --- Tag cap ---


def _closest_pair(entries: dict[Tag, np.ndarray]) -> tuple[Tag, Tag] | None:
    best = None
    tags = sorted(entries)
    for i, a in enumerate(tags):
        for b in tags[i + 1:]:
            if a[:2] != b[:2]:
                continue
            x, y = entries[a][:, LATE], entries[b][:, LATE]
            both = np.isfinite(x) & np.isfinite(y)
            gap = float(np.abs(x[both] - y[both]).sum()) + float((np.isfinite(x) != np.isfinite(y)).sum()) * 1e30
            if best is None or (gap, a, b) < best:
                best = (gap, a, b)
    return None if best is None else (best[1], best[2])


def _cap_tags(entries: dict[Tag, np.ndarray], aliases: dict[Tag, Tag], cap: int) -> int:
    """Merge same-launch tags pessimistically until at most ``cap`` remain."""
    merges = 0
    while len(entries) > cap:
        pair = _closest_pair(entries)
        if pair is None:
            break
        a, b = pair
        merged = (a[0], a[1], a[2] & b[2])
        arrival = _combine(entries.pop(a), entries.pop(b))
        if merged in entries:
            arrival = _combine(arrival, entries.pop(merged))
        entries[merged] = arrival
        for old in (a, b):
            if old != merged:
                aliases[old] = merged
        for k, v in list(aliases.items()):
            if v in (a, b) and v != merged:
                aliases[k] = merged
        aliases.pop(merged, None)
        merges += 1
    return merges


# --- Forward ---


def propagate_arrivals(graph: TimingGraph, arcs: ArcTiming, constraints: Constraints,
                       threads: int = 1, tag_cap: int | None = None) -> TimingState:
    """Levelized forward sweep; nodes of one level are independent."""
    cap = tag_cap or get_config().tag_cap
    clocks = trace_clocks(graph, constraints)
    exceptions = compile_exceptions(graph, constraints, clocks)
    seeds = seed_startpoints(graph, constraints, clocks, exceptions)
    n = graph.num_nodes
    state = TimingState(
        graph=graph,
        arcs=arcs,
        constraints=constraints,
        clocks=clocks,
        exceptions=exceptions,
        seeds=seeds,
        arrivals=[{} for _ in range(n)],
        aliases=[{} for _ in range(n)],
    )
    propagating = graph.propagating()
    registers = clocks.register_clock_pins
    delay = arcs.delay

    def visit(v: int) -> int:
        entries = {t: a.copy() for t, a in seeds.get(v, {}).items()}
        if v not in registers:
            for e in graph.fanin(v):
                e = int(e)
                if not propagating[e]:
                    continue
                source = state.arrivals[int(graph.edge_from[e])]
                for tag, a in source.items():
                    out = unset_arrival()
                    for ov in (RISE, FALL):
                        inputs = graph.input_edges(e, ov)
                        late = max(a[iv, LATE] for iv in inputs)
                        early = min(a[iv, EARLY] for iv in inputs)
                        if late > -INF:
                            out[ov, LATE] = late + delay[e, ov, LATE]
                        if early < INF:
                            out[ov, EARLY] = early + delay[e, ov, EARLY]
                    if not _has_arrival(out):
                        continue
                    nt = state.advance(tag, v)
                    entries[nt] = _combine(entries[nt], out) if nt in entries else out
        merges = _cap_tags(entries, state.aliases[v], cap) if len(entries) > cap else 0
        state.arrivals[v] = entries
        return merges

    for level in range(graph.num_levels):
        merged = parallel_map(visit, [int(p) for p in graph.nodes_at(level)], threads)
        overflow = sum(merged)
        if overflow and not state.tag_merges:
            logger.warning("Tag cap exceeded; tags merged pessimistically", extra={"cap": cap, "level": level})
        state.tag_merges += overflow
    logger.info(
        "Arrivals propagated",
        extra={"startpoints": len(seeds), "tags": sum(len(a) for a in state.arrivals), "tag_merges": state.tag_merges},
    )
    return state


# --- Endpoints and slack ---


def find_endpoints(state: TimingState) -> list[Endpoint]:
    """Register data pins with a check arc, and every output port."""
    graph, clocks, netlist = state.graph, state.clocks, state.netlist
    contexts: dict[int, dict[tuple, dict[str, int | None]]] = {}
    for e in np.flatnonzero((graph.edge_kind == CELL_CHECK_ARC) & ~graph.disabled):
        e = int(e)
        arc = graph.arc(e)
        ck, d = int(graph.edge_from[e]), int(graph.edge_to[e])
        slots = contexts.setdefault(d, {})
        rising = arc.kind.endswith("rising")
        for clock, inverted in sorted(clocks.clocks_at(ck)):
            edge = RISE if rising != inverted else FALL
            slot = slots.setdefault((clock, edge, ck), {"setup": None, "hold": None})
            kind = "setup" if arc.kind.startswith("setup") else "hold"
            if slot[kind] is None:
                slot[kind] = e

    endpoints: dict[int, list[CaptureContext]] = {}
    for d, slots in contexts.items():
        endpoints[d] = [
            CaptureContext(clock, edge, setup_arc=s["setup"], hold_arc=s["hold"])
            for (clock, edge, _), s in sorted(slots.items())
        ]

    groups = _group_io(state.constraints, "output")
    for pin in netlist.port_pins:
        pin = int(pin)
        if int(netlist.pin_dir[pin]) in (DIR_OUTPUT, DIR_INOUT):
            endpoints.setdefault(pin, [])
    for (pin, clock_name, fall), delays in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or "", kv[0][2])):
        clock = clocks.index(clock_name) if clock_name is not None else clocks.virtual
        out_max = tuple(_io_value(delays, "max", name, max) for name in ("rise", "fall"))
        out_min = tuple(_io_value(delays, "min", name, min) for name in ("rise", "fall"))
        endpoints.setdefault(pin, []).append(
            CaptureContext(clock, FALL if fall else RISE, output_max=out_max, output_min=out_min)
        )
    return [Endpoint(pin, tuple(ctxs)) for pin, ctxs in sorted(endpoints.items())]


def compute_required_and_slack(state: TimingState) -> TimingState:
    """Endpoint slack is the worst over tags, capture contexts and data edges."""
    n = state.graph.num_nodes
    state.endpoints = find_endpoints(state)
    state.endpoint_at = {ep.pin: ep for ep in state.endpoints}
    state.setup_slack = np.full(n, INF)
    state.hold_slack = np.full(n, INF)
    state.clock_slack = {}
    for ep in state.endpoints:
        pin = ep.pin
        constrained = False
        for tag, a in state.arrivals[pin].items():
            for check in CHECKS:
                req = state.requirement(pin, tag, check)
                constrained = constrained or req.constrained
                for edge in (RISE, FALL):
                    if check == "setup":
                        if a[edge, LATE] == -INF:
                            continue
                        slack = req.required[edge] - a[edge, LATE]
                    else:
                        if a[edge, EARLY] == INF:
                            continue
                        slack = a[edge, EARLY] - req.required[edge]
                    if math.isinf(slack):
                        continue
                    slacks = state.slack(check)
                    slacks[pin] = min(slacks[pin], slack)
                    per_clock = state.clock_slack.setdefault((check, req.capture[edge]), {})
                    per_clock[pin] = min(per_clock.get(pin, INF), slack)
        if constrained or ep.contexts:
            state.constrained.add(pin)
    unconstrained = len(state.endpoints) - len(state.constrained)
    if unconstrained:
        logger.warning("Unconstrained endpoints excluded from WNS/TNS", extra={"count": unconstrained})
    wns, tns = wns_tns(state)
    logger.info("Slacks computed", extra={"endpoints": len(state.constrained), "wns": wns, "tns": tns})
    return state


def wns_tns(state: TimingState, clock: str | None = None, check: Check = "setup") -> tuple[float, float]:
    """
    Worst and total negative slack over constrained endpoints; with ``clock``
    only endpoints captured by that clock count. No endpoints gives (+inf, 0).
    """
    if clock is None:
        slacks = [float(state.slack(check)[p]) for p in sorted(state.constrained)]
    else:
        idx = state.clocks.index(clock)
        slacks = list(state.clock_slack.get((check, idx), {}).values())
    if not slacks:
        return INF, 0.0
    return min(slacks), float(sum(min(0.0, s) for s in slacks))


# --- Backward ---


def backpropagate_pin_slacks(state: TimingState, threads: int = 1) -> np.ndarray:
    """
    Per-tag required times swept backwards by reverse levels; pin slack is the
    worst of required minus arrival (setup) and arrival minus required (hold).
    Pins on no constrained path keep ``+inf``.
    """
    graph = state.graph
    n = graph.num_nodes
    propagating = graph.propagating()
    registers = state.clocks.register_clock_pins
    delay = state.arcs.delay
    req_late: list[dict[Tag, np.ndarray]] = [{} for _ in range(n)]
    req_early: list[dict[Tag, np.ndarray]] = [{} for _ in range(n)]
    setup_slack = np.full(n, INF)
    hold_slack = np.full(n, INF)

    def visit(u: int) -> None:
        tags = state.arrivals[u]
        if not tags:
            return
        late = {t: np.full(2, INF) for t in tags}
        early = {t: np.full(2, -INF) for t in tags}
        if u in state.endpoint_at:
            for t in tags:
                late[t] = state.requirement(u, t, "setup").required.copy()
                early[t] = state.requirement(u, t, "hold").required.copy()
        for e in graph.fanout(u):
            e = int(e)
            v = int(graph.edge_to[e])
            if not propagating[e] or v in registers or not req_late[v]:
                continue
            for t in tags:
                nt = state.canonical(v, state.advance(t, v))
                rl, re = req_late[v].get(nt), req_early[v].get(nt)
                if rl is None:
                    continue
                for ov in (RISE, FALL):
                    for iv in graph.input_edges(e, ov):
                        late[t][iv] = min(late[t][iv], rl[ov] - delay[e, ov, LATE])
                        early[t][iv] = max(early[t][iv], re[ov] - delay[e, ov, EARLY])
        req_late[u] = late
        req_early[u] = early
        worst_setup = worst_hold = INF
        for t, a in tags.items():
            for edge in (RISE, FALL):
                if a[edge, LATE] > -INF and late[t][edge] < INF:
                    worst_setup = min(worst_setup, late[t][edge] - a[edge, LATE])
                if a[edge, EARLY] < INF and early[t][edge] > -INF:
                    worst_hold = min(worst_hold, a[edge, EARLY] - early[t][edge])
        setup_slack[u] = worst_setup
        hold_slack[u] = worst_hold

    for level in reversed(range(graph.num_levels)):
        parallel_map(visit, [int(p) for p in graph.nodes_at(level)], threads)
    state.required_late, state.required_early = req_late, req_early
    state.pin_setup_slack, state.pin_hold_slack = setup_slack, hold_slack
    return setup_slack


def analyze(graph: TimingGraph, arcs: ArcTiming, constraints: Constraints, threads: int = 1,
            tag_cap: int | None = None) -> TimingState:
    """Forward arrivals, endpoint slacks and pin slacks in one call."""
    state = propagate_arrivals(graph, arcs, constraints, threads=threads, tag_cap=tag_cap)
    compute_required_and_slack(state)
    backpropagate_pin_slacks(state, threads=threads)
    return state
