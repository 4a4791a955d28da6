# src/ministra/delaycalc.py

"""
Arc delay and slew calculation.

Cell arcs use NLDM tables looked up with the input pin slew and the total
capacitance of the driven net. Net arcs use Elmore or a reduced order model
on the net's RC tree; nets without one have zero wire delay.

Arrays are indexed ``[edge id, output edge (rise/fall), mode (early/late)]``.
Early lookups use early (min) slews, late lookups late (max) slews. Check
arcs hold their setup or hold margin in the data pin edge slot.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .chunking import parallel_map
from .config import get_config
from .graph import CELL_CHECK_ARC, CELL_DELAY_ARC, INPUT_EDGES, NET_ARC, TimingGraph
from .interconnect import LN9, ReducedModel, arnoldi_delay, arnoldi_reduce, elmore, net_slew, node_caps
from .liberty import Lut2D, TimingArc
from .netlist import NO_ID
from .parasitics import RcStore
from .sdc import Constraints
from .sdf import SdfData, Triple

logger = logging.getLogger(__name__)

EARLY, LATE = 0, 1
RISE, FALL = 0, 1
MIN_SLEW = 1e-6  # ps

DelayModel = Literal["elmore", "arnoldi"]

_DELAY_TABLE = ("cell_rise", "cell_fall")
_SLEW_TABLE = ("rise_transition", "fall_transition")
_CHECK_TABLE = ("rise_constraint", "fall_constraint")


# --- Table lookup ---


def _segment(axis: np.ndarray | None, x: float) -> tuple[int, float]:
    if axis is None or axis.size < 2:
        return 0, 0.0
    i = int(np.clip(np.searchsorted(axis, x) - 1, 0, axis.size - 2))
    return i, (x - axis[i]) / (axis[i + 1] - axis[i])


def lut_eval(table: Lut2D, slew: float, load: float) -> float:
    """
    Bilinear interpolation; outside the grid the boundary cell's plane is
    extended. Missing axes collapse to a single row or column.
    """
    v = table.values
    i, t = _segment(table.index_1, slew)
    j, u = _segment(table.index_2, load)
    i1 = min(i + 1, v.shape[0] - 1)
    j1 = min(j + 1, v.shape[1] - 1)
    return float(
        (1 - t) * (1 - u) * v[i, j] + (1 - t) * u * v[i, j1] + t * (1 - u) * v[i1, j] + t * u * v[i1, j1]
    )


# --- Cell arcs ---


def cell_arc(arc: TimingArc, sense: int, in_slew: np.ndarray, load: float) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Delay and output slew per (output edge, mode) for one delay arc.

    ``in_slew`` is indexed [edge, mode]. When several input edges feed one
    output edge (non-unate arcs) the late result is the worst and the early
    result the best lookup. Returns the number of missing tables as well.
    """
    delay = np.zeros((2, 2))
    slew = np.zeros((2, 2))
    missing = 0
    for ov in (RISE, FALL):
        inputs = INPUT_EDGES[sense][ov]
        d_table = arc.tables.get(_DELAY_TABLE[ov])
        s_table = arc.tables.get(_SLEW_TABLE[ov])
        missing += (d_table is None) + (s_table is None)
        for mode, pick in ((EARLY, min), (LATE, max)):
            slews = [float(in_slew[iv, mode]) for iv in inputs]
            delay[ov, mode] = pick(lut_eval(d_table, s, load) for s in slews) if d_table is not None else 0.0
            slew[ov, mode] = pick(lut_eval(s_table, s, load) for s in slews) if s_table is not None else pick(slews)
    return np.maximum(delay, 0.0), np.maximum(slew, MIN_SLEW), missing


# --- Whole-graph pass ---


@dataclass(eq=False)
class ArcTiming:
    delay: np.ndarray  # (E, 2, 2)
    slew: np.ndarray  # (E, 2, 2)
    pin_slew: np.ndarray  # (P, 2, 2)
    net_load: np.ndarray  # (N,) fF
    annotated: np.ndarray  # (E,) bool, set by SDF
    model: DelayModel = "elmore"
    fallbacks: int = 0
    missing_tables: int = 0
    sdf_unmatched: int = 0

    def margin(self, edge: int, data_edge: int, check: Literal["setup", "hold"]) -> float:
        return float(self.delay[edge, data_edge, LATE if check == "setup" else EARLY])


@dataclass(eq=False)
class _NetModel:
    sink_node: dict[int, int]
    delays: np.ndarray
    reduced: ReducedModel | None = None


def _pin_caps(graph: TimingGraph) -> np.ndarray:
    netlist = graph.netlist
    caps = np.zeros(netlist.num_pins)
    for p in range(netlist.num_pins):
        if not netlist.is_port(p):
            lib_pin = netlist.lib_pin_of(p)
            if lib_pin.direction != "output":
                caps[p] = lib_pin.capacitance
    return caps


def compute_all_arcs(
    graph: TimingGraph,
    rc: RcStore | None,
    constraints: Constraints,
    model: DelayModel = "elmore",
    arnoldi_order: int | None = None,
    sdf: SdfData | None = None,
    threads: int = 1,
) -> ArcTiming:
    """
    Annotate every enabled edge level by level; node slews of one level are
    final before its fanout arcs are evaluated. SDF values, when given,
    replace the computed delays and check margins of the arcs they name.
    """
    config = get_config()
    netlist = graph.netlist
    rc = rc or RcStore({})
    order = arnoldi_order or config.arnoldi_order
    num_edges = graph.num_edges

    pin_cap = _pin_caps(graph)
    extra = np.zeros(netlist.num_pins)
    for pin, value in constraints.loads.items():
        extra[pin] += value
    net_load = np.zeros(netlist.num_nets)
    for net in range(netlist.num_nets):
        driver = int(netlist.net_driver[net])
        pins = netlist.net_pins(net)
        net_load[net] = sum(pin_cap[p] for p in pins if p != driver) + extra[pins].sum()
        wire = rc.get(net)
        if wire is not None:
            net_load[net] += wire.total_cap

    models: dict[int, _NetModel] = {}
    for net, wire in rc.nets.items():
        loads = {int(p): float(pin_cap[p] + extra[p]) for p in netlist.net_pins(net) if int(p) != int(netlist.net_driver[net])}
        caps = node_caps(wire, loads)
        caps[0] += extra[int(netlist.net_driver[net])]
        reduced = arnoldi_reduce(wire, order, caps) if model == "arnoldi" else None
        models[net] = _NetModel(wire.sink_nodes, reduced.elmore if reduced is not None else elmore(wire, caps), reduced)

    default_slew = netlist.lib.default_input_slew
    delay = np.zeros((num_edges, 2, 2))
    slew = np.full((num_edges, 2, 2), MIN_SLEW)
    pin_slew = np.zeros((netlist.num_pins, 2, 2))
    propagating = graph.propagating()
    thresholds, ramp_scale = config.slew_thresholds, config.ramp_scale
    stats = {"fallbacks": 0, "missing": 0}

    def seed_slew(p: int) -> np.ndarray:
        rise, fall = constraints.input_transitions.get(p, (default_slew, default_slew))
        return np.array([[rise, rise], [fall, fall]])

    def process(p: int) -> tuple[int, int]:
        fanin = [int(e) for e in graph.fanin(p) if propagating[e]]
        if fanin:
            s = np.empty((2, 2))
            s[:, EARLY] = slew[fanin, :, EARLY].min(axis=0)
            s[:, LATE] = slew[fanin, :, LATE].max(axis=0)
        else:
            s = seed_slew(p)
        pin_slew[p] = s
        fallbacks = missing = 0
        for e in graph.fanout(p):
            e = int(e)
            if not propagating[e]:
                continue
            to = int(graph.edge_to[e])
            if int(graph.edge_kind[e]) == CELL_DELAY_ARC:
                net = int(netlist.pin_net[to])
                load = net_load[net] if net != NO_ID else 0.0
                d, sl, miss = cell_arc(graph.arc(e), int(graph.edge_sense[e]), s, load)
                delay[e], slew[e] = d, sl
                missing += miss
                continue
            net_model = models.get(int(netlist.pin_net[p]))
            node = net_model.sink_node.get(to) if net_model is not None else None
            if node is None:
                slew[e] = s
                continue
            if net_model.reduced is None:
                wire_delay = float(net_model.delays[node])
                delay[e] = wire_delay
                impulse = LN9 * wire_delay
                for edge in (RISE, FALL):
                    for mode in (EARLY, LATE):
                        slew[e, edge, mode] = net_slew(s[edge, mode], impulse)
                continue
            impulse = arnoldi_delay(net_model.reduced, 0.0, node, thresholds, ramp_scale).slew
            for edge in (RISE, FALL):
                for mode in (EARLY, LATE):
                    response = arnoldi_delay(net_model.reduced, float(s[edge, mode]), node, thresholds, ramp_scale)
                    fallbacks += response.fallback
                    delay[e, edge, mode] = response.delay
                    slew[e, edge, mode] = net_slew(s[edge, mode], response.slew if response.fallback else impulse)
        return fallbacks, missing

    for level in range(graph.num_levels):
        nodes = [int(p) for p in graph.nodes_at(level)]
        for fallbacks, missing in parallel_map(process, nodes, threads):
            stats["fallbacks"] += fallbacks
            stats["missing"] += missing

    missing_checks = _check_margins(graph, pin_slew, delay)
    timing = ArcTiming(
        delay=delay,
        slew=slew,
        pin_slew=pin_slew,
        net_load=net_load,
        annotated=np.zeros(num_edges, dtype=bool),
        model=model,
        fallbacks=stats["fallbacks"],
        missing_tables=stats["missing"] + missing_checks,
    )
    if stats["missing"]:
        logger.warning("Delay arcs without NLDM tables use zero delay", extra={"count": stats["missing"]})
    if stats["fallbacks"]:
        logger.warning("Unstable reduced models fell back to Elmore", extra={"count": stats["fallbacks"]})
    if sdf is not None:
        timing.sdf_unmatched = apply_sdf(timing, graph, sdf)
    logger.info("Delay calculation finished", extra={"model": model, "edges": num_edges, "nets_with_rc": len(models)})
    return timing


def _check_margins(graph: TimingGraph, pin_slew: np.ndarray, delay: np.ndarray) -> int:
    """Setup margins use late slews, hold margins early slews."""
    missing = 0
    for e in np.flatnonzero((graph.edge_kind == CELL_CHECK_ARC) & ~graph.disabled):
        e = int(e)
        arc = graph.arc(e)
        mode = LATE if arc.kind.startswith("setup") else EARLY
        clock_edge = RISE if arc.kind.endswith("rising") else FALL
        ck, d = int(graph.edge_from[e]), int(graph.edge_to[e])
        for data_edge in (RISE, FALL):
            table = arc.tables.get(_CHECK_TABLE[data_edge])
            if table is None:
                missing += 1
                continue
            margin = lut_eval(table, pin_slew[d, data_edge, mode], pin_slew[ck, clock_edge, mode])
            delay[e, data_edge, :] = margin
    if missing:
        logger.warning("Timing checks without constraint tables use zero margin", extra={"count": missing})
    return missing


# --- SDF annotation ---


def _set(timing: ArcTiming, e: int, edge: int, value: Triple | None) -> None:
    if value is not None:
        timing.delay[e, edge, EARLY] = value.early
        timing.delay[e, edge, LATE] = value.late
        timing.annotated[e] = True


def apply_sdf(timing: ArcTiming, graph: TimingGraph, sdf: SdfData) -> int:
    """Overwrite delays and margins named in ``sdf``; returns the unmatched entry count."""
    netlist = graph.netlist
    unmatched = 0

    def cell_edges(instance: str, kind: int) -> list[int]:
        cell = netlist.cell_by_name.get(instance)
        if cell is None:
            return []
        return [int(e) for p in netlist.cell_pins(cell) for e in graph.fanout(int(p)) if int(graph.edge_kind[e]) == kind]

    for io in sdf.iopaths:
        hits = []
        for e in cell_edges(io.instance, CELL_DELAY_ARC):
            arc = graph.arc(e)
            if arc.from_pin != io.from_pin or arc.to_pin != io.to_pin:
                continue
            if io.from_edge == "posedge" and arc.kind == "falling_edge_clk_to_q":
                continue
            if io.from_edge == "negedge" and arc.kind == "rising_edge_clk_to_q":
                continue
            hits.append(e)
        for e in hits:
            _set(timing, e, RISE, io.rise)
            _set(timing, e, FALL, io.fall)
        unmatched += not hits

    for ic in sdf.interconnects:
        src, dst = netlist.pin_by_name.get(ic.from_pin), netlist.pin_by_name.get(ic.to_pin)
        hits = [] if src is None or dst is None else [
            int(e) for e in graph.fanout(src) if int(graph.edge_kind[e]) == NET_ARC and int(graph.edge_to[e]) == dst
        ]
        for e in hits:
            _set(timing, e, RISE, ic.rise)
            _set(timing, e, FALL, ic.fall)
        unmatched += not hits

    for chk in sdf.checks:
        hits = []
        for e in cell_edges(chk.instance, CELL_CHECK_ARC):
            arc = graph.arc(e)
            if arc.from_pin != chk.clock_pin or arc.to_pin != chk.data_pin or not arc.kind.startswith(chk.kind):
                continue
            if chk.clock_edge == "posedge" and not arc.kind.endswith("rising"):
                continue
            if chk.clock_edge == "negedge" and not arc.kind.endswith("falling"):
                continue
            hits.append(e)
        edges = {"posedge": (RISE,), "negedge": (FALL,)}.get(chk.data_edge, (RISE, FALL))
        for e in hits:
            for edge in edges:
                _set(timing, e, edge, chk.value)
        unmatched += not hits

    if unmatched:
        logger.warning("SDF entries did not match any timing arc", extra={"count": unmatched})
    logger.info("SDF annotation applied", extra={"annotated_edges": int(timing.annotated.sum())})
    return unmatched
