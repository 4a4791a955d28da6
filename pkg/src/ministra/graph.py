# src/ministra/graph.py

"""
Timing graph over netlist pins.

Edges are stored as flat arrays in a fixed order: all cell arcs (cells in id
order, arcs in library order), then all net arcs (nets in id order, sinks in
pin order). ``fanout`` and ``fanin`` are CSR groupings of edge ids, so every
traversal visits edges in ascending id order.
"""

import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .liberty import CHECK_KINDS
from .netlist import NO_ID, FlatNetlist, csr_from_groups
from .sdc import Constraints

logger = logging.getLogger(__name__)

NET_ARC, CELL_DELAY_ARC, CELL_CHECK_ARC = 0, 1, 2
EDGE_KIND_NAMES = ("net_arc", "cell_delay_arc", "cell_check_arc")

# sense codes; net arcs are positive unate, clock-to-output arcs keep their trigger edge
POSITIVE, NEGATIVE, NON_UNATE, RISING_EDGE, FALLING_EDGE = 0, 1, 2, 3, 4
_SENSE_CODES = {"positive_unate": POSITIVE, "negative_unate": NEGATIVE, "non_unate": NON_UNATE}
_TRIGGER_CODES = {"rising_edge_clk_to_q": RISING_EDGE, "falling_edge_clk_to_q": FALLING_EDGE}

RISE, FALL = 0, 1

# input edges feeding each output edge, indexed [sense][output edge]
INPUT_EDGES = (
    ((RISE,), (FALL,)),
    ((FALL,), (RISE,)),
    ((RISE, FALL), (RISE, FALL)),
    ((RISE,), (RISE,)),
    ((FALL,), (FALL,)),
)


@dataclass(eq=False)
class TimingGraph:
    netlist: FlatNetlist
    edge_from: np.ndarray
    edge_to: np.ndarray
    edge_kind: np.ndarray
    edge_arc: np.ndarray  # library arc index for cell arcs, NO_ID for net arcs
    edge_sense: np.ndarray
    disabled: np.ndarray
    fanout_offsets: np.ndarray
    fanout_edges: np.ndarray
    fanin_offsets: np.ndarray
    fanin_edges: np.ndarray
    level: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    level_offsets: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    level_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint32))
    broken_edges: list[int] = field(default_factory=list)
    pin_values: np.ndarray | None = None

    @property
    def num_nodes(self) -> int:
        return self.netlist.num_pins

    @property
    def num_edges(self) -> int:
        return int(self.edge_from.size)

    @property
    def num_levels(self) -> int:
        return int(self.level_offsets.size - 1)

    def fanout(self, pin: int) -> np.ndarray:
        return self.fanout_edges[self.fanout_offsets[pin]:self.fanout_offsets[pin + 1]]

    def fanin(self, pin: int) -> np.ndarray:
        return self.fanin_edges[self.fanin_offsets[pin]:self.fanin_offsets[pin + 1]]

    def nodes_at(self, level: int) -> np.ndarray:
        return self.level_nodes[self.level_offsets[level]:self.level_offsets[level + 1]]

    def arc(self, edge: int):
        """Library timing arc behind a cell edge (None for net arcs)."""
        if int(self.edge_kind[edge]) == NET_ARC:
            return None
        cell = self.netlist.cell_of(int(self.edge_from[edge]))
        return self.netlist.lib_cell_of(cell).arcs[int(self.edge_arc[edge])]

    def is_enabled(self, edge: int) -> bool:
        return not bool(self.disabled[edge])

    def input_edges(self, edge: int, out_edge: int) -> tuple[int, ...]:
        return INPUT_EDGES[int(self.edge_sense[edge])][out_edge]

    def propagating(self) -> np.ndarray:
        """Mask of enabled edges that carry signals (everything but checks)."""
        return ~self.disabled & (self.edge_kind != CELL_CHECK_ARC)


def build_graph(netlist: FlatNetlist, constraints: Constraints | None = None) -> TimingGraph:
    """
    Create net and cell edges, apply ``set_disable_timing`` and case
    analysis, then levelize.
    """
    from .case_analysis import apply_case_analysis

    constraints = constraints or Constraints()
    src: list[int] = []
    dst: list[int] = []
    kind: list[int] = []
    arc_ref: list[int] = []
    sense: list[int] = []

    for cell in range(netlist.num_cells):
        lib_cell = netlist.lib_cell_of(cell)
        pins = netlist.cell_pins(cell)
        by_lib_pin = {int(netlist.pin_lib_pin[p]): int(p) for p in pins}
        for a, arc in enumerate(lib_cell.arcs):
            u = by_lib_pin.get(lib_cell.pin_id(arc.from_pin))
            v = by_lib_pin.get(lib_cell.pin_id(arc.to_pin))
            if u is None or v is None:
                continue
            src.append(u)
            dst.append(v)
            kind.append(CELL_CHECK_ARC if arc.kind in CHECK_KINDS else CELL_DELAY_ARC)
            arc_ref.append(a)
            if arc.kind == "combinational":
                sense.append(_SENSE_CODES[arc.sense])
            else:
                sense.append(_TRIGGER_CODES.get(arc.kind, NON_UNATE))

    for net in range(netlist.num_nets):
        driver = int(netlist.net_driver[net])
        if driver == NO_ID:
            continue
        for p in netlist.net_pins(net):
            p = int(p)
            if p == driver:
                continue
            src.append(driver)
            dst.append(p)
            kind.append(NET_ARC)
            arc_ref.append(NO_ID)
            sense.append(POSITIVE)

    edge_from = np.array(src, dtype=np.uint32)
    edge_to = np.array(dst, dtype=np.uint32)
    num_pins = netlist.num_pins
    fanout_offsets, fanout_edges = csr_from_groups(edge_from, num_pins)
    fanin_offsets, fanin_edges = csr_from_groups(edge_to, num_pins)
    graph = TimingGraph(
        netlist=netlist,
        edge_from=edge_from,
        edge_to=edge_to,
        edge_kind=np.array(kind, dtype=np.uint8),
        edge_arc=np.array(arc_ref, dtype=np.uint32),
        edge_sense=np.array(sense, dtype=np.uint8),
        disabled=np.zeros(len(src), dtype=bool),
        fanout_offsets=fanout_offsets,
        fanout_edges=fanout_edges,
        fanin_offsets=fanin_offsets,
        fanin_edges=fanin_edges,
    )

    user_disabled = _apply_disable_timing(graph, constraints)
    case = apply_case_analysis(graph, constraints)
    graph.pin_values = case.values

    unconnected = int(np.count_nonzero(netlist.pin_net == NO_ID)) - len(netlist.constants)
    if unconnected:
        logger.warning("Unconnected pins in netlist", extra={"count": unconnected})
    levelize(graph)
    logger.info(
        "Timing graph built",
        extra={
            "edges": graph.num_edges,
            "levels": graph.num_levels,
            "disabled_by_user": user_disabled,
            "disabled_by_case": case.disabled_edges,
            "broken_loops": len(graph.broken_edges),
        },
    )
    return graph


def _apply_disable_timing(graph: TimingGraph, constraints: Constraints) -> int:
    netlist = graph.netlist
    before = int(graph.disabled.sum())
    for target in constraints.disabled:
        if target.pin is not None:
            graph.disabled[graph.fanout(target.pin)] = True
            graph.disabled[graph.fanin(target.pin)] = True
            continue
        for p in netlist.cell_pins(target.cell):
            for e in graph.fanout(int(p)):
                if int(graph.edge_kind[e]) == NET_ARC:
                    continue
                arc = graph.arc(int(e))
                if target.from_pin is not None and arc.from_pin != target.from_pin:
                    continue
                if target.to_pin is not None and arc.to_pin != target.to_pin:
                    continue
                graph.disabled[e] = True
    return int(graph.disabled.sum()) - before


def _kahn_levels(graph: TimingGraph, active: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Longest-path levels over ``active`` edges; returns (level, visited mask)."""
    n = graph.num_nodes
    indeg = np.bincount(graph.edge_to[active].astype(np.int64), minlength=n)
    level = np.zeros(n, dtype=np.int64)
    frontier = [v for v in range(n) if indeg[v] == 0]
    visited = np.zeros(n, dtype=bool)
    while frontier:
        nxt: list[int] = []
        for u in frontier:
            visited[u] = True
            for e in graph.fanout(u):
                if not active[e]:
                    continue
                v = int(graph.edge_to[e])
                level[v] = max(level[v], level[u] + 1)
                indeg[v] -= 1
                if indeg[v] == 0:
                    nxt.append(v)
        frontier = nxt
    return level, visited


def levelize(graph: TimingGraph) -> np.ndarray:
    """
    Assign topological levels over enabled non-check edges.

    Combinational loops are broken by disabling the smallest enabled edge id
    inside each strongly connected component, then levelizing again.
    """
    while True:
        active = graph.propagating()
        level, visited = _kahn_levels(graph, active)
        if visited.all():
            break
        stuck = np.flatnonzero(~visited)
        sub = nx.DiGraph()
        sub.add_nodes_from(int(v) for v in stuck)
        stuck_set = set(int(v) for v in stuck)
        for v in stuck:
            for e in graph.fanout(int(v)):
                w = int(graph.edge_to[e])
                if active[e] and w in stuck_set:
                    sub.add_edge(int(v), w)
        for component in nx.strongly_connected_components(sub):
            members = set(component)
            candidates = [
                int(e) for u in members for e in graph.fanout(u)
                if active[e] and int(graph.edge_to[e]) in members
            ]
            if not candidates:
                continue
            victim = min(candidates)
            graph.disabled[victim] = True
            graph.broken_edges.append(victim)
            logger.warning(
                "Combinational loop broken",
                extra={
                    "edge": victim,
                    "from": graph.netlist.pin_name(int(graph.edge_from[victim])),
                    "to": graph.netlist.pin_name(int(graph.edge_to[victim])),
                },
            )

    graph.level = level
    order = np.lexsort((np.arange(level.size), level)).astype(np.uint32)
    counts = np.bincount(level, minlength=int(level.max()) + 1 if level.size else 0)
    graph.level_offsets = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=graph.level_offsets[1:])
    graph.level_nodes = order
    return level
