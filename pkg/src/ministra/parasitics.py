# src/ministra/parasitics.py

"""
Per-net RC trees from SPEF, from a flat RC bundle, or from Steiner estimation.

Every ``RcNet`` is a tree whose node 0 is the net's driver pin. Node caps are
wire (and folded coupling) capacitance only; pin capacitances are added by
the delay calculator. Nets without an ``RcNet`` are treated as lumped.

Flat RC bundle layout (all little-endian):
    net_node_offsets    <u4[N+1]
    node_cap            <f8[...]    fF
    node_pin            <u4[...]    pin id or NO_ID
    net_res_offsets     <u4[N+1]
    res_a, res_b        <u4[...]    node indices local to the net
    res_value           <f8[...]    kOhm
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from .chunking import parallel_map
from .exceptions import BundleValidationError, ParseError, RcNetworkError
from .netlist import NO_ID, FlatNetlist
from .sources import load_source
from .spef import SpefData, SpefNet

logger = logging.getLogger(__name__)

MIN_RESISTANCE = 1e-6  # kOhm

RC_ARRAYS = ("net_node_offsets", "node_cap", "node_pin", "net_res_offsets", "res_a", "res_b", "res_value")


@dataclass(eq=False)
class RcNet:
    cap: np.ndarray
    pin: np.ndarray
    res_a: np.ndarray
    res_b: np.ndarray
    res_val: np.ndarray

    root = 0

    @property
    def num_nodes(self) -> int:
        return int(self.cap.size)

    @property
    def total_cap(self) -> float:
        return float(self.cap.sum())

    @cached_property
    def tree(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(BFS order from the root, parent node, resistance to the parent)."""
        n = self.num_nodes
        if n == 1:
            return np.zeros(1, dtype=np.int64), np.full(1, -1, dtype=np.int64), np.zeros(1)
        adj = coo_matrix(
            (np.ones(2 * self.res_a.size), (np.r_[self.res_a, self.res_b], np.r_[self.res_b, self.res_a])),
            shape=(n, n),
        ).tocsr()
        order, pred = breadth_first_order(adj, 0, directed=False, return_predecessors=True)
        parent = pred.astype(np.int64)
        parent[0] = -1
        parent_res = np.zeros(n)
        lookup = {}
        for a, b, r in zip(self.res_a.tolist(), self.res_b.tolist(), self.res_val.tolist()):
            lookup[(a, b)] = lookup[(b, a)] = r
        for v in order[1:]:
            parent_res[v] = lookup[(int(parent[v]), int(v))]
        return order.astype(np.int64), parent, parent_res

    @cached_property
    def sink_nodes(self) -> dict[int, int]:
        """Pin id -> node for every pin-bearing node other than the root."""
        return {int(p): i for i, p in enumerate(self.pin.tolist()) if p != NO_ID and i != 0}

    def equals(self, other: "RcNet") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("cap", "pin", "res_a", "res_b", "res_val")
        )


def make_rc_net(cap, pin, res_a, res_b, res_val, root: int = 0, node_names: list[str] | None = None,
                what: str = "net") -> RcNet:
    """
    Validate a resistor network and reduce it to a tree rooted at node 0.

    Loops are broken by keeping a minimum-resistance spanning tree. Zero
    resistances are clamped to ``MIN_RESISTANCE``.
    """
    cap = np.asarray(cap, dtype=np.float64)
    pin = np.asarray(pin, dtype=np.uint32)
    res_a = np.asarray(res_a, dtype=np.int64)
    res_b = np.asarray(res_b, dtype=np.int64)
    res_val = np.maximum(np.asarray(res_val, dtype=np.float64), MIN_RESISTANCE)
    n = cap.size
    name = (lambda i: node_names[i]) if node_names else (lambda i: f"node {i}")
    if np.any(cap < 0):
        raise RcNetworkError(f"{what}: negative capacitance at {name(int(np.argmin(cap)))}")

    if res_a.size > n - 1:
        g = nx.MultiGraph()
        g.add_nodes_from(range(n))
        for i, (a, b, r) in enumerate(zip(res_a.tolist(), res_b.tolist(), res_val.tolist())):
            g.add_edge(a, b, key=i, r=r)
        keep = sorted(k for _, _, k in nx.minimum_spanning_edges(g, algorithm="kruskal", weight="r", keys=True, data=False))
        logger.warning("Resistive loop broken", extra={"net": what, "removed": int(res_a.size - len(keep))})
        res_a, res_b, res_val = res_a[keep], res_b[keep], res_val[keep]

    if root != 0:
        perm = np.arange(n)
        perm[0], perm[root] = root, 0
        cap, pin = cap[perm], pin[perm]
        inverse = np.argsort(perm)
        res_a, res_b = inverse[res_a], inverse[res_b]
        if node_names:
            node_names = [node_names[int(i)] for i in perm]

    if n > 1:
        adj = coo_matrix((np.ones(2 * res_a.size), (np.r_[res_a, res_b], np.r_[res_b, res_a])), shape=(n, n)).tocsr()
        reached = breadth_first_order(adj, 0, directed=False, return_predecessors=False)
        if reached.size != n:
            missing = sorted(set(range(n)) - set(reached.tolist()))[0]
            raise RcNetworkError(f"{what}: RC node '{name(missing)}' is not connected to the driver")
    return RcNet(cap=cap, pin=pin, res_a=res_a.astype(np.uint32), res_b=res_b.astype(np.uint32), res_val=res_val)


@dataclass(eq=False)
class RcStore:
    nets: dict[int, RcNet]

    def get(self, net: int) -> RcNet | None:
        return self.nets.get(net)

    def __len__(self) -> int:
        return len(self.nets)

    def to_arrays(self, num_nets: int) -> dict[str, np.ndarray]:
        node_counts = np.zeros(num_nets, dtype=np.int64)
        res_counts = np.zeros(num_nets, dtype=np.int64)
        for net, rc in self.nets.items():
            node_counts[net] = rc.num_nodes
            res_counts[net] = rc.res_val.size
        order = sorted(self.nets)
        empty_f, empty_u = np.zeros(0), np.zeros(0, dtype=np.uint32)

        def cat(field: str, empty: np.ndarray) -> np.ndarray:
            return np.concatenate([getattr(self.nets[n], field) for n in order]) if order else empty

        return {
            "net_node_offsets": np.r_[0, np.cumsum(node_counts)].astype(np.uint32),
            "node_cap": cat("cap", empty_f).astype(np.float64),
            "node_pin": cat("pin", empty_u).astype(np.uint32),
            "net_res_offsets": np.r_[0, np.cumsum(res_counts)].astype(np.uint32),
            "res_a": cat("res_a", empty_u).astype(np.uint32),
            "res_b": cat("res_b", empty_u).astype(np.uint32),
            "res_value": cat("res_val", empty_f).astype(np.float64),
        }

    def equals(self, other: "RcStore") -> bool:
        return self.nets.keys() == other.nets.keys() and all(self.nets[n].equals(other.nets[n]) for n in self.nets)


# --- SPEF ---


def _spef_pin(netlist: FlatNetlist, node: str, delimiter: str) -> int | None:
    by_name = netlist.pin_by_name
    if node in by_name and netlist.is_port(by_name[node]):
        return by_name[node]
    inst, sep, pin = node.rpartition(delimiter)
    if sep:
        return by_name.get(f"{inst}/{pin}")
    return None


def annotate_spef(spef: SpefData, netlist: FlatNetlist, threads: int = 1) -> RcStore:
    """
    Build RC trees for every SPEF net that resolves to a netlist net.

    Coupling capacitors are counted once per node pair and grounded at both
    of their nodes.
    """
    owners: dict[str, tuple[int, int]] = {}
    node_lists: list[list[str]] = []
    resolved: list[int | None] = []
    unresolved = 0
    for i, sn in enumerate(spef.nets):
        net = netlist.net_by_name.get(sn.name)
        if net is None:
            unresolved += 1
            logger.warning("SPEF net not found in netlist", extra={"net": sn.name, "line": sn.line})
        resolved.append(net)
        names: dict[str, int] = {}
        for node in [c.node for c in sn.conns] + [c.node for c in sn.caps] + \
                [n for r in sn.resistors for n in (r.node_a, r.node_b)]:
            if node not in names:
                names[node] = len(names)
                owners.setdefault(node, (i, names[node]))
        node_lists.append(list(names))

    coupling = 0
    extra: list[np.ndarray] = [np.zeros(len(nodes)) for nodes in node_lists]
    seen_pairs: set[frozenset[str]] = set()
    for sn in spef.nets:
        for c in sn.caps:
            if c.partner is None:
                continue
            pair = frozenset((c.node, c.partner))
            if pair in seen_pairs:
                continue
            seen_pairs.add(pair)
            for node in pair:
                if node in owners:
                    i, local = owners[node]
                    extra[i][local] += c.value
            coupling += 1

    def build(i: int) -> tuple[int, RcNet] | None:
        net = resolved[i]
        if net is None:
            return None
        return net, _spef_net(spef.nets[i], node_lists[i], extra[i], net, netlist, spef.delimiter)

    built = [b for b in parallel_map(build, list(range(len(spef.nets))), threads) if b is not None and b[1] is not None]
    store = RcStore(dict(built))
    logger.info(
        "SPEF annotated",
        extra={"nets": len(store), "unresolved": unresolved, "coupling_caps": coupling},
    )
    return store


def _spef_net(sn: SpefNet, nodes: list[str], coupled: np.ndarray, net: int, netlist: FlatNetlist,
              delimiter: str) -> RcNet | None:
    index = {n: k for k, n in enumerate(nodes)}
    cap = coupled.copy()
    for c in sn.caps:
        if c.partner is None:
            cap[index[c.node]] += c.value
    pin = np.full(len(nodes), NO_ID, dtype=np.uint32)
    for k, node in enumerate(nodes):
        p = _spef_pin(netlist, node, delimiter)
        if p is not None and int(netlist.pin_net[p]) == net:
            pin[k] = p
    driver = int(netlist.net_driver[net])
    present = set(int(p) for p in pin if p != NO_ID)
    missing = [int(p) for p in netlist.net_pins(net) if int(p) not in present]
    if driver == NO_ID or missing:
        logger.warning(
            "SPEF net does not cover every pin; using lumped capacitance",
            extra={"net": sn.name, "missing": [netlist.pin_name(p) for p in missing][:5]},
        )
        return None
    res_a = [index[r.node_a] for r in sn.resistors]
    res_b = [index[r.node_b] for r in sn.resistors]
    res_val = [r.value for r in sn.resistors]
    root = int(np.flatnonzero(pin == driver)[0])
    return make_rc_net(cap, pin, res_a, res_b, res_val, root=root, node_names=nodes, what=sn.name)


# --- Flat bundle ---


def ingest_flat_rc(arrays: dict[str, np.ndarray], netlist: FlatNetlist, allow_loops: bool = True) -> RcStore:
    """Positional RC ingestion; an empty bundle yields an empty store."""
    if not arrays or all(np.asarray(arrays.get(k, ())).size == 0 for k in RC_ARRAYS):
        return RcStore({})
    missing = [k for k in RC_ARRAYS if k not in arrays]
    if missing:
        raise BundleValidationError(f"RC bundle is missing arrays: {', '.join(missing)}")
    a = {k: np.asarray(arrays[k]) for k in RC_ARRAYS}
    num_nets = netlist.num_nets
    for key, total in (("net_node_offsets", a["node_cap"].size), ("net_res_offsets", a["res_value"].size)):
        off = a[key].astype(np.int64)
        if off.size != num_nets + 1 or off[0] != 0 or off[-1] != total or np.any(np.diff(off) < 0):
            raise BundleValidationError(f"RC bundle: '{key}' is not a valid offset array for {num_nets} nets")
    if a["node_pin"].size != a["node_cap"].size:
        raise BundleValidationError("RC bundle: node_pin and node_cap lengths differ")
    if not a["res_a"].size == a["res_b"].size == a["res_value"].size:
        raise BundleValidationError("RC bundle: resistor arrays have different lengths")

    node_off = a["net_node_offsets"].astype(np.int64)
    res_off = a["net_res_offsets"].astype(np.int64)
    nets: dict[int, RcNet] = {}
    for net in range(num_nets):
        n0, n1 = node_off[net], node_off[net + 1]
        if n0 == n1:
            continue
        r0, r1 = res_off[net], res_off[net + 1]
        what = netlist.net_name_of(net)
        pin = a["node_pin"][n0:n1]
        ra, rb = a["res_a"][r0:r1].astype(np.int64), a["res_b"][r0:r1].astype(np.int64)
        if ra.size and (ra.max() >= n1 - n0 or rb.max() >= n1 - n0):
            raise BundleValidationError(f"RC bundle: net '{what}' has a resistor on a missing node")
        if int(pin[0]) != int(netlist.net_driver[net]):
            raise BundleValidationError(f"RC bundle: node 0 of net '{what}' is not its driver")
        for p in pin[1:]:
            if p != NO_ID and (p >= netlist.num_pins or int(netlist.pin_net[p]) != net):
                raise BundleValidationError(f"RC bundle: net '{what}' names pin {int(p)} of another net")
        if not allow_loops and ra.size != (n1 - n0) - 1:
            raise BundleValidationError(f"RC bundle: net '{what}' is not a tree")
        nets[net] = make_rc_net(a["node_cap"][n0:n1], pin, ra, rb, a["res_value"][r0:r1], what=what)
    return RcStore(nets)


# --- Steiner estimation ---


@dataclass(frozen=True, slots=True)
class SteinerConfig:
    unit_res_x: float = 0.0
    unit_res_y: float = 0.0
    unit_cap_x: float = 0.0
    unit_cap_y: float = 0.0


def build_steiner(positions: dict[int, tuple[float, float]], driver: int, config: SteinerConfig) -> RcNet:
    """
    Rectilinear spanning tree (Prim from the driver, Manhattan distance, ties
    to the smaller pin id) with each edge routed horizontal first; a bend adds
    one Steiner node. Segment capacitance is split evenly between its ends.
    """
    pins = sorted(positions)
    xy = {p: positions[p] for p in pins}
    node_of = {driver: 0}
    node_xy = [xy[driver]]
    node_pin = [driver]
    res_a: list[int] = []
    res_b: list[int] = []
    res_val: list[float] = []
    caps = [0.0]

    def add_node(point: tuple[float, float], pin: int) -> int:
        node_xy.append(point)
        node_pin.append(pin)
        caps.append(0.0)
        return len(node_xy) - 1

    def add_segment(a: int, b: int, length: float, horizontal: bool) -> None:
        r = length * (config.unit_res_x if horizontal else config.unit_res_y)
        c = length * (config.unit_cap_x if horizontal else config.unit_cap_y)
        res_a.append(a)
        res_b.append(b)
        res_val.append(r)
        caps[a] += c / 2
        caps[b] += c / 2

    in_tree = [driver]
    outside = [p for p in pins if p != driver]
    while outside:
        best = None
        for q in outside:
            qx, qy = xy[q]
            for p in in_tree:
                px, py = xy[p]
                d = abs(px - qx) + abs(py - qy)
                key = (d, q, p)
                if best is None or key < best:
                    best = key
        _, q, p = best
        outside.remove(q)
        in_tree.append(q)
        (px, py), (qx, qy) = xy[p], xy[q]
        parent = node_of[p]
        if px != qx and py != qy:
            bend = add_node((qx, py), NO_ID)
            add_segment(parent, bend, abs(qx - px), True)
            child = add_node((qx, qy), q)
            add_segment(bend, child, abs(qy - py), False)
        else:
            child = add_node((qx, qy), q)
            add_segment(parent, child, abs(qx - px) + abs(qy - py), py == qy)
        node_of[q] = child

    return make_rc_net(caps, np.array(node_pin, dtype=np.uint32), res_a, res_b, res_val, what=f"steiner({driver})")


def build_steiner_store(netlist: FlatNetlist, positions: dict[int, tuple[float, float]], config: SteinerConfig,
                        threads: int = 1) -> RcStore:
    def build(net: int) -> tuple[int, RcNet] | None:
        driver = int(netlist.net_driver[net])
        pins = [int(p) for p in netlist.net_pins(net)]
        if driver == NO_ID or not pins:
            return None
        if any(p not in positions for p in pins):
            logger.warning("Net has pins without positions; using lumped capacitance",
                           extra={"net": netlist.net_name_of(net)})
            return None
        return net, build_steiner({p: positions[p] for p in pins}, driver, config)

    built = parallel_map(build, list(range(netlist.num_nets)), threads)
    store = RcStore(dict(b for b in built if b is not None))
    logger.info("Steiner RC estimated", extra={"nets": len(store)})
    return store


def read_positions(path: "str | Path", netlist: FlatNetlist) -> dict[int, tuple[float, float]]:
    """Read ``<pin name> <x> <y>`` lines; ``#`` starts a comment."""
    src = load_source(path)
    positions: dict[int, tuple[float, float]] = {}
    unknown = 0
    for lineno, raw in enumerate(src.data.decode("utf-8", errors="replace").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("expected '<pin> <x> <y>'", file=src.name, line=lineno)
        try:
            x, y = float(parts[1]), float(parts[2])
        except ValueError as e:
            raise ParseError(f"bad coordinate in '{line}'", file=src.name, line=lineno) from e
        pin = netlist.pin_by_name.get(parts[0])
        if pin is None:
            unknown += 1
            continue
        positions[pin] = (x, y)
    if unknown:
        logger.warning("Positions given for unknown pins were ignored", extra={"count": unknown, "source": src.name})
    return positions
