# src/ministra/pathreport.py

"""
Top-k worst path enumeration.

Paths are grown backwards from endpoints in best-first order. A partial
path is a suffix ``u -> ... -> endpoint`` with a fixed signal edge at every
pin; its key is a lower bound on the slack of any full path that ends with
it: for every tag present at ``u`` the tag's worst arrival at ``u`` plus the
suffix delay, checked against the requirement of the exception state the
tag reaches at the endpoint. Once the suffix reaches a startpoint the path
is complete and is queued again with its exact slack; only exact entries
are emitted, so slacks come out in non-decreasing order.
"""

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .netlist import NO_ID
from .propagation import CHECKS, EARLY, INF, LATE, Check, Tag, TimingState
from .schemas import ReportOptions
from .sdc import NodeSet

logger = logging.getLogger(__name__)

EDGE_LABELS = ("r", "f")


@dataclass(frozen=True, slots=True)
class PathQuery:
    k: int | None = 1
    nworst: int | None = 1
    slack_lt: float | None = None
    mode: Check = "setup"
    from_: NodeSet | None = None
    to: NodeSet | None = None
    group: str | None = None  # capture clock name

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.nworst is not None and self.nworst < 1:
            raise ValueError("nworst must be >= 1")
        if self.mode not in CHECKS:
            raise ValueError(f"unknown path mode {self.mode!r}")

    @classmethod
    def from_options(cls, options: ReportOptions) -> "PathQuery":
        return cls(k=options.k, nworst=options.nworst, slack_lt=options.slack_lt, mode=options.mode)


@dataclass(eq=False)
class PathSet:
    """
    Reported paths in CSR form. ``offsets[i]:offsets[i+1]`` slices the per-pin
    arrays of path ``i``; clock ids index ``clock_names`` (``NO_ID`` if none).
    """

    mode: Check
    offsets: np.ndarray
    pins: np.ndarray
    arrival: np.ndarray
    incr: np.ndarray
    edge: np.ndarray
    slack: np.ndarray
    endpoint: np.ndarray
    launch_clock: np.ndarray
    capture_clock: np.ndarray
    clock_names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.slack.size)

    def span(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def path_pins(self, i: int) -> list[int]:
        return self.pins[self.span(i)].tolist()

    def clock_name(self, idx: int) -> str | None:
        return None if idx == NO_ID else self.clock_names[idx]

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {
            "path_offsets": self.offsets,
            "path_pins": self.pins,
            "path_arrival": self.arrival,
            "path_incr": self.incr,
            "path_edge": self.edge,
            "path_slack": self.slack,
            "path_endpoint": self.endpoint,
            "path_launch_clock": self.launch_clock,
            "path_capture_clock": self.capture_clock,
        }


@dataclass(frozen=True, slots=True)
class _Found:
    slack: float
    endpoint: int
    pins: tuple[int, ...]
    edges: tuple[int, ...]
    transitions: tuple[int, ...]
    launch: Tag
    start_arrival: float
    capture: int | None


class _Search:
    def __init__(self, state: TimingState, query: PathQuery):
        self.state = state
        self.query = query
        self.mode = LATE if query.mode == "setup" else EARLY
        self.registers = state.clocks.register_clock_pins
        self.propagating = state.graph.propagating()
        self.heap: list[tuple] = []
        self.counter = itertools.count()

    def exit_tag(self, tag: Tag, pins: tuple[int, ...]) -> Tag:
        for p in pins[1:]:
            tag = self.state.advance(tag, p)
        return tag

    def slack(self, arrival: float, tag: Tag, pins: tuple[int, ...], transition: int,
              delay: float) -> tuple[float, int | None]:
        req = self.state.requirement(pins[-1], self.exit_tag(tag, pins), self.query.mode)
        required = float(req.required[transition])
        if self.query.mode == "setup":
            return required - (arrival + delay), req.capture[transition]
        return (arrival + delay) - required, req.capture[transition]

    def projected(self, pins, transitions, delay) -> float:
        u = pins[0]
        best = INF
        unset = -INF if self.mode == LATE else INF
        for tag, a in self.state.arrivals[u].items():
            arrival = float(a[transitions[0], self.mode])
            if arrival == unset:
                continue
            slack, _ = self.slack(arrival, tag, pins, transitions[-1], delay)
            best = min(best, slack)
        return best

    def push_partial(self, pins, edges, transitions, delay) -> None:
        slack = self.projected(pins, transitions, delay)
        if math.isinf(slack):
            return
        heapq.heappush(self.heap, (slack, 0, pins[-1], pins, transitions, (), next(self.counter), edges, delay))

    def push_complete(self, pins, edges, transitions, delay) -> None:
        start = pins[0]
        unset = -INF if self.mode == LATE else INF
        from_ = self.query.from_
        for tag, a in sorted(self.state.seeds.get(start, {}).items()):
            arrival = float(a[transitions[0], self.mode])
            if arrival == unset:
                continue
            if from_ is not None and not (start in from_.pins or self.state.clocks.names[tag[0]] in from_.clocks):
                continue
            slack, capture = self.slack(arrival, tag, pins, transitions[-1], delay)
            if math.isinf(slack):
                continue
            found = _Found(slack, pins[-1], pins, edges, transitions, tag, arrival, capture)
            heapq.heappush(self.heap, (slack, 1, pins[-1], pins, transitions, tag, next(self.counter), found))

    def expand(self, pins, edges, transitions, delay) -> None:
        state, graph = self.state, self.state.graph
        u = pins[0]
        if u in state.seeds:
            self.push_complete(pins, edges, transitions, delay)
        if u in self.registers:
            return
        for e in graph.fanin(u):
            e = int(e)
            if not self.propagating[e]:
                continue
            w = int(graph.edge_from[e])
            step = float(state.arcs.delay[e, transitions[0], self.mode])
            for tw in graph.input_edges(e, transitions[0]):
                self.push_partial((w, *pins), (e, *edges), (tw, *transitions), delay + step)

    def wanted(self, found: _Found) -> bool:
        q = self.query
        names = self.state.clocks.names
        capture = names[found.capture] if found.capture is not None else None
        if q.group is not None and capture != q.group:
            return False
        if q.to is not None and found.endpoint not in q.to.pins and capture not in q.to.clocks:
            return False
        return True

    def run(self) -> list[_Found]:
        q, state = self.query, self.state
        for ep in state.endpoints:
            if ep.pin not in state.constrained:
                continue
            if q.to is not None and not q.to.clocks and ep.pin not in q.to.pins:
                continue
            for edge in (0, 1):
                self.push_partial((ep.pin,), (), (edge,), 0.0)

        found: list[_Found] = []
        per_endpoint: dict[int, int] = {}
        # a pin sequence is reported once, at its worst edge and launch
        emitted: set[tuple[int, ...]] = set()
        while self.heap:
            item = heapq.heappop(self.heap)
            slack, exact, endpoint = item[0], item[1], item[2]
            if math.isinf(slack) or (q.slack_lt is not None and slack >= q.slack_lt):
                break
            if q.nworst is not None and per_endpoint.get(endpoint, 0) >= q.nworst:
                continue
            if not exact:
                _, _, _, pins, transitions, _, _, edges, delay = item
                self.expand(pins, edges, transitions, delay)
                continue
            path = item[-1]
            if path.pins in emitted or not self.wanted(path):
                continue
            emitted.add(path.pins)
            found.append(path)
            per_endpoint[endpoint] = per_endpoint.get(endpoint, 0) + 1
            if q.k is not None and len(found) >= q.k:
                break
        return found


def report_paths(state: TimingState, query: PathQuery | None = None) -> PathSet:
    """
    The ``query.k`` worst paths in non-decreasing slack order, ties broken by
    endpoint id then pin sequence. A path is a pin sequence; it is reported
    once with the slack of its worst signal edge and launch. False paths are
    never reported.
    """
    query = query or PathQuery()
    found = _Search(state, query).run()
    mode = LATE if query.mode == "setup" else EARLY
    delay = state.arcs.delay

    offsets = [0]
    pins: list[int] = []
    arrival: list[float] = []
    incr: list[float] = []
    edges: list[int] = []
    for path in found:
        t = path.start_arrival
        for i, (pin, tr) in enumerate(zip(path.pins, path.transitions)):
            step = 0.0 if i == 0 else float(delay[path.edges[i - 1], tr, mode])
            t += step
            pins.append(pin)
            arrival.append(t)
            incr.append(step)
            edges.append(tr)
        offsets.append(len(pins))

    result = PathSet(
        mode=query.mode,
        offsets=np.array(offsets, dtype=np.uint32),
        pins=np.array(pins, dtype=np.uint32),
        arrival=np.array(arrival, dtype=np.float64),
        incr=np.array(incr, dtype=np.float64),
        edge=np.array(edges, dtype=np.uint8),
        slack=np.array([p.slack for p in found], dtype=np.float64),
        endpoint=np.array([p.endpoint for p in found], dtype=np.uint32),
        launch_clock=np.array([p.launch[0] for p in found], dtype=np.uint32),
        capture_clock=np.array([NO_ID if p.capture is None else p.capture for p in found], dtype=np.uint32),
        clock_names=list(state.clocks.names),
    )
    logger.info("Paths reported", extra={"mode": query.mode, "paths": len(result)})
    return result


def format_path_text(paths: PathSet, i: int, pin_name) -> str:
    """Plain-text block for path ``i``; ``pin_name`` maps a pin id to its name."""
    span = paths.span(i)
    names = [pin_name(int(p)) for p in paths.pins[span]]
    width = max([len("Pin"), *map(len, names)])
    slack = float(paths.slack[i])
    arrival = float(paths.arrival[span][-1])
    required = arrival + slack if paths.mode == "setup" else arrival - slack
    group = paths.clock_name(int(paths.capture_clock[i]))

    rule = "-" * (width + 26)
    lines = [
        f"Startpoint: {names[0]}",
        f"Endpoint: {names[-1]}",
        f"Path Group: {group or '(none)'}",
        f"Path Type: {'max' if paths.mode == 'setup' else 'min'}",
        "",
        f"{'Pin':>{width}} {'Edge':>4} {'Incr':>10} {'Arrival':>10}",
        rule,
    ]
    for name, edge, step, t in zip(names, paths.edge[span], paths.incr[span], paths.arrival[span]):
        lines.append(f"{name:>{width}} {EDGE_LABELS[int(edge)]:>4} {float(step):>10.3f} {float(t):>10.3f}")
    lines += [
        rule,
        f"{'data arrival time':<{width + 16}}{arrival:>10.3f}",
        f"{'data required time':<{width + 16}}{required:>10.3f}",
        f"{'slack (VIOLATED)' if slack < 0 else 'slack (MET)':<{width + 16}}{slack:>10.3f}",
    ]
    return "\n".join(lines) + "\n"
