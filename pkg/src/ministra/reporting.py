# src/ministra/reporting.py

"""
Output writers: SDF, timing summary, slack CSV and timing array bundles.

Every number is printed in ps with 3 decimals and every listing follows id
order, so outputs are byte-identical across thread counts.
"""

import csv
import io
import logging
import math
from pathlib import Path

import numpy as np

from .bundles import write_bundle
from .delaycalc import ArcTiming
from .graph import CELL_CHECK_ARC, CELL_DELAY_ARC, NET_ARC, TimingGraph
from .pathreport import PathSet
from .propagation import CHECKS, EARLY, LATE, TimingState, wns_tns
from .schemas import ArrayManifest

logger = logging.getLogger(__name__)

_EDGE_WORDS = ("posedge", "negedge")


def _ps(value: float) -> str:
    return f"{value:.3f}"


def _triple(timing: ArcTiming, e: int, edge: int) -> str:
    early, late = float(timing.delay[e, edge, EARLY]), float(timing.delay[e, edge, LATE])
    return f"({_ps(min(early, late))}::{_ps(max(early, late))})"


def write_sdf(arcs: ArcTiming, graph: TimingGraph, design: str = "") -> str:
    """
    SDF 3.0 text holding every delay and check margin the timer uses.

    Net arcs go in one top-level CELL as INTERCONNECT entries; each instance
    gets a CELL with its IOPATHs and SETUP/HOLD checks, cells in id order and
    entries in edge id order.
    """
    netlist = graph.netlist
    out = io.StringIO()
    out.write("(DELAYFILE\n")
    out.write('  (SDFVERSION "3.0")\n')
    out.write(f'  (DESIGN "{design}")\n')
    out.write('  (PROGRAM "ministra")\n')
    out.write('  (DIVIDER /)\n')
    out.write("  (TIMESCALE 1ps)\n")

    by_cell: dict[int, list[int]] = {}
    nets: list[int] = []
    for e in range(graph.num_edges):
        if int(graph.edge_kind[e]) == NET_ARC:
            nets.append(e)
        else:
            by_cell.setdefault(netlist.cell_of(int(graph.edge_from[e])), []).append(e)

    if nets:
        out.write("  (CELL\n")
        out.write(f'    (CELLTYPE "{design}")\n')
        out.write("    (INSTANCE)\n")
        out.write("    (DELAY\n      (ABSOLUTE\n")
        for e in nets:
            src = netlist.pin_name(int(graph.edge_from[e]))
            dst = netlist.pin_name(int(graph.edge_to[e]))
            out.write(f"        (INTERCONNECT {src} {dst} {_triple(arcs, e, 0)} {_triple(arcs, e, 1)})\n")
        out.write("      )\n    )\n  )\n")

    for cell in sorted(by_cell):
        edges = by_cell[cell]
        delays = [e for e in edges if int(graph.edge_kind[e]) == CELL_DELAY_ARC]
        checks = [e for e in edges if int(graph.edge_kind[e]) == CELL_CHECK_ARC]
        out.write("  (CELL\n")
        out.write(f'    (CELLTYPE "{netlist.lib_cell_of(cell).name}")\n')
        out.write(f"    (INSTANCE {netlist.cell_name_of(cell)})\n")
        if delays:
            out.write("    (DELAY\n      (ABSOLUTE\n")
            for e in delays:
                arc = graph.arc(e)
                src = arc.from_pin
                if arc.kind == "rising_edge_clk_to_q":
                    src = f"(posedge {src})"
                elif arc.kind == "falling_edge_clk_to_q":
                    src = f"(negedge {src})"
                out.write(f"        (IOPATH {src} {arc.to_pin} {_triple(arcs, e, 0)} {_triple(arcs, e, 1)})\n")
            out.write("      )\n    )\n")
        if checks:
            out.write("    (TIMINGCHECK\n")
            for e in checks:
                arc = graph.arc(e)
                kind, clock_edge = arc.kind.split("_")
                clock = f"({'posedge' if clock_edge == 'rising' else 'negedge'} {arc.from_pin})"
                mode = LATE if kind == "setup" else EARLY
                for data_edge in (0, 1):
                    v = _ps(float(arcs.delay[e, data_edge, mode]))
                    out.write(
                        f"      ({kind.upper()} ({_EDGE_WORDS[data_edge]} {arc.to_pin}) {clock} ({v}::{v}))\n"
                    )
            out.write("    )\n")
        out.write("  )\n")
    out.write(")\n")
    return out.getvalue()


def _value(x: float) -> str:
    return _ps(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def timing_summary(state: TimingState) -> str:
    """WNS/TNS per check, over all endpoints and per capture clock."""
    rows = [("check", "clock", "wns", "tns", "endpoints")]
    for check in CHECKS:
        wns, tns = wns_tns(state, check=check)
        rows.append((check, "*", _value(wns), _value(tns), str(len(state.constrained))))
        for idx, name in enumerate(state.clocks.names):
            slacks = state.clock_slack.get((check, idx))
            if not slacks:
                continue
            wns, tns = wns_tns(state, clock=name, check=check)
            rows.append((check, name, _value(wns), _value(tns), str(len(slacks))))
    width = max(len(r[1]) for r in rows)
    lines = [f"{r[0]:<6} {r[1]:<{width}} {r[2]:>12} {r[3]:>12} {r[4]:>10}" for r in rows]
    return "\n".join(lines) + "\n"


def slack_csv(state: TimingState) -> str:
    """``endpoint,setup_slack,hold_slack`` for constrained endpoints in pin order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["endpoint", "setup_slack", "hold_slack"])
    netlist = state.netlist
    for pin in sorted(state.constrained):
        writer.writerow([
            netlist.pin_name(pin),
            _value(float(state.setup_slack[pin])),
            _value(float(state.hold_slack[pin])),
        ])
    return buffer.getvalue()


def timing_arrays(state: TimingState, paths: PathSet | None = None) -> dict[str, np.ndarray]:
    endpoints = np.array(sorted(state.constrained), dtype=np.uint32)
    arrays = {
        "pin_setup_slack": state.pin_setup_slack,
        "pin_hold_slack": state.pin_hold_slack,
        "pin_arrival": state.pin_arrival,
        "endpoint_pins": endpoints,
        "endpoint_setup_slack": state.setup_slack[endpoints],
        "endpoint_hold_slack": state.hold_slack[endpoints],
        "arc_delay": state.arcs.delay.ravel(),
    }
    if paths is not None:
        arrays.update(paths.to_arrays())
    return arrays


def export_arrays(state: TimingState, directory: str | Path, paths: PathSet | None = None) -> ArrayManifest:
    """
    Timing bundle: per-pin slack and arrival arrays (``+inf`` slack where no
    constrained path passes), endpoint slacks, arc delays flattened from
    ``(edge, signal edge, early/late)`` and, if given, the path CSR arrays.
    Clock names go into the manifest's name table.
    """
    counts = {
        "pins": state.netlist.num_pins,
        "edges": state.graph.num_edges,
        "endpoints": len(state.constrained),
        "paths": len(paths) if paths is not None else 0,
    }
    manifest = write_bundle(directory, "timing", timing_arrays(state, paths), counts=counts,
                            names=list(state.clocks.names))
    logger.info("Timing arrays exported", extra={"path": str(directory), "arrays": len(manifest.arrays)})
    return manifest
