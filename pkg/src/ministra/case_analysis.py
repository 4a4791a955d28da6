# src/ministra/case_analysis.py

"""
Constant propagation for case analysis.

Seeds are netlist tie-offs and ``set_case_analysis`` values. A constant on a
net's driver reaches every pin of the net; a cell output becomes constant
when its Liberty function evaluates to a constant under the known inputs.
Edges touching constant pins and arcs whose ``when`` guard evaluates to 0 are
disabled.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import CaseConflictError
from .netlist import NO_ID
from .sdc import Constraints

if TYPE_CHECKING:
    from .graph import TimingGraph

logger = logging.getLogger(__name__)

UNKNOWN = -1


@dataclass(frozen=True, slots=True)
class CaseResult:
    values: np.ndarray  # int8 per pin: 0, 1 or UNKNOWN
    disabled_edges: int


def _assign(values: np.ndarray, pin: int, value: int, netlist) -> bool:
    current = int(values[pin])
    if current == value:
        return False
    if current != UNKNOWN:
        raise CaseConflictError(netlist.pin_name(pin))
    values[pin] = value
    return True


def apply_case_analysis(graph: "TimingGraph", constraints: Constraints) -> CaseResult:
    netlist = graph.netlist
    values = np.full(netlist.num_pins, UNKNOWN, dtype=np.int8)
    for pin, value in netlist.constants.items():
        _assign(values, pin, value, netlist)
    for case in constraints.case_values:
        _assign(values, case.pin, case.value, netlist)

    pending = set(np.flatnonzero(values != UNKNOWN).tolist())
    while pending:
        touched_cells: set[int] = set()
        nxt: set[int] = set()
        for pin in sorted(pending):
            net = int(netlist.pin_net[pin])
            if net != NO_ID and int(netlist.net_driver[net]) == pin:
                for q in netlist.net_pins(net):
                    if _assign(values, int(q), int(values[pin]), netlist):
                        nxt.add(int(q))
            cell = netlist.cell_of(pin)
            if cell is not None:
                touched_cells.add(cell)
        for pin in nxt:
            cell = netlist.cell_of(pin)
            if cell is not None:
                touched_cells.add(cell)
        for cell in sorted(touched_cells):
            env = _pin_env(netlist, cell, values)
            lib_cell = netlist.lib_cell_of(cell)
            for p in netlist.cell_pins(cell):
                lib_pin = lib_cell.pins[int(netlist.pin_lib_pin[p])]
                if lib_pin.direction == "input" or lib_pin.function_expr is None:
                    continue
                out = lib_pin.function_expr.evaluate(env)
                if out is not None and _assign(values, int(p), out, netlist):
                    nxt.add(int(p))
        pending = nxt

    before = int(graph.disabled.sum())
    const = values != UNKNOWN
    touches = const[graph.edge_from] | const[graph.edge_to]
    graph.disabled |= touches
    for e in range(graph.num_edges):
        arc = graph.arc(e)
        if arc is None or arc.when_expr is None or graph.disabled[e]:
            continue
        cell = netlist.cell_of(int(graph.edge_from[e]))
        if arc.when_expr.evaluate(_pin_env(netlist, cell, values)) == 0:
            graph.disabled[e] = True
    disabled = int(graph.disabled.sum()) - before
    if const.any():
        logger.info("Case analysis applied", extra={"constant_pins": int(const.sum()), "disabled_edges": disabled})
    return CaseResult(values=values, disabled_edges=disabled)


def _pin_env(netlist, cell: int, values: np.ndarray) -> dict[str, int | None]:
    lib_cell = netlist.lib_cell_of(cell)
    env: dict[str, int | None] = {}
    for p in netlist.cell_pins(cell):
        v = int(values[p])
        env[lib_cell.pins[int(netlist.pin_lib_pin[p])].name] = None if v == UNKNOWN else v
    return env
