# src/ministra/netlist.py

"""
Flat netlist database.

Everything is id-based: cells, pins and nets are dense 0-based indices into
``numpy.uint32`` arrays, and groupings are CSR offset/index pairs. Top-level
ports are pins owned by the ``PORT`` sentinel; for those pins the ``lib_pin``
slot holds the port's name id instead of a library pin index.

Layout of a netlist bundle (all little-endian):
    cell_lib, cell_name                     <u4[C]
    pin_owner, pin_lib_pin, pin_net         <u4[P]
    pin_dir                                 u1[P]   0 input, 1 output, 2 inout
    net_name, net_driver                    <u4[N]
    net_pin_offsets                         <u4[N+1]
    net_pin_index                           <u4[...]
    cell_pin_offsets                        <u4[C+1]
    cell_pin_index                          <u4[...]
    const_pins                              <u4[K]
    const_values                            u1[K]
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from networkx.utils import UnionFind

from .exceptions import BundleValidationError, ElaborationError
from .liberty import LibertyLibrary
from .verilog import Concat, Const, Module, Ref, VerilogDesign, VExpr

logger = logging.getLogger(__name__)

NO_ID = 0xFFFFFFFF
PORT = NO_ID

DIR_INPUT, DIR_OUTPUT, DIR_INOUT = 0, 1, 2
_DIR_CODES = {"input": DIR_INPUT, "output": DIR_OUTPUT, "inout": DIR_INOUT}

NETLIST_ARRAYS = (
    "cell_lib",
    "cell_name",
    "pin_owner",
    "pin_lib_pin",
    "pin_net",
    "pin_dir",
    "net_name",
    "net_driver",
    "net_pin_offsets",
    "net_pin_index",
    "cell_pin_offsets",
    "cell_pin_index",
    "const_pins",
    "const_values",
)


def csr_from_groups(groups: np.ndarray, count: int, members: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Build CSR (offsets, indices) grouping ``members`` by ``groups``.

    Entries whose group is ``NO_ID`` are left out; members keep ascending
    order inside a group.
    """
    groups = np.asarray(groups, dtype=np.uint32)
    if members is None:
        members = np.arange(groups.size, dtype=np.uint32)
    keep = groups != NO_ID
    g = groups[keep].astype(np.int64)
    m = members[keep]
    order = np.argsort(g, kind="stable")
    counts = np.bincount(g, minlength=count) if g.size else np.zeros(count, dtype=np.int64)
    offsets = np.zeros(count + 1, dtype=np.uint32)
    np.cumsum(counts, out=offsets[1:])
    return offsets, m[order].astype(np.uint32)


@dataclass(eq=False)
class FlatNetlist:
    lib: LibertyLibrary
    names: list[str]
    cell_lib: np.ndarray
    cell_name: np.ndarray
    pin_owner: np.ndarray
    pin_lib_pin: np.ndarray
    pin_net: np.ndarray
    pin_dir: np.ndarray
    net_name: np.ndarray
    net_driver: np.ndarray
    net_pin_offsets: np.ndarray
    net_pin_index: np.ndarray
    cell_pin_offsets: np.ndarray
    cell_pin_index: np.ndarray
    constants: dict[int, int] = field(default_factory=dict)

    # --- Sizes ---
    @property
    def num_cells(self) -> int:
        return int(self.cell_lib.size)

    @property
    def num_pins(self) -> int:
        return int(self.pin_owner.size)

    @property
    def num_nets(self) -> int:
        return int(self.net_name.size)

    # --- Accessors ---
    def net_pins(self, net: int) -> np.ndarray:
        return self.net_pin_index[self.net_pin_offsets[net]:self.net_pin_offsets[net + 1]]

    def cell_pins(self, cell: int) -> np.ndarray:
        return self.cell_pin_index[self.cell_pin_offsets[cell]:self.cell_pin_offsets[cell + 1]]

    def is_port(self, pin: int) -> bool:
        return int(self.pin_owner[pin]) == PORT

    def cell_of(self, pin: int) -> int | None:
        owner = int(self.pin_owner[pin])
        return None if owner == PORT else owner

    def lib_cell_of(self, cell: int):
        return self.lib.cells[int(self.cell_lib[cell])]

    def lib_pin_of(self, pin: int):
        owner = int(self.pin_owner[pin])
        if owner == PORT:
            return None
        return self.lib.cells[int(self.cell_lib[owner])].pins[int(self.pin_lib_pin[pin])]

    def cell_name_of(self, cell: int) -> str:
        return self.names[int(self.cell_name[cell])]

    def net_name_of(self, net: int) -> str:
        return self.names[int(self.net_name[net])]

    def pin_name(self, pin: int) -> str:
        owner = int(self.pin_owner[pin])
        if owner == PORT:
            return self.names[int(self.pin_lib_pin[pin])]
        lib_cell = self.lib.cells[int(self.cell_lib[owner])]
        return f"{self.names[int(self.cell_name[owner])]}/{lib_cell.pins[int(self.pin_lib_pin[pin])].name}"

    def is_driver(self, pin: int) -> bool:
        """True for cell outputs and input ports."""
        d = int(self.pin_dir[pin])
        if self.is_port(pin):
            return d in (DIR_INPUT, DIR_INOUT)
        return d in (DIR_OUTPUT, DIR_INOUT)

    # --- Name indices (built on first use) ---
    @cached_property
    def pin_names(self) -> list[str]:
        return [self.pin_name(p) for p in range(self.num_pins)]

    @cached_property
    def pin_by_name(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.pin_names)}

    @cached_property
    def cell_by_name(self) -> dict[str, int]:
        return {self.cell_name_of(c): c for c in range(self.num_cells)}

    @cached_property
    def net_by_name(self) -> dict[str, int]:
        return {self.net_name_of(n): n for n in range(self.num_nets)}

    @cached_property
    def port_pins(self) -> np.ndarray:
        return np.flatnonzero(self.pin_owner == PORT).astype(np.uint32)

    # --- Export / comparison ---
    def to_arrays(self) -> dict[str, np.ndarray]:
        const_pins = np.array(sorted(self.constants), dtype=np.uint32)
        const_values = np.array([self.constants[p] for p in sorted(self.constants)], dtype=np.uint8)
        arrays = {name: getattr(self, name) for name in NETLIST_ARRAYS[:12]}
        arrays["const_pins"] = const_pins
        arrays["const_values"] = const_values
        return arrays

    def equals(self, other: "FlatNetlist") -> bool:
        if self.names != other.names or self.constants != other.constants:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.to_arrays().values(), other.to_arrays().values()))


# --- Elaboration ---


class _Names:
    def __init__(self):
        self.table: list[str] = []
        self.ids: dict[str, int] = {}

    def intern(self, name: str) -> int:
        i = self.ids.get(name)
        if i is None:
            i = len(self.table)
            self.table.append(name)
            self.ids[name] = i
        return i


_CONST0 = 0
_CONST1 = 1


class _Elaborator:
    def __init__(self, design: VerilogDesign, lib: LibertyLibrary):
        self.design = design
        self.lib = lib
        self.uf = UnionFind()
        self.elem_names: list[str] = ["1'b0", "1'b1"]
        self.lhs: set[int] = set()
        self.names = _Names()
        # per pin: owner, lib_pin, dir, element (or None)
        self.pin_owner: list[int] = []
        self.pin_lib_pin: list[int] = []
        self.pin_dir: list[int] = []
        self.pin_elem: list[int | None] = []
        self.cell_lib: list[int] = []
        self.cell_name: list[int] = []
        self.stack: list[str] = []

    def new_elem(self, name: str) -> int:
        self.elem_names.append(name)
        e = len(self.elem_names) - 1
        self.uf[e]  # register
        return e

    # --- Bits ---
    @staticmethod
    def _bit_range(msb: int | None, lsb: int | None) -> list[int | None]:
        if msb is None:
            return [None]
        step = -1 if msb >= lsb else 1
        return list(range(msb, lsb + step, step))

    def expr_bits(self, mod: Module, scope: dict[str, list[int]], expr: VExpr | None,
                  width: int | None, where: str) -> list[int | None]:
        """Element ids for each bit of ``expr`` (msb first); None = unconnected."""
        if expr is None:
            return [None] * (width or 1)
        if isinstance(expr, Const):
            bits = expr.bits
            if expr.width is None and width is not None:
                bits = bits[-width:].rjust(width, "0")
            out: list[int | None] = []
            for b in bits:
                out.append(_CONST0 if b == "0" else _CONST1 if b == "1" else None)
            self._check_width(len(out), width, where)
            return out
        if isinstance(expr, Concat):
            out = []
            for part in expr.parts:
                out.extend(self.expr_bits(mod, scope, part, None, where))
            self._check_width(len(out), width, where)
            return out
        rng = mod.range_of(expr.name)
        if rng is None:
            raise ElaborationError(f"'{expr.name}' is not declared in module '{mod.name}' ({where})")
        elems = scope[expr.name]
        declared = self._bit_range(*rng)
        if expr.msb is None:
            out = list(elems)
        else:
            if rng[0] is None:
                raise ElaborationError(f"bit-select on scalar '{expr.name}' in module '{mod.name}' ({where})")
            out = []
            for bit in self._bit_range(expr.msb, expr.lsb):
                if bit not in declared:
                    raise ElaborationError(f"bit {bit} of '{expr.name}' is out of range in '{mod.name}' ({where})")
                out.append(elems[declared.index(bit)])
        self._check_width(len(out), width, where)
        return out

    @staticmethod
    def _check_width(got: int, want: int | None, where: str) -> None:
        if want is not None and got != want:
            raise ElaborationError(f"width mismatch in connection {where}: expected {want} bits, got {got}")

    @staticmethod
    def _bit_name(name: str, bit: int | None) -> str:
        return name if bit is None else f"{name}[{bit}]"

    # --- Recursion ---
    def flatten(self, mod: Module, prefix: str, bindings: dict[str, list[int | None]]) -> None:
        if mod.name in self.stack:
            raise ElaborationError(f"recursive instantiation of module '{mod.name}'")
        self.stack.append(mod.name)
        scope: dict[str, list[int]] = {}
        for name in mod.port_order:
            decl = mod.ports[name]
            bits = self._bit_range(decl.msb, decl.lsb)
            bound = bindings.get(name)
            elems = []
            for i, bit in enumerate(bits):
                e = bound[i] if bound is not None else None
                if e is None:
                    e = self.new_elem(prefix + self._bit_name(name, bit))
                elems.append(e)
            scope[name] = elems
        for name, (msb, lsb) in mod.wires.items():
            scope[name] = [self.new_elem(prefix + self._bit_name(name, bit)) for bit in self._bit_range(msb, lsb)]

        for a in mod.assigns:
            where = f"assign in '{mod.name}' line {a.line}"
            lhs = self.expr_bits(mod, scope, a.lhs, None, where)
            rhs = self.expr_bits(mod, scope, a.rhs, len(lhs), where)
            for left, right in zip(lhs, rhs):
                if left is None or right is None:
                    continue
                self.lhs.add(left)
                self.uf.union(left, right)

        for inst in mod.instances:
            where = f"{prefix}{inst.name} line {inst.line}"
            cell_id = self.lib.cell_id(inst.cell)
            if cell_id is not None:
                self.add_cell(mod, scope, inst, cell_id, prefix, where)
            elif inst.cell in self.design.modules:
                sub = self.design.modules[inst.cell]
                sub_bind: dict[str, list[int | None]] = {}
                conns = self._connections(inst, sub.port_order, where)
                for port, expr in conns.items():
                    decl = sub.ports[port]
                    width = len(self._bit_range(decl.msb, decl.lsb))
                    sub_bind[port] = self.expr_bits(mod, scope, expr, width, f"{where} port '{port}'")
                self.flatten(sub, f"{prefix}{inst.name}/", sub_bind)
            else:
                raise ElaborationError(f"instance '{prefix}{inst.name}' references unknown module or cell '{inst.cell}'")
        self.stack.pop()

    @staticmethod
    def _connections(inst, ports: list[str], where: str) -> dict[str, VExpr | None]:
        if inst.positional is not None:
            if len(inst.positional) > len(ports):
                raise ElaborationError(f"too many positional connections at {where}")
            return dict(zip(ports, inst.positional))
        conns = dict(inst.named or {})
        unknown = [p for p in conns if p not in ports]
        if unknown:
            raise ElaborationError(f"unknown port(s) {unknown} at {where}")
        return conns

    def add_cell(self, mod: Module, scope, inst, cell_id: int, prefix: str, where: str) -> None:
        lib_cell = self.lib.cells[cell_id]
        conns = self._connections(inst, [p.name for p in lib_cell.pins], where)
        cell = len(self.cell_lib)
        self.cell_lib.append(cell_id)
        self.cell_name.append(self.names.intern(prefix + inst.name))
        for i, lp in enumerate(lib_cell.pins):
            elem = None
            if lp.name in conns:
                elem = self.expr_bits(mod, scope, conns[lp.name], 1, f"{where} pin '{lp.name}'")[0]
            self.pin_owner.append(cell)
            self.pin_lib_pin.append(i)
            self.pin_dir.append(_DIR_CODES[lp.direction])
            self.pin_elem.append(elem)

    # --- Assembly ---
    def run(self, top: str) -> FlatNetlist:
        mod = self.design.modules[top]
        bindings: dict[str, list[int | None]] = {}
        for name in mod.port_order:
            decl = mod.ports[name]
            elems: list[int | None] = []
            for bit in self._bit_range(decl.msb, decl.lsb):
                pname = self._bit_name(name, bit)
                e = self.new_elem(pname)
                elems.append(e)
                self.pin_owner.append(PORT)
                self.pin_lib_pin.append(self.names.intern(pname))
                self.pin_dir.append(_DIR_CODES[decl.direction])
                self.pin_elem.append(e)
            bindings[name] = elems
        self.uf[_CONST0]
        self.uf[_CONST1]
        self.flatten(mod, "", bindings)
        return self.assemble()

    def assemble(self) -> FlatNetlist:
        roots: dict[int, int] = {}
        groups: dict[int, list[int]] = {}
        for e in range(len(self.elem_names)):
            groups.setdefault(self.uf[e], []).append(e)
        const_of_root: dict[int, int] = {}
        rep_of_root: dict[int, int] = {}
        for root, members in groups.items():
            has0, has1 = _CONST0 in members, _CONST1 in members
            if has0 and has1:
                raise ElaborationError(
                    f"net '{self.elem_names[max(members)]}' is tied to both 1'b0 and 1'b1"
                )
            if has0 or has1:
                const_of_root[root] = 1 if has1 else 0
                continue
            not_lhs = [m for m in members if m not in self.lhs]
            rep_of_root[root] = min(not_lhs) if not_lhs else min(members)

        pin_net: list[int] = []
        net_name: list[int] = []
        constants: dict[int, int] = {}
        for pin, elem in enumerate(self.pin_elem):
            if elem is None:
                pin_net.append(NO_ID)
                continue
            root = self.uf[elem]
            if root in const_of_root:
                constants[pin] = const_of_root[root]
                pin_net.append(NO_ID)
                continue
            net = roots.get(root)
            if net is None:
                net = len(net_name)
                roots[root] = net
                net_name.append(self.names.intern(self.elem_names[rep_of_root[root]]))
            pin_net.append(net)

        netlist = build_flat(
            self.lib,
            self.names.table,
            cell_lib=np.array(self.cell_lib, dtype=np.uint32),
            cell_name=np.array(self.cell_name, dtype=np.uint32),
            pin_owner=np.array(self.pin_owner, dtype=np.uint32),
            pin_lib_pin=np.array(self.pin_lib_pin, dtype=np.uint32),
            pin_net=np.array(pin_net, dtype=np.uint32),
            pin_dir=np.array(self.pin_dir, dtype=np.uint8),
            net_name=np.array(net_name, dtype=np.uint32),
            constants=constants,
            error=ElaborationError,
        )
        return netlist


def build_flat(lib, names, *, cell_lib, cell_name, pin_owner, pin_lib_pin, pin_net, pin_dir,
               net_name, constants, error=ElaborationError) -> FlatNetlist:
    """Derive drivers and CSR groupings from the per-pin arrays."""
    num_nets = int(net_name.size)
    num_cells = int(cell_lib.size)
    net_pin_offsets, net_pin_index = csr_from_groups(pin_net, num_nets)
    cell_pin_offsets, cell_pin_index = csr_from_groups(pin_owner, num_cells)
    netlist = FlatNetlist(
        lib=lib,
        names=list(names),
        cell_lib=cell_lib,
        cell_name=cell_name,
        pin_owner=pin_owner,
        pin_lib_pin=pin_lib_pin,
        pin_net=pin_net,
        pin_dir=pin_dir,
        net_name=net_name,
        net_driver=np.full(num_nets, NO_ID, dtype=np.uint32),
        net_pin_offsets=net_pin_offsets,
        net_pin_index=net_pin_index,
        cell_pin_offsets=cell_pin_offsets,
        cell_pin_index=cell_pin_index,
        constants=dict(constants),
    )
    netlist.net_driver = _find_drivers(netlist, error)
    return netlist


def _find_drivers(netlist: FlatNetlist, error) -> np.ndarray:
    drivers = np.full(netlist.num_nets, NO_ID, dtype=np.uint32)
    for net in range(netlist.num_nets):
        strict = []
        inout = []
        for p in netlist.net_pins(net):
            p = int(p)
            if not netlist.is_driver(p):
                continue
            (inout if int(netlist.pin_dir[p]) == DIR_INOUT else strict).append(p)
        if len(strict) > 1:
            names = [netlist.pin_name(p) for p in strict]
            raise error(f"net '{netlist.net_name_of(net)}' is driven by multiple pins {names}")
        candidates = strict or inout
        if candidates:
            drivers[net] = candidates[0]
    return drivers


def choose_top(design: VerilogDesign, top: str | None) -> str:
    if top is not None:
        if top not in design.modules:
            raise ElaborationError(f"top module '{top}' is not defined")
        return top
    roots = design.roots()
    if len(roots) != 1:
        raise ElaborationError(f"cannot infer the top module; candidates are {sorted(roots)} (use --top)")
    return roots[0]


def elaborate(design: VerilogDesign, lib: LibertyLibrary, top: str | None = None) -> FlatNetlist:
    """Flatten ``design`` below ``top`` (or ``design.top``, or the unique root)."""
    top_name = choose_top(design, top or design.top)
    netlist = _Elaborator(design, lib).run(top_name)
    dangling = sum(1 for p in range(netlist.num_pins) if int(netlist.pin_net[p]) == NO_ID
                   and p not in netlist.constants)
    logger.info(
        "Design elaborated",
        extra={"top": top_name, "cells": netlist.num_cells, "pins": netlist.num_pins,
               "nets": netlist.num_nets, "unconnected_pins": dangling},
    )
    return netlist


# --- External bundles ---


def ingest_flat(arrays: dict[str, np.ndarray], lib: LibertyLibrary, names: list[str] | None = None) -> FlatNetlist:
    """
    Adopt externally built CSR arrays as the netlist without re-indexing.

    Every invariant is validated; violations raise ``BundleValidationError``
    naming the offending index.
    """
    missing = [k for k in NETLIST_ARRAYS[:12] if k not in arrays]
    if missing:
        raise BundleValidationError(f"netlist bundle is missing arrays {missing}")
    a = {k: np.asarray(v) for k, v in arrays.items()}
    C = int(a["cell_lib"].size)
    P = int(a["pin_owner"].size)
    N = int(a["net_name"].size)

    for key, n in (("cell_name", C), ("pin_lib_pin", P), ("pin_net", P), ("pin_dir", P),
                   ("net_driver", N), ("net_pin_offsets", N + 1), ("cell_pin_offsets", C + 1)):
        if a[key].size != n:
            raise BundleValidationError(f"array '{key}' has length {a[key].size}, expected {n}")

    for key, index_key, total in (("net_pin_offsets", "net_pin_index", N), ("cell_pin_offsets", "cell_pin_index", C)):
        off = a[key].astype(np.int64)
        if off.size and off[0] != 0:
            raise BundleValidationError(f"CSR offsets '{key}' must start at 0")
        bad = np.flatnonzero(np.diff(off) < 0)
        if bad.size:
            raise BundleValidationError(f"CSR offsets '{key}' are not monotone at index {int(bad[0])}")
        if int(off[-1]) != a[index_key].size:
            raise BundleValidationError(f"CSR offsets '{key}' end at {int(off[-1])} but '{index_key}' has {a[index_key].size} entries")

    if names is None:
        names = [f"n{i}" for i in range(_max_name_id(a) + 1)]
    n_names = len(names)
    n_lib = len(lib.cells)

    bad = np.flatnonzero(a["cell_lib"] >= n_lib)
    if bad.size:
        raise BundleValidationError(f"cell {int(bad[0])} references library cell id {int(a['cell_lib'][bad[0]])} out of range")
    bad = np.flatnonzero(a["cell_name"] >= n_names)
    if bad.size:
        raise BundleValidationError(f"cell {int(bad[0])} has name id out of range")
    for p in range(P):
        owner = int(a["pin_owner"][p])
        net = int(a["pin_net"][p])
        if net != NO_ID and net >= N:
            raise BundleValidationError(f"pin {p} references net id {net} out of range")
        if owner == PORT:
            if int(a["pin_lib_pin"][p]) >= n_names:
                raise BundleValidationError(f"port pin {p} has name id out of range")
        elif owner >= C:
            raise BundleValidationError(f"pin {p} references cell id {owner} out of range")
        elif int(a["pin_lib_pin"][p]) >= len(lib.cells[int(a["cell_lib"][owner])].pins):
            raise BundleValidationError(f"pin {p} references library pin {int(a['pin_lib_pin'][p])} out of range")
        if int(a["pin_dir"][p]) > DIR_INOUT:
            raise BundleValidationError(f"pin {p} has invalid direction code {int(a['pin_dir'][p])}")

    expected_off, expected_idx = csr_from_groups(a["pin_net"], N)
    if not (np.array_equal(expected_off, a["net_pin_offsets"]) and np.array_equal(expected_idx, a["net_pin_index"])):
        raise BundleValidationError("net→pin CSR is inconsistent with pin_net back-references")
    expected_off, expected_idx = csr_from_groups(a["pin_owner"], C)
    if not (np.array_equal(expected_off, a["cell_pin_offsets"]) and np.array_equal(expected_idx, a["cell_pin_index"])):
        raise BundleValidationError("cell→pin CSR is inconsistent with pin_owner")

    constants: dict[int, int] = {}
    if "const_pins" in a:
        for p, v in zip(a["const_pins"].tolist(), a.get("const_values", np.zeros(0, np.uint8)).tolist()):
            if p >= P or v not in (0, 1):
                raise BundleValidationError(f"constant entry for pin {p} is invalid")
            constants[int(p)] = int(v)

    netlist = FlatNetlist(
        lib=lib,
        names=list(names),
        cell_lib=a["cell_lib"].astype(np.uint32),
        cell_name=a["cell_name"].astype(np.uint32),
        pin_owner=a["pin_owner"].astype(np.uint32),
        pin_lib_pin=a["pin_lib_pin"].astype(np.uint32),
        pin_net=a["pin_net"].astype(np.uint32),
        pin_dir=a["pin_dir"].astype(np.uint8),
        net_name=a["net_name"].astype(np.uint32),
        net_driver=a["net_driver"].astype(np.uint32),
        net_pin_offsets=a["net_pin_offsets"].astype(np.uint32),
        net_pin_index=a["net_pin_index"].astype(np.uint32),
        cell_pin_offsets=a["cell_pin_offsets"].astype(np.uint32),
        cell_pin_index=a["cell_pin_index"].astype(np.uint32),
        constants=constants,
    )
    drivers = _find_drivers(netlist, BundleValidationError)
    if not np.array_equal(drivers, netlist.net_driver):
        bad_net = int(np.flatnonzero(drivers != netlist.net_driver)[0])
        raise BundleValidationError(f"net {bad_net} declares driver {int(netlist.net_driver[bad_net])}, "
                                    f"expected {int(drivers[bad_net])}")
    logger.info("Flat netlist ingested", extra={"cells": C, "pins": P, "nets": N})
    return netlist


def _max_name_id(a: dict[str, np.ndarray]) -> int:
    ids = [a["cell_name"], a["net_name"], a["pin_lib_pin"][a["pin_owner"] == PORT]]
    return max((int(x.max()) for x in ids if x.size), default=-1)
