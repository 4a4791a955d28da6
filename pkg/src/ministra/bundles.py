# src/ministra/bundles.py

"""
On-disk flat bundles: a directory with ``manifest.json`` and one raw
little-endian ``<name>.bin`` file per array.

The same reader and writer serve netlist, RC and timing bundles; the
manifest's ``kind`` says which. Readers check the format version before
touching any array file.
"""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .exceptions import BundleValidationError, ManifestVersionError
from .liberty import LibertyLibrary
from .netlist import FlatNetlist, ingest_flat
from .parasitics import RcStore, ingest_flat_rc
from .schemas import FORMAT_VERSION, ArrayEntry, ArrayManifest

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
UNITS = {"time": "ps", "capacitance": "fF", "resistance": "kOhm"}

_DTYPES = {"u": "<u4", "i": "<u4", "b": "u1", "f": "<f8"}


def _storage_dtype(a: np.ndarray) -> str:
    if a.dtype == np.uint8:
        return "u1"
    try:
        return _DTYPES[a.dtype.kind]
    except KeyError:
        raise BundleValidationError(f"array dtype {a.dtype} cannot be stored in a bundle") from None


def write_bundle(directory: str | Path, kind: str, arrays: dict[str, np.ndarray],
                 counts: dict[str, int] | None = None, names: list[str] | None = None) -> ArrayManifest:
    """Write ``arrays`` and their manifest into ``directory`` (created if needed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries: dict[str, ArrayEntry] = {}
    for name, values in arrays.items():
        values = np.asarray(values)
        dtype = _storage_dtype(values)
        values.astype(dtype, copy=False).ravel().tofile(directory / f"{name}.bin")
        entries[name] = ArrayEntry(file=f"{name}.bin", dtype=dtype, length=int(values.size))
    manifest = ArrayManifest(
        format_version=FORMAT_VERSION,
        kind=kind,
        units=dict(UNITS),
        counts=dict(counts or {}),
        arrays=entries,
        names=names,
    )
    (directory / MANIFEST).write_text(manifest.model_dump_json(indent=2) + "\n")
    logger.debug("Bundle written", extra={"path": str(directory), "kind": kind, "arrays": len(entries)})
    return manifest


def read_manifest(directory: str | Path) -> ArrayManifest:
    path = Path(directory) / MANIFEST
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise BundleValidationError(f"bundle manifest not found: {path}", context={"path": str(path)}) from None
    except json.JSONDecodeError as e:
        raise BundleValidationError(f"bundle manifest is not valid JSON: {e}", context={"path": str(path)}) from e
    found = raw.get("format_version") if isinstance(raw, dict) else None
    if found != FORMAT_VERSION:
        raise ManifestVersionError(str(found), FORMAT_VERSION, context={"path": str(path)})
    try:
        return ArrayManifest.model_validate(raw)
    except ValidationError as e:
        raise BundleValidationError(f"invalid bundle manifest: {e}", context={"path": str(path)}) from e


def read_bundle(directory: str | Path, kind: str | None = None) -> tuple[ArrayManifest, dict[str, np.ndarray]]:
    """Load every array listed in the manifest, checking kind and lengths."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    if kind is not None and manifest.kind != kind:
        raise BundleValidationError(
            f"expected a {kind} bundle, found {manifest.kind}", context={"path": str(directory)}
        )
    arrays: dict[str, np.ndarray] = {}
    for name, entry in manifest.arrays.items():
        path = directory / entry.file
        try:
            values = np.fromfile(path, dtype=entry.dtype)
        except OSError as e:
            raise BundleValidationError(f"cannot read bundle array {name!r}: {e}", context={"path": str(path)}) from e
        if values.size != entry.length:
            raise BundleValidationError(
                f"bundle array {name!r} holds {values.size} values, manifest says {entry.length}",
                context={"path": str(path)},
            )
        arrays[name] = values
    return manifest, arrays


# --- Typed helpers ---


def write_netlist_bundle(directory: str | Path, netlist: FlatNetlist) -> ArrayManifest:
    counts = {"cells": netlist.num_cells, "pins": netlist.num_pins, "nets": netlist.num_nets}
    return write_bundle(directory, "netlist", netlist.to_arrays(), counts=counts, names=list(netlist.names))


def read_netlist_bundle(directory: str | Path, lib: LibertyLibrary) -> FlatNetlist:
    manifest, arrays = read_bundle(directory, kind="netlist")
    return ingest_flat(arrays, lib, names=manifest.names)


def write_rc_bundle(directory: str | Path, store: RcStore, netlist: FlatNetlist) -> ArrayManifest:
    return write_bundle(directory, "rc", store.to_arrays(netlist.num_nets), counts={"nets": netlist.num_nets})


def read_rc_bundle(directory: str | Path, netlist: FlatNetlist) -> RcStore:
    _, arrays = read_bundle(directory, kind="rc")
    return ingest_flat_rc(arrays, netlist)
