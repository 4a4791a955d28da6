# tests/unit/test_bundles.py

import json

import numpy as np
import pytest

from ministra.bundles import (
    MANIFEST,
    read_bundle,
    read_manifest,
    read_netlist_bundle,
    read_rc_bundle,
    write_bundle,
    write_netlist_bundle,
    write_rc_bundle,
)
from ministra.exceptions import BundleValidationError, ManifestVersionError
from ministra.parasitics import annotate_spef
from ministra.schemas import FORMAT_VERSION
from ministra.spef import parse_spef

from .conftest import CHAIN_SPEF, CHAIN_V, PIPELINE_V


@pytest.fixture
def arrays():
    return {
        "ids": np.array([3, 1, 2], dtype=np.uint32),
        "values": np.array([0.5, -1.0]),
        "flags": np.array([True, False, True]),
    }


class TestGenericBundle:
    def test_write_then_read(self, tmp_path, arrays):
        manifest = write_bundle(tmp_path / "b", "timing", arrays, counts={"pins": 3}, names=["a"])

        loaded, values = read_bundle(tmp_path / "b", kind="timing")

        assert loaded == manifest
        assert loaded.units == {"time": "ps", "capacitance": "fF", "resistance": "kOhm"}
        assert {k: e.dtype for k, e in loaded.arrays.items()} == {"ids": "<u4", "values": "<f8", "flags": "u1"}
        assert values["ids"].tolist() == [3, 1, 2]
        assert values["values"].tolist() == [0.5, -1.0]
        assert values["flags"].tolist() == [1, 0, 1]

    def test_files_are_raw_little_endian(self, tmp_path, arrays):
        write_bundle(tmp_path, "timing", arrays)

        assert (tmp_path / "ids.bin").read_bytes() == b"\x03\x00\x00\x00\x01\x00\x00\x00\x02\x00\x00\x00"
        assert json.loads((tmp_path / MANIFEST).read_text())["format_version"] == FORMAT_VERSION

    def test_unsupported_dtype(self, tmp_path):
        with pytest.raises(BundleValidationError, match="cannot be stored"):
            write_bundle(tmp_path, "timing", {"text": np.array(["a"])})

    def test_wrong_kind(self, tmp_path, arrays):
        write_bundle(tmp_path, "timing", arrays)

        with pytest.raises(BundleValidationError, match="expected a rc bundle, found timing"):
            read_bundle(tmp_path, kind="rc")


class TestManifestChecks:
    def test_missing_manifest(self, tmp_path):
        with pytest.raises(BundleValidationError, match="manifest not found"):
            read_manifest(tmp_path)

    def test_invalid_json(self, tmp_path):
        (tmp_path / MANIFEST).write_text("{nope")

        with pytest.raises(BundleValidationError, match="not valid JSON"):
            read_manifest(tmp_path)

    def test_version_is_checked_first(self, tmp_path, arrays):
        write_bundle(tmp_path, "timing", arrays)
        raw = json.loads((tmp_path / MANIFEST).read_text())
        raw["format_version"] = "9.9"
        raw["kind"] = "bogus"
        (tmp_path / MANIFEST).write_text(json.dumps(raw))

        with pytest.raises(ManifestVersionError) as exc_info:
            read_manifest(tmp_path)

        assert exc_info.value.error_code == "MANIFEST_VERSION_MISMATCH"
        assert exc_info.value.context["found"] == "9.9"

    @pytest.mark.parametrize(
        "patch, message",
        [
            ({"kind": "bogus"}, "invalid bundle manifest"),
            ({"arrays": {"x": {"file": "../x.bin", "dtype": "<u4", "length": 1}}}, "invalid bundle manifest"),
            ({"arrays": {"x": {"file": "x.bin", "dtype": "<i8", "length": 1}}}, "invalid bundle manifest"),
        ],
    )
    def test_schema_violations(self, tmp_path, arrays, patch, message):
        write_bundle(tmp_path, "timing", arrays)
        raw = json.loads((tmp_path / MANIFEST).read_text()) | patch
        (tmp_path / MANIFEST).write_text(json.dumps(raw))

        with pytest.raises(BundleValidationError, match=message):
            read_manifest(tmp_path)

    def test_length_mismatch(self, tmp_path, arrays):
        write_bundle(tmp_path, "timing", arrays)
        (tmp_path / "ids.bin").write_bytes(b"\x00" * 8)

        with pytest.raises(BundleValidationError, match="holds 2 values, manifest says 3"):
            read_bundle(tmp_path)

    def test_missing_array_file(self, tmp_path, arrays):
        write_bundle(tmp_path, "timing", arrays)
        (tmp_path / "values.bin").unlink()

        with pytest.raises(BundleValidationError, match="cannot read bundle array 'values'"):
            read_bundle(tmp_path)


class TestTypedBundles:
    def test_netlist_round_trip(self, tmp_path, lib, make_netlist):
        netlist = make_netlist(PIPELINE_V)

        manifest = write_netlist_bundle(tmp_path, netlist)
        loaded = read_netlist_bundle(tmp_path, lib)

        assert manifest.counts == {"cells": 3, "pins": netlist.num_pins, "nets": netlist.num_nets}
        assert loaded.equals(netlist)
        assert loaded.pin_by_name == netlist.pin_by_name

    def test_rc_round_trip(self, tmp_path, make_netlist):
        netlist = make_netlist(CHAIN_V)
        store = annotate_spef(parse_spef(CHAIN_SPEF.encode()), netlist)

        write_rc_bundle(tmp_path, store, netlist)

        assert read_rc_bundle(tmp_path, netlist).equals(store)

    def test_netlist_reader_refuses_rc_bundle(self, tmp_path, lib, make_netlist):
        netlist = make_netlist(CHAIN_V)
        write_rc_bundle(tmp_path, annotate_spef(parse_spef(CHAIN_SPEF.encode()), netlist), netlist)

        with pytest.raises(BundleValidationError, match="expected a netlist bundle"):
            read_netlist_bundle(tmp_path, lib)
