"""ministra: a static timing analysis engine usable as a library or a CLI."""

from .app import main, run
from .bundles import read_bundle, read_netlist_bundle, read_rc_bundle, write_bundle
from .case_analysis import apply_case_analysis
from .delaycalc import apply_sdf, compute_all_arcs
from .graph import build_graph, levelize
from .interconnect import arnoldi_delay, arnoldi_reduce, elmore
from .liberty import parse_liberty
from .netlist import elaborate, ingest_flat
from .parasitics import annotate_spef, build_steiner, ingest_flat_rc
from .path_exceptions import compile_exceptions
from .pathreport import PathQuery, PathSet, format_path_text, report_paths
from .propagation import (
    analyze,
    backpropagate_pin_slacks,
    compute_required_and_slack,
    propagate_arrivals,
    wns_tns,
)
from .reporting import export_arrays, write_sdf
from .sdc import eval_sdc
from .sdf import parse_sdf
from .spef import parse_spef
from .verilog import parse_verilog

__all__ = [
    "analyze",
    "annotate_spef",
    "apply_case_analysis",
    "apply_sdf",
    "arnoldi_delay",
    "arnoldi_reduce",
    "backpropagate_pin_slacks",
    "build_graph",
    "build_steiner",
    "compile_exceptions",
    "compute_all_arcs",
    "compute_required_and_slack",
    "elaborate",
    "elmore",
    "eval_sdc",
    "export_arrays",
    "format_path_text",
    "ingest_flat",
    "ingest_flat_rc",
    "levelize",
    "main",
    "parse_liberty",
    "parse_sdf",
    "parse_spef",
    "parse_verilog",
    "PathQuery",
    "PathSet",
    "propagate_arrivals",
    "read_bundle",
    "read_netlist_bundle",
    "read_rc_bundle",
    "report_paths",
    "run",
    "wns_tns",
    "write_bundle",
    "write_sdf",
]
