# src/ministra/app.py

"""
Command-line driver for the ministra timing engine.

This module owns the end-to-end pipeline and is responsible for:
1.  Configuring structured logging (AWS Lambda Powertools ``Logger`` on
    standard error) and copying that configuration onto the library loggers.
2.  Turning command-line arguments into a validated ``RunConfig``.
3.  Running parse -> elaborate/ingest -> constraints -> RC -> delay ->
    propagate -> reports, in that order.
4.  Mapping every failure onto an exit status and a one-line
    ``ERROR <code>: <message>`` diagnostic.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import pydantic
from aws_lambda_powertools import Logger
from aws_lambda_powertools.logging.utils import copy_config_to_registered_loggers

from .bundles import read_netlist_bundle, read_rc_bundle, write_netlist_bundle, write_rc_bundle
from .config import get_config
from .delaycalc import ArcTiming, compute_all_arcs
from .exceptions import MinistraError, UsageError, exit_code_for, get_error_context
from .graph import TimingGraph, build_graph
from .liberty import LibertyLibrary, parse_liberty
from .netlist import FlatNetlist, elaborate
from .parasitics import RcStore, SteinerConfig, annotate_spef, build_steiner_store, read_positions
from .pathreport import PathQuery, PathSet, format_path_text, report_paths
from .propagation import TimingState, analyze
from .reporting import export_arrays, slack_csv, timing_summary, write_sdf
from .schemas import ReportOptions, RunConfig, SteinerOptions
from .sdc import Constraints, eval_sdc
from .sdf import parse_sdf
from .sources import load_source
from .spef import parse_spef
from .verilog import parse_verilog

SERVICE_NAME = "ministra-cli"

logger = Logger(service=SERVICE_NAME, logger_handler=logging.StreamHandler(sys.stderr))


def configure_logging() -> None:
    level = get_config().log_level
    logger.setLevel(level)
    copy_config_to_registered_loggers(source_logger=logger, include={"ministra"}, log_level=level)


# --- Argument parsing ---


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="ministra", description="Static timing analysis")
    inputs = parser.add_argument_group("inputs")
    inputs.add_argument("--lib", dest="libs", action="extend", nargs="+", type=Path, default=[],
                        help="Liberty file(s), gzip allowed")
    inputs.add_argument("--verilog", type=Path)
    inputs.add_argument("--top")
    inputs.add_argument("--netlist-bundle", type=Path)
    inputs.add_argument("--spef", type=Path)
    inputs.add_argument("--rc-bundle", type=Path)
    inputs.add_argument("--steiner", type=Path, metavar="POSITIONS")
    for axis in ("x", "y"):
        inputs.add_argument(f"--unit-res-{axis}", type=float, default=0.0, help="kOhm per distance unit")
        inputs.add_argument(f"--unit-cap-{axis}", type=float, default=0.0, help="fF per distance unit")
    inputs.add_argument("--sdc", type=Path)
    inputs.add_argument("--sdf-in", type=Path)

    engine = parser.add_argument_group("engine")
    engine.add_argument("--model", default="elmore", metavar="elmore|arnoldi[:q]")
    engine.add_argument("--threads", type=int)

    outputs = parser.add_argument_group("outputs")
    outputs.add_argument("--write-sdf", type=Path)
    outputs.add_argument("--report-timing", action="store_true")
    outputs.add_argument("-k", type=int, default=1)
    outputs.add_argument("--nworst", type=int, default=1)
    outputs.add_argument("--slack-lt", type=float)
    check = outputs.add_mutually_exclusive_group()
    check.add_argument("--max", dest="mode", action="store_const", const="setup")
    check.add_argument("--min", dest="mode", action="store_const", const="hold")
    outputs.add_argument("--slack-csv", type=Path)
    outputs.add_argument("--export-arrays", type=Path)
    outputs.add_argument("--write-netlist-bundle", type=Path)
    outputs.add_argument("--write-rc-bundle", type=Path)
    return parser


def _parse_model(text: str) -> tuple[str, int | None]:
    name, _, order = text.partition(":")
    if name not in ("elmore", "arnoldi") or (order and name != "arnoldi"):
        raise UsageError(f"--model must be elmore or arnoldi[:q], not '{text}'")
    if not order:
        return name, None
    try:
        return name, int(order)
    except ValueError:
        raise UsageError(f"Arnoldi order must be an integer, not '{order}'") from None


def parse_args(argv: list[str] | None = None) -> RunConfig:
    """Validate command-line arguments into a ``RunConfig``; raises ``UsageError``."""
    args = build_parser().parse_args(argv)
    model, order = _parse_model(args.model)
    try:
        return RunConfig(
            libs=args.libs,
            verilog=args.verilog,
            top=args.top,
            netlist_bundle=args.netlist_bundle,
            spef=args.spef,
            rc_bundle=args.rc_bundle,
            steiner=SteinerOptions(
                positions=args.steiner,
                unit_res_x=args.unit_res_x,
                unit_res_y=args.unit_res_y,
                unit_cap_x=args.unit_cap_x,
                unit_cap_y=args.unit_cap_y,
            ) if args.steiner is not None else None,
            sdc=args.sdc,
            sdf_in=args.sdf_in,
            model=model,
            arnoldi_order=order,
            threads=args.threads if args.threads is not None else get_config().threads,
            write_sdf=args.write_sdf,
            report_timing=ReportOptions(
                k=args.k, nworst=args.nworst, slack_lt=args.slack_lt, mode=args.mode or "setup"
            ) if args.report_timing else None,
            slack_csv=args.slack_csv,
            export_arrays=args.export_arrays,
            write_netlist_bundle=args.write_netlist_bundle,
            write_rc_bundle=args.write_rc_bundle,
        )
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        raise UsageError(str(first.get("msg", e)), context={"errors": len(e.errors())}) from e


# --- Pipeline ---


@dataclass(eq=False)
class RunResult:
    netlist: FlatNetlist
    graph: TimingGraph
    arcs: ArcTiming
    state: TimingState
    summary: str
    paths: PathSet | None = None
    report: str = ""
    counters: dict[str, int] = field(default_factory=dict)


def _load_rc(config: RunConfig, netlist: FlatNetlist) -> RcStore | None:
    threads = config.threads
    if config.spef is not None:
        spef = parse_spef(config.spef, chunks=threads, threads=threads)
        return annotate_spef(spef, netlist, threads=threads)
    if config.rc_bundle is not None:
        return read_rc_bundle(config.rc_bundle, netlist)
    if config.steiner is not None:
        s = config.steiner
        positions = read_positions(s.positions, netlist)
        steiner = SteinerConfig(s.unit_res_x, s.unit_res_y, s.unit_cap_x, s.unit_cap_y)
        return build_steiner_store(netlist, positions, steiner, threads=threads)
    return None


def run(config: RunConfig, out: TextIO | None = None) -> RunResult:
    """Run the whole pipeline; the timing summary always goes to ``out``."""
    out = out or sys.stdout
    threads = config.threads
    logger.info("Run started", extra={"threads": threads, "model": config.model})

    lib = parse_liberty(config.libs, threads=threads)
    if config.verilog is not None:
        design = parse_verilog(config.verilog, chunks=threads, threads=threads)
        netlist = elaborate(design, lib, config.top)
    else:
        netlist = read_netlist_bundle(config.netlist_bundle, lib)

    if config.sdc is not None:
        src = load_source(config.sdc)
        constraints = eval_sdc(src.data.decode("utf-8", errors="replace"), netlist, lib, name=src.name)
    else:
        constraints = eval_sdc("", netlist, lib)

    rc = _load_rc(config, netlist)
    sdf = parse_sdf(config.sdf_in, chunks=threads, threads=threads) if config.sdf_in is not None else None

    graph = build_graph(netlist, constraints)
    arcs = compute_all_arcs(graph, rc, constraints, model=config.model, arnoldi_order=config.arnoldi_order,
                            sdf=sdf, threads=threads)
    state = analyze(graph, arcs, constraints, threads=threads)

    summary = timing_summary(state)
    out.write(summary)
    result = RunResult(netlist=netlist, graph=graph, arcs=arcs, state=state, summary=summary)

    if config.report_timing is not None:
        result.paths = report_paths(state, PathQuery.from_options(config.report_timing))
        blocks = [format_path_text(result.paths, i, netlist.pin_name) for i in range(len(result.paths))]
        result.report = "\n".join(blocks)
        if result.report:
            out.write("\n" + result.report)
    if config.write_sdf is not None:
        config.write_sdf.write_text(write_sdf(arcs, graph, design=netlist_design_name(config)))
    if config.slack_csv is not None:
        config.slack_csv.write_text(slack_csv(state))
    if config.export_arrays is not None:
        export_arrays(state, config.export_arrays, result.paths)
    if config.write_netlist_bundle is not None:
        write_netlist_bundle(config.write_netlist_bundle, netlist)
    if config.write_rc_bundle is not None and rc is not None:
        write_rc_bundle(config.write_rc_bundle, rc, netlist)

    result.counters = run_counters(lib, constraints, graph, arcs, state)
    logger.info("Run finished", extra={"endpoints": len(state.constrained), **result.counters})
    return result


def run_counters(lib: LibertyLibrary, constraints: Constraints, graph: TimingGraph, arcs: ArcTiming,
                 state: TimingState) -> dict[str, int]:
    """Degraded-input counts gathered from every stage for the closing log line."""
    return {
        "skipped_liberty_groups": lib.skipped_groups,
        "sdc_warnings": constraints.warnings,
        "broken_loops": len(graph.broken_edges),
        "missing_tables": arcs.missing_tables,
        "elmore_fallbacks": arcs.fallbacks,
        "sdf_unmatched": arcs.sdf_unmatched,
        "tag_merges": state.tag_merges,
        "unconstrained_endpoints": sum(ep.pin not in state.constrained for ep in state.endpoints),
    }


def netlist_design_name(config: RunConfig) -> str:
    if config.top:
        return config.top
    source = config.verilog or config.netlist_bundle
    return source.stem if source is not None else ""


def main(argv: list[str] | None = None) -> int:
    """Console entry point; returns the process exit status."""
    try:
        configure_logging()
        config = parse_args(argv)
        run(config)
        return 0
    except MinistraError as e:
        logger.debug("Run failed", extra=get_error_context(e))
        print(f"ERROR {e.exit_code}: {e.message}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        error = UsageError(f"{e.filename or 'file'}: {e.strerror or e}")
        print(f"ERROR {error.exit_code}: {error.message}", file=sys.stderr)
        return error.exit_code
    except Exception as e:
        logger.exception("Unexpected failure", extra=get_error_context(e))
        code = exit_code_for(e)
        print(f"ERROR {code}: {e}", file=sys.stderr)
        return code
