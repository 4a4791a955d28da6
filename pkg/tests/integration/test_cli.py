# tests/integration/test_cli.py

"""
End-to-end runs of the ``ministra`` console entry point against golden files.
"""

from pathlib import Path

import numpy as np
import pytest

from ministra.app import main

from ..unit.conftest import CHAIN_SDC, CHAIN_SPEF, CHAIN_V, DIAMOND_SDC, DIAMOND_V, LIB_TEXT, PIPELINE_SDC, PIPELINE_V

GOLDEN = Path(__file__).parent / "golden"

pytestmark = pytest.mark.integration

DIAMOND_FALSE_SDC = DIAMOND_SDC + "set_false_path -through [get_pins bB/Y]\n"
MULTICYCLE_SDC = PIPELINE_SDC + "set_multicycle_path 2 -setup -to [get_pins r2/D]\n"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    for name, text in (("test.lib", LIB_TEXT), ("pipe.v", PIPELINE_V), ("pipe.sdc", PIPELINE_SDC),
                       ("chain.v", CHAIN_V), ("chain.spef", CHAIN_SPEF), ("chain.sdc", CHAIN_SDC),
                       ("diamond.v", DIAMOND_V), ("diamond.sdc", DIAMOND_FALSE_SDC),
                       ("mcp.sdc", MULTICYCLE_SDC)):
        (tmp_path / name).write_text(text)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _pipe(*extra: str) -> list[str]:
    return ["--lib", "test.lib", "--verilog", "pipe.v", "--sdc", "pipe.sdc", *extra]


def test_pipeline_outputs_match_golden(workdir, capsys):
    code = main(_pipe("--write-sdf", "pipe.sdf", "--slack-csv", "slack.csv"))

    assert code == 0
    assert capsys.readouterr().out == (GOLDEN / "pipe_summary.txt").read_text()
    assert (workdir / "slack.csv").read_text() == (GOLDEN / "pipe_slack.csv").read_text()
    assert (workdir / "pipe.sdf").read_text() == (GOLDEN / "pipe.sdf").read_text()


# Summary and report goldens, worked out from the scalar test library:
#
# chain: in -> u1 (INV 10/20) -> u2 (INV 10/20) -> out, virtual clk 100, io delays 0.
#   Both edges arrive at 30, so setup 100 - 30 = 70 and hold 30 - 0 = 30. The
#   rise-launched path wins the tie: in r, u1/Y f at 20, u2/Y r at 30.
# diamond: false path through bB/Y leaves in -> bA (1) -> g (2) -> out.
#   Arrival 3 against period 10 gives setup 7 and hold 3.
# mcp: the pipeline with a two-cycle setup multicycle into r2/D.
#   r2/D setup moves to 200: min(200 - 3 - 26, 200 - 4 - 35) = 161; out stays
#   100 - 10 - 16 = 74, so setup WNS is 74. The hold edge follows to 100:
#   min(26 - 101, 35 - 102) = -75 on the r1/Q fall, u1/Y rise path. Next worst
#   hold is in -> r1/D: 5 - 2 = 3 on the fall edge.
@pytest.mark.parametrize(
    "netlist, sdc, report_args, golden, sdf_golden",
    [
        ("chain.v", "chain.sdc", [], "chain_report.txt", "chain.sdf"),
        ("diamond.v", "diamond.sdc", [], "diamond_report.txt", "diamond.sdf"),
        ("pipe.v", "mcp.sdc", ["--min", "-k", "2"], "mcp_report.txt", "pipe.sdf"),
    ],
)
def test_summary_report_and_sdf_match_golden(workdir, capsys, netlist, sdc, report_args, golden, sdf_golden):
    code = main(["--lib", "test.lib", "--verilog", netlist, "--sdc", sdc, "--report-timing", *report_args,
                 "--write-sdf", "out.sdf"])

    assert code == 0
    assert capsys.readouterr().out == (GOLDEN / golden).read_text()
    assert (workdir / "out.sdf").read_text() == (GOLDEN / sdf_golden).read_text()


def test_written_sdf_reads_back_to_the_same_timing(workdir, capsys):
    assert main(_pipe("--write-sdf", "first.sdf", "--slack-csv", "first.csv")) == 0
    assert main(_pipe("--sdf-in", "first.sdf", "--write-sdf", "second.sdf", "--slack-csv", "second.csv")) == 0

    assert (workdir / "second.sdf").read_text() == (workdir / "first.sdf").read_text()
    assert (workdir / "second.csv").read_text() == (workdir / "first.csv").read_text()


@pytest.mark.parametrize("model", ["elmore", "arnoldi:3"])
def test_thread_count_does_not_change_outputs(workdir, capsys, model):
    base = ["--lib", "test.lib", "--verilog", "chain.v", "--spef", "chain.spef", "--model", model]
    outputs = []
    for threads in ("1", "4"):
        sdf = workdir / f"t{threads}.sdf"
        assert main([*base, "--threads", threads, "--write-sdf", str(sdf)]) == 0
        outputs.append((capsys.readouterr().out, sdf.read_text()))

    assert outputs[0] == outputs[1]


def test_bundles_round_trip_through_the_cli(workdir, capsys):
    assert main(["--lib", "test.lib", "--verilog", "chain.v", "--spef", "chain.spef", "--write-sdf", "a.sdf",
                 "--write-netlist-bundle", "nl", "--write-rc-bundle", "rc"]) == 0
    assert main(["--lib", "test.lib", "--netlist-bundle", "nl", "--rc-bundle", "rc", "--write-sdf", "b.sdf"]) == 0

    first, second = (workdir / "a.sdf").read_text(), (workdir / "b.sdf").read_text()
    # the design name comes from the netlist source
    assert first.replace('"chain"', '"nl"') == second


def test_report_and_arrays(workdir, capsys):
    assert main(_pipe("--report-timing", "-k", "3", "--export-arrays", "arrays")) == 0

    out = capsys.readouterr().out
    assert out.count("Startpoint: ") == 3
    assert out.index("Endpoint: r2/D") < out.index("Endpoint: out") < out.index("Endpoint: r1/D")
    slack = np.fromfile(workdir / "arrays" / "path_slack.bin", dtype="<f8")
    assert slack.tolist() == [61.0, 74.0, 91.0]


@pytest.mark.parametrize(
    "argv, code",
    [
        (["--verilog", "pipe.v"], 1),
        (["--lib", "test.lib", "--verilog", "nope.v"], 1),
        (["--lib", "test.lib", "--verilog", "pipe.v", "--sdc", "bad.sdc"], 3),
        (["--lib", "test.lib", "--verilog", "broken.v"], 2),
    ],
)
def test_failures_exit_with_one_line_diagnostic(workdir, capsys, argv, code):
    (workdir / "bad.sdc").write_text("set_false_path -to [get_pins nope/D]\n")
    (workdir / "broken.v").write_text("module m (a);\n  input a\n")

    assert main(argv) == code

    err_lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("ERROR")]
    assert len(err_lines) == 1
    assert err_lines[0].startswith(f"ERROR {code}: ")


def _random_design(rng: np.random.Generator, size: int) -> str:
    """A random combinational DAG between two registers per input."""
    lines = ["module rnd (clk, in);", "  input clk, in;"]
    signals = ["q0"]
    lines.append("  DFF r0 (.D(in), .CK(clk), .Q(q0));")
    for i in range(size):
        kind = rng.choice(["INV", "BUF1", "BUF5", "AND2"])
        a = signals[int(rng.integers(len(signals)))]
        if kind == "AND2":
            b = signals[int(rng.integers(len(signals)))]
            lines.append(f"  AND2 g{i} (.A({a}), .B({b}), .Y(w{i}));")
        else:
            lines.append(f"  {kind} g{i} (.A({a}), .Y(w{i}));")
        signals.append(f"w{i}")
    for j, s in enumerate(signals[-3:]):
        lines.append(f"  DFF c{j} (.D({s}), .CK(clk));")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_random_designs_are_thread_independent(workdir, capsys, seed):
    rng = np.random.default_rng(seed)
    (workdir / "rnd.v").write_text(_random_design(rng, 40))
    (workdir / "rnd.sdc").write_text("create_clock -period 50 [get_ports clk]\nset_input_delay 0 -clock clk [get_ports in]\n")
    results = []
    for threads in ("1", "3"):
        csv = workdir / f"s{threads}.csv"
        assert main(["--lib", "test.lib", "--verilog", "rnd.v", "--sdc", "rnd.sdc", "--threads", threads,
                     "--slack-csv", str(csv)]) == 0
        results.append(csv.read_text())

    assert results[0] == results[1]
    rows = results[0].splitlines()[1:]
    assert [r.split(",")[0] for r in rows] == ["r0/D", "c0/D", "c1/D", "c2/D"]
