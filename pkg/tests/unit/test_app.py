# tests/unit/test_app.py

import io

import numpy as np
import pytest

from ministra import app
from ministra.app import SERVICE_NAME, build_parser, main, netlist_design_name, parse_args, run
from ministra.exceptions import UsageError
from ministra.schemas import ReportOptions, SteinerOptions

from .conftest import CHAIN_SDC, CHAIN_SPEF, CHAIN_V, LIB_TEXT, PIPELINE_SDC, PIPELINE_V


@pytest.fixture
def files(tmp_path):
    """Writes the test library and both designs; returns their paths."""
    paths = {
        "lib": tmp_path / "test.lib",
        "pipe_v": tmp_path / "pipe.v",
        "pipe_sdc": tmp_path / "pipe.sdc",
        "chain_v": tmp_path / "chain.v",
        "chain_sdc": tmp_path / "chain.sdc",
        "chain_spef": tmp_path / "chain.spef",
    }
    for key, text in (("lib", LIB_TEXT), ("pipe_v", PIPELINE_V), ("pipe_sdc", PIPELINE_SDC),
                      ("chain_v", CHAIN_V), ("chain_sdc", CHAIN_SDC), ("chain_spef", CHAIN_SPEF)):
        paths[key].write_text(text)
    return paths


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setenv("MINISTRA_THREADS", "1")
    monkeypatch.delenv("MINISTRA_LOG", raising=False)


def _pipe_args(files, *extra):
    return ["--lib", str(files["lib"]), "--verilog", str(files["pipe_v"]), "--sdc", str(files["pipe_sdc"]), *extra]


def test_service_name():
    assert SERVICE_NAME == "ministra-cli"
    assert app.logger.service == SERVICE_NAME


class TestParseArgs:
    def test_minimal(self, files):
        config = parse_args(["--lib", str(files["lib"]), "--verilog", str(files["pipe_v"])])

        assert config.libs == [files["lib"]]
        assert config.verilog == files["pipe_v"]
        assert (config.model, config.arnoldi_order, config.threads) == ("elmore", None, 1)
        assert config.report_timing is None

    def test_threads_default_comes_from_environment(self, files, monkeypatch):
        monkeypatch.setenv("MINISTRA_THREADS", "6")

        assert parse_args(_pipe_args(files)).threads == 6
        assert parse_args(_pipe_args(files, "--threads", "2")).threads == 2

    def test_libs_accumulate(self, files):
        config = parse_args(_pipe_args(files, "--lib", "a.lib", "b.lib.gz"))

        assert [p.name for p in config.libs] == ["test.lib", "a.lib", "b.lib.gz"]

    @pytest.mark.parametrize("text, model, order", [("elmore", "elmore", None), ("arnoldi", "arnoldi", None),
                                                    ("arnoldi:6", "arnoldi", 6)])
    def test_model(self, files, text, model, order):
        config = parse_args(_pipe_args(files, "--model", text))

        assert (config.model, config.arnoldi_order) == (model, order)

    def test_report_options(self, files):
        config = parse_args(_pipe_args(files, "--report-timing", "-k", "3", "--nworst", "2", "--min", "--slack-lt", "5"))

        assert config.report_timing == ReportOptions(k=3, nworst=2, slack_lt=5.0, mode="hold")

    def test_steiner_options(self, files, tmp_path):
        config = parse_args(_pipe_args(files, "--steiner", str(tmp_path / "pos.txt"), "--unit-res-x", "0.5",
                                       "--unit-cap-y", "2"))

        assert config.steiner == SteinerOptions(positions=tmp_path / "pos.txt", unit_res_x=0.5, unit_cap_y=2.0)

    @pytest.mark.parametrize(
        "extra, message",
        [
            (["--model", "spice"], "--model must be elmore or arnoldi"),
            (["--model", "elmore:3"], "--model must be elmore or arnoldi"),
            (["--model", "arnoldi:x"], "Arnoldi order must be an integer"),
            (["--model", "arnoldi:0"], "greater than or equal to 1"),
            (["--threads", "0"], "greater than or equal to 1"),
            (["--max", "--min"], "not allowed with argument"),
            (["--frobnicate"], "unrecognized arguments"),
            (["--netlist-bundle", "nl"], "exactly one of --verilog or --netlist-bundle"),
            (["--spef", "a.spef", "--rc-bundle", "rc"], "at most one of --spef, --rc-bundle or --steiner"),
            (["-k", "0", "--report-timing"], "greater than or equal to 1"),
        ],
    )
    def test_usage_errors(self, files, extra, message):
        with pytest.raises(UsageError, match=message):
            parse_args(_pipe_args(files, *extra))

    def test_library_is_required(self, files):
        with pytest.raises(UsageError):
            parse_args(["--verilog", str(files["pipe_v"])])

    def test_parser_has_grouped_help(self):
        text = build_parser().format_help()

        for heading in ("inputs:", "engine:", "outputs:"):
            assert heading in text


class TestRun:
    def test_summary_goes_to_out(self, files):
        out = io.StringIO()

        result = run(parse_args(_pipe_args(files)), out)

        assert out.getvalue() == result.summary
        assert result.summary.splitlines()[1].split() == ["setup", "*", "61.000", "0.000", "3"]
        assert result.paths is None

    def test_report_timing(self, files):
        out = io.StringIO()

        result = run(parse_args(_pipe_args(files, "--report-timing", "-k", "2")), out)

        assert len(result.paths) == 2
        assert result.report.startswith("Startpoint: ")
        assert "Endpoint: r2/D" in result.report
        assert "slack (MET)" in result.report
        assert out.getvalue() == result.summary + "\n" + result.report

    def test_counters_are_collected(self, files):
        result = run(parse_args(_pipe_args(files)), io.StringIO())

        assert set(result.counters) == {
            "skipped_liberty_groups", "sdc_warnings", "broken_loops", "missing_tables",
            "elmore_fallbacks", "sdf_unmatched", "tag_merges", "unconstrained_endpoints",
        }
        assert result.counters["tag_merges"] == 0
        assert result.counters["broken_loops"] == 0
        assert result.counters["unconstrained_endpoints"] == 0

    def test_counters_report_degraded_inputs(self, files, tmp_path, mocker):
        sdc = tmp_path / "warn.sdc"
        sdc.write_text(files["pipe_sdc"].read_text() + "set_clock_uncertainty 5 [get_clocks clk]\n")
        sdf = tmp_path / "ghost.sdf"
        sdf.write_text(
            '(DELAYFILE (SDFVERSION "3.0") (TIMESCALE 1ps)\n'
            '  (CELL (CELLTYPE "INV") (INSTANCE ghost) (DELAY (ABSOLUTE (IOPATH A Y (1) (1))))))\n'
        )
        baseline = run(parse_args(_pipe_args(files)), io.StringIO())
        info = mocker.patch.object(app.logger, "info")
        argv = ["--lib", str(files["lib"]), "--verilog", str(files["pipe_v"]), "--sdc", str(sdc), "--sdf-in", str(sdf)]

        result = run(parse_args(argv), io.StringIO())

        assert result.counters["sdc_warnings"] == baseline.counters["sdc_warnings"] + 1
        assert result.counters["sdf_unmatched"] == 1
        (finished,) = [c for c in info.call_args_list if c.args[0] == "Run finished"]
        assert finished.kwargs["extra"]["sdf_unmatched"] == 1
        assert finished.kwargs["extra"]["endpoints"] == 3

    def test_output_files(self, files, tmp_path):
        outputs = {
            "--write-sdf": tmp_path / "out.sdf",
            "--slack-csv": tmp_path / "slack.csv",
            "--export-arrays": tmp_path / "arrays",
            "--write-netlist-bundle": tmp_path / "nl",
        }
        argv = _pipe_args(files, "--report-timing", *[x for pair in outputs.items() for x in map(str, pair)])

        run(parse_args(argv), io.StringIO())

        assert outputs["--write-sdf"].read_text().startswith('(DELAYFILE\n  (SDFVERSION "3.0")\n  (DESIGN "pipe")')
        assert outputs["--slack-csv"].read_text().splitlines()[0] == "endpoint,setup_slack,hold_slack"
        assert (outputs["--export-arrays"] / "manifest.json").exists()
        assert (outputs["--export-arrays"] / "path_offsets.bin").exists()
        assert (outputs["--write-netlist-bundle"] / "manifest.json").exists()

    def test_netlist_bundle_input_matches_verilog(self, files, tmp_path):
        first = run(parse_args(_pipe_args(files, "--write-netlist-bundle", str(tmp_path / "nl"))), io.StringIO())

        second = run(parse_args(["--lib", str(files["lib"]), "--netlist-bundle", str(tmp_path / "nl"),
                                 "--sdc", str(files["pipe_sdc"])]), io.StringIO())

        assert second.summary == first.summary
        assert second.netlist.equals(first.netlist)

    def test_rc_bundle_reproduces_spef_delays(self, files, tmp_path):
        base = ["--lib", str(files["lib"]), "--verilog", str(files["chain_v"]), "--sdc", str(files["chain_sdc"])]
        spef = run(parse_args([*base, "--spef", str(files["chain_spef"]), "--write-rc-bundle", str(tmp_path / "rc")]),
                   io.StringIO())

        bundle = run(parse_args([*base, "--rc-bundle", str(tmp_path / "rc")]), io.StringIO())

        np.testing.assert_array_equal(bundle.arcs.delay, spef.arcs.delay)
        assert np.isclose(spef.arcs.delay, 5.8).any()

    def test_arnoldi_model(self, files):
        argv = ["--lib", str(files["lib"]), "--verilog", str(files["chain_v"]), "--spef", str(files["chain_spef"]),
                "--model", "arnoldi:2"]

        result = run(parse_args(argv), io.StringIO())

        assert result.arcs.model == "arnoldi"

    def test_steiner_wires(self, files, tmp_path):
        positions = tmp_path / "pos.txt"
        positions.write_text("in 0 0\nu1/A 1 0\nu1/Y 1 0\nu2/A 5 0\nu2/Y 5 0\nout 9 0\n")
        argv = ["--lib", str(files["lib"]), "--verilog", str(files["chain_v"]), "--steiner", str(positions),
                "--unit-res-x", "1", "--unit-cap-x", "1"]

        result = run(parse_args(argv), io.StringIO())
        graph, nl = result.graph, result.netlist
        wire = next(e for e in range(graph.num_edges)
                    if nl.pin_name(int(graph.edge_from[e])) == "u1/Y" and nl.pin_name(int(graph.edge_to[e])) == "u2/A")

        # 4 kOhm into 4 fF of wire plus the 1 fF pin
        assert result.arcs.delay[wire, 0, 1] == pytest.approx(4.0 * (2.0 + 1.0))

    def test_design_name(self, files, tmp_path):
        assert netlist_design_name(parse_args(_pipe_args(files))) == "pipe"
        assert netlist_design_name(parse_args(_pipe_args(files, "--top", "pipe"))) == "pipe"


class TestMain:
    def test_success(self, files, capsys):
        assert main(_pipe_args(files)) == 0

        assert capsys.readouterr().out.startswith("check")

    @pytest.mark.parametrize(
        "argv, code, message",
        [
            (["--bogus"], 1, "unrecognized arguments"),
            (["--lib", "missing.lib", "--verilog", "x.v"], 1, "missing.lib"),
        ],
    )
    def test_usage_failures(self, argv, code, message, capsys):
        assert main(argv) == code

        err = capsys.readouterr().err
        assert f"ERROR {code}: " in err
        assert message in err

    def test_parse_failure(self, files, tmp_path, capsys):
        bad = tmp_path / "bad.v"
        bad.write_text("module m (a); input a\nendmodule\n")

        assert main(["--lib", str(files["lib"]), "--verilog", str(bad)]) == 2
        assert "ERROR 2: " in capsys.readouterr().err

    def test_semantic_failure(self, files, tmp_path, capsys):
        sdc = tmp_path / "bad.sdc"
        sdc.write_text("create_clock -period 10 [get_ports nope]\n")

        assert main(["--lib", str(files["lib"]), "--verilog", str(files["pipe_v"]), "--sdc", str(sdc)]) == 3
        assert "ERROR 3: line 1: " in capsys.readouterr().err
