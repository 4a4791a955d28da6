# tests/unit/test_pathreport.py

import math

import numpy as np
import pytest

from ministra.propagation import EARLY, LATE, wns_tns
from ministra.pathreport import PathQuery, format_path_text, report_paths
from ministra.schemas import ReportOptions
from ministra.sdc import NodeSet

from .conftest import DIAMOND_SDC, DIAMOND_V, PIPELINE_SDC, PIPELINE_V
from .test_properties import _random_dag, _random_sequential


def exhaustive_slacks(state, mode: str) -> dict[tuple[int, ...], float]:
    """Worst slack of every startpoint-to-endpoint pin sequence, by plain DFS."""
    graph = state.graph
    propagating = graph.propagating()
    registers = state.clocks.register_clock_pins
    column = LATE if mode == "setup" else EARLY
    worst: dict[tuple[int, ...], float] = {}

    def walk(pins, tag, edge, arrival):
        u = pins[-1]
        if u in state.endpoint_at and len(pins) > 1:
            required = float(state.requirement(u, tag, mode).required[edge])
            slack = required - arrival if mode == "setup" else arrival - required
            if not math.isinf(slack):
                worst[pins] = min(worst.get(pins, math.inf), slack)
        if u in registers and len(pins) > 1:
            return
        for e in graph.fanout(u):
            e = int(e)
            v = int(graph.edge_to[e])
            if not propagating[e] or v in registers:
                continue
            for out_edge in (0, 1):
                if edge in graph.input_edges(e, out_edge):
                    step = float(state.arcs.delay[e, out_edge, column])
                    walk((*pins, v), state.advance(tag, v), out_edge, arrival + step)

    for start, tags in state.seeds.items():
        for tag, a in tags.items():
            for edge in (0, 1):
                arrival = float(a[edge, column])
                if not math.isinf(arrival):
                    walk((start,), tag, edge, arrival)
    return worst


class TestReportPaths:
    def test_diamond_worst_paths_in_order(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)

        paths = report_paths(t.state, PathQuery(k=2, nworst=2))

        assert len(paths) == 2
        assert paths.slack.tolist() == pytest.approx([3.0, 7.0])
        names = [[t.netlist.pin_name(p) for p in paths.path_pins(i)] for i in range(2)]
        assert names[0] == ["in", "bB/A", "bB/Y", "g/B", "g/Y", "out"]
        assert names[1] == ["in", "bA/A", "bA/Y", "g/A", "g/Y", "out"]

    def test_nworst_limits_paths_per_endpoint(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)

        paths = report_paths(t.state, PathQuery(k=5, nworst=1))

        assert len(paths) == 1
        assert float(paths.slack[0]) == pytest.approx(3.0)

    def test_arrival_and_increments(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)

        paths = report_paths(t.state, PathQuery(k=1))
        span = paths.span(0)

        assert paths.incr[span].tolist() == pytest.approx([0.0, 0.0, 5.0, 0.0, 2.0, 0.0])
        assert paths.arrival[span][-1] == pytest.approx(7.0)
        assert paths.clock_name(int(paths.capture_clock[0])) == "clk"
        assert paths.offsets.dtype == np.uint32

    def test_false_path_is_never_reported(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC + "set_false_path -through [get_pins bB/Y]\n")

        paths = report_paths(t.state, PathQuery(k=None, nworst=None))

        assert paths.slack.tolist() == pytest.approx([7.0])

    def test_slack_threshold(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)

        paths = report_paths(t.state, PathQuery(k=None, nworst=None, slack_lt=5.0))

        assert paths.slack.tolist() == pytest.approx([3.0])

    def test_to_filter(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)
        to = NodeSet(pins=frozenset({t.pin("out")}))

        paths = report_paths(t.state, PathQuery(k=None, nworst=None, to=to))

        assert len(paths) == 1
        assert t.netlist.pin_name(int(paths.endpoint[0])) == "out"
        assert float(paths.slack[0]) == pytest.approx(74.0)

    def test_from_filter(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)
        from_ = NodeSet(pins=frozenset({t.pin("in")}))

        paths = report_paths(t.state, PathQuery(k=None, nworst=None, from_=from_))

        assert [t.netlist.pin_name(p) for p in paths.path_pins(0)] == ["in", "r1/D"]

    def test_hold_mode(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        paths = report_paths(t.state, PathQuery(k=3, nworst=1, mode="hold"))

        assert paths.slack.tolist() == pytest.approx([3.0, 25.0, 25.0])

    def test_from_options(self):
        query = PathQuery.from_options(ReportOptions(k=4, nworst=2, slack_lt=0.5, mode="hold"))

        assert (query.k, query.nworst, query.slack_lt, query.mode) == (4, 2, 0.5, "hold")

    @pytest.mark.parametrize("kwargs", [{"k": 0}, {"nworst": 0}, {"mode": "both"}])
    def test_invalid_query(self, kwargs):
        with pytest.raises(ValueError):
            PathQuery(**kwargs)


class TestAgainstExhaustiveEnumeration:
    @pytest.mark.parametrize("mode", ["setup", "hold"])
    @pytest.mark.parametrize(
        "verilog, sdc",
        [
            (DIAMOND_V, DIAMOND_SDC),
            (PIPELINE_V, PIPELINE_SDC),
            (PIPELINE_V, PIPELINE_SDC + "set_multicycle_path 2 -setup -to [get_pins r2/D]\n"),
            (DIAMOND_V, DIAMOND_SDC + "set_max_delay 4 -through [get_pins bA/Y]\n"),
        ],
    )
    def test_all_paths_match(self, timed, verilog, sdc, mode):
        t = timed(verilog, sdc)
        expected = exhaustive_slacks(t.state, mode)

        paths = report_paths(t.state, PathQuery(k=None, nworst=None, mode=mode))

        got = {tuple(paths.path_pins(i)): float(paths.slack[i]) for i in range(len(paths))}
        assert got.keys() == expected.keys()
        for pins, slack in expected.items():
            assert got[pins] == pytest.approx(slack)
        assert paths.slack.tolist() == sorted(paths.slack.tolist())

    def test_worst_path_slack_equals_endpoint_slack(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        paths = report_paths(t.state, PathQuery(k=None, nworst=1))

        for i in range(len(paths)):
            endpoint = int(paths.endpoint[i])
            assert float(paths.slack[i]) == pytest.approx(float(t.state.setup_slack[endpoint]))


def _random_timed(timed, seed: int):
    """Odd seeds give a clocked design with exceptions, even seeds a combinational DAG."""
    rng = np.random.default_rng(seed)
    if seed % 2:
        design = _random_sequential(rng)
        return timed(design.verilog, design.sdc, tag_cap=4096)
    verilog, _ = _random_dag(rng, int(rng.integers(4, 13)))
    sdc = (
        "create_clock -name clk -period 50\n"
        "set_input_delay 3 -clock clk [all_inputs]\n"
        "set_output_delay 7 -clock clk [all_outputs]\n"
        f"set_false_path -from [get_ports in{int(rng.integers(3))}] -to [get_ports out{int(rng.integers(2))}]\n"
    )
    return timed(verilog, sdc, tag_cap=4096)


def _tie_order(expected: dict[tuple[int, ...], float]) -> list[tuple[int, ...]]:
    return sorted(expected, key=lambda pins: (expected[pins], pins[-1], pins))


class TestRandomDesigns:
    @pytest.mark.parametrize("mode", ["setup", "hold"])
    @pytest.mark.parametrize("seed", range(16))
    def test_every_path_in_tie_order(self, timed, seed, mode):
        t = _random_timed(timed, seed)
        expected = exhaustive_slacks(t.state, mode)
        order = _tie_order(expected)

        paths = report_paths(t.state, PathQuery(k=None, nworst=None, mode=mode))

        assert [tuple(int(p) for p in paths.path_pins(i)) for i in range(len(paths))] == order
        np.testing.assert_allclose(paths.slack, [expected[pins] for pins in order], atol=1e-9)

    @pytest.mark.parametrize("nworst", [1, 2, 3])
    @pytest.mark.parametrize("seed", range(8))
    def test_nworst_keeps_the_worst_per_endpoint(self, timed, seed, nworst):
        t = _random_timed(timed, seed)
        kept, count = [], {}
        for pins in _tie_order(exhaustive_slacks(t.state, "setup")):
            if count.get(pins[-1], 0) < nworst:
                kept.append(pins)
                count[pins[-1]] = count.get(pins[-1], 0) + 1

        paths = report_paths(t.state, PathQuery(k=None, nworst=nworst))

        assert [tuple(int(p) for p in paths.path_pins(i)) for i in range(len(paths))] == kept
        assert max(np.bincount(paths.endpoint.astype(np.int64)), default=0) <= nworst

    @pytest.mark.parametrize("mode", ["setup", "hold"])
    @pytest.mark.parametrize("seed", range(16))
    def test_first_path_slack_is_wns(self, timed, seed, mode):
        t = _random_timed(timed, seed)

        paths = report_paths(t.state, PathQuery(k=1, mode=mode))

        wns, _ = wns_tns(t.state, check=mode)
        if math.isinf(wns):
            assert len(paths) == 0
        else:
            assert float(paths.slack[0]) == pytest.approx(wns)


class TestFormatPathText:
    def test_block_layout(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)
        paths = report_paths(t.state, PathQuery(k=1))

        text = format_path_text(paths, 0, t.netlist.pin_name)

        lines = text.splitlines()
        assert lines[0] == "Startpoint: in"
        assert lines[1] == "Endpoint: out"
        assert lines[2] == "Path Group: clk"
        assert lines[3] == "Path Type: max"
        assert "data arrival time" in text
        assert lines[-1].startswith("slack (MET)")
        assert lines[-1].endswith("3.000")

    def test_violated_label(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC.replace("-period 10", "-period 5"))
        paths = report_paths(t.state, PathQuery(k=1))

        text = format_path_text(paths, 0, t.netlist.pin_name)

        assert text.splitlines()[-1].startswith("slack (VIOLATED)")
        assert text.splitlines()[-1].endswith("-2.000")
