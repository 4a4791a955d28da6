# tests/unit/test_path_exceptions.py

import pytest

from ministra.clocks import trace_clocks
from ministra.graph import build_graph
from ministra.path_exceptions import NO_OVERRIDES, compile_exceptions
from ministra.sdc import eval_sdc

from .conftest import DIAMOND_SDC, DIAMOND_V


@pytest.fixture
def compiled(make_netlist, lib):
    """Compiles extra SDC lines on top of the diamond constraints."""

    def _compile(extra: str):
        netlist = make_netlist(DIAMOND_V)
        constraints = eval_sdc(DIAMOND_SDC + extra, netlist, lib)
        graph = build_graph(netlist, constraints)
        clocks = trace_clocks(graph, constraints)
        return netlist.pin_by_name, clocks, compile_exceptions(graph, constraints, clocks)

    return _compile


class TestAutomaton:
    def test_bits_are_set_in_order(self, compiled):
        pin, clocks, exceptions = compiled("set_false_path -from in -through bB/Y -through g/B -to out\n")
        clk = clocks.index("clk")

        # ACT
        start = exceptions.seed(pin["in"], clk)
        mid = exceptions.advance(start, pin["bB/Y"])
        done = exceptions.advance(mid, pin["g/B"])
        skipped = exceptions.advance(start, pin["g/B"])

        # ASSERT
        assert exceptions.width == 3
        assert (start, mid, done, skipped) == (0b001, 0b011, 0b111, 0b001)
        assert exceptions.segments_at(pin["bB/Y"]) == [(0, 0)]
        assert exceptions.segments_at(pin["bA/Y"]) == []

    def test_resolve_requires_complete_match_and_endpoint(self, compiled):
        pin, clocks, exceptions = compiled("set_false_path -from in -through bB/Y -to out\n")
        clk = clocks.index("clk")

        full = exceptions.resolve(0b11, pin["out"], clk, clk)

        assert full.is_false("setup") and full.is_false("hold")
        assert exceptions.resolve(0b01, pin["out"], clk, clk) == NO_OVERRIDES
        assert exceptions.resolve(0b11, pin["g/Y"], clk, clk) == NO_OVERRIDES

    def test_later_exception_wins(self, compiled):
        pin, clocks, exceptions = compiled(
            "set_max_delay 4 -to out\nset_max_delay 6 -to out\n"
            "set_multicycle_path 2 -to out\nset_multicycle_path 3 -to out\n"
            "set_min_delay 1 -to out\n"
        )
        clk = clocks.index("clk")

        result = exceptions.resolve(0, pin["out"], clk, clk)

        assert exceptions.width == 0
        assert result.delay_limit("setup") == 6.0
        assert result.delay_limit("hold") == 1.0
        assert result.setup_multicycle.multiplier == 3
        assert result.hold_multicycle is None

    def test_setup_only_false_path(self, compiled):
        pin, clocks, exceptions = compiled("set_false_path -setup -to out\n")
        clk = clocks.index("clk")

        result = exceptions.resolve(0, pin["out"], clk, clk)

        assert result.is_false("setup")
        assert not result.is_false("hold")


class TestClockSegments:
    def test_from_clock_matches_launch_clock(self, compiled):
        pin, clocks, exceptions = compiled("set_false_path -from [get_clocks clk]\n")

        assert exceptions.seed(pin["in"], clocks.index("clk")) == 1
        assert exceptions.seed(pin["in"], clocks.virtual) == 0

    def test_to_clock_matches_capture_clock(self, compiled):
        pin, clocks, exceptions = compiled("set_false_path -to [get_clocks clk]\n")
        clk = clocks.index("clk")

        assert exceptions.resolve(0, pin["out"], clk, clk).false_setup
        assert exceptions.resolve(0, pin["out"], clk, clocks.virtual) == NO_OVERRIDES

    def test_clock_with_no_paths_is_dropped(self, compiled):
        _, _, exceptions = compiled("create_clock -name idle -period 5\nset_false_path -from [get_clocks idle]\n")

        assert len(exceptions) == 0
        assert exceptions.width == 0
