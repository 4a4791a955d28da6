# tests/unit/test_propagation.py

import math

import numpy as np
import pytest

from ministra.propagation import (
    EARLY,
    FALL,
    LATE,
    RISE,
    analyze,
    backpropagate_pin_slacks,
    compute_required_and_slack,
    propagate_arrivals,
    wns_tns,
)

from .conftest import CHAIN_SDC, CHAIN_V, DIAMOND_SDC, DIAMOND_V, PIPELINE_SDC, PIPELINE_V


class TestCombinationalChain:
    """Two inverters between ports, constrained by a virtual clock."""

    def test_arrival_at_output(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC)
        (arrival,) = t.state.arrivals[t.pin("out")].values()

        # in rise -> n1 fall (20) -> out rise (+10); in fall -> n1 rise (10) -> out fall (+20)
        assert arrival[RISE, LATE] == pytest.approx(30.0)
        assert arrival[FALL, LATE] == pytest.approx(30.0)
        assert arrival[RISE, EARLY] == pytest.approx(30.0)

    def test_setup_and_hold_slack(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC)

        assert t.setup("out") == pytest.approx(70.0)
        assert t.hold("out") == pytest.approx(30.0)

    def test_unconstrained_output_has_infinite_slack(self, timed):
        t = timed(CHAIN_V, "")

        assert math.isinf(t.setup("out"))
        assert t.pin("out") not in t.state.constrained
        assert wns_tns(t.state) == (math.inf, 0.0)

    def test_max_delay_replaces_clock_relationship(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC + "set_max_delay 25 -from [get_ports in] -to [get_ports out]\n")

        assert t.setup("out") == pytest.approx(-5.0)
        assert wns_tns(t.state) == (pytest.approx(-5.0), pytest.approx(-5.0))

    def test_false_path_removes_the_check(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC + "set_false_path -from [get_ports in]\n")

        assert math.isinf(t.setup("out"))
        assert math.isinf(t.hold("out"))

    def test_clock_fall_input_delay_launches_at_falling_edge(self, timed):
        sdc = """\
create_clock -name clk -period 100
set_input_delay 0 -clock clk -clock_fall [get_ports in]
set_output_delay 0 -clock clk [get_ports out]
"""
        t = timed(CHAIN_V, sdc)

        # launch at 50, arrive at 80, capture at the next rising edge (100)
        assert t.setup("out") == pytest.approx(20.0)
        assert t.hold("out") == pytest.approx(80.0)


class TestPipeline:
    """Two flops around an inverter, a real clock on port clk."""

    def test_register_to_register_arrival(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)
        entries = t.state.arrivals[t.pin("r2/D")]
        late = np.max([a[:, LATE] for a in entries.values()], axis=0)

        assert late[RISE] == pytest.approx(26.0)
        assert late[FALL] == pytest.approx(35.0)

    @pytest.mark.parametrize(
        "endpoint, setup, hold",
        [("r1/D", 91.0, 3.0), ("r2/D", 61.0, 25.0), ("out", 74.0, 25.0)],
    )
    def test_endpoint_slacks(self, timed, endpoint, setup, hold):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        assert t.setup(endpoint) == pytest.approx(setup)
        assert t.hold(endpoint) == pytest.approx(hold)

    def test_wns_tns(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        assert wns_tns(t.state, check="setup") == (pytest.approx(61.0), 0.0)
        assert wns_tns(t.state, check="hold")[0] == pytest.approx(3.0)
        assert wns_tns(t.state, clock="clk")[0] == pytest.approx(61.0)

    def test_register_clock_pins_are_not_endpoints(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)
        endpoint_pins = {ep.pin for ep in t.state.endpoints}

        assert endpoint_pins == {t.pin("r1/D"), t.pin("r2/D"), t.pin("out")}

    def test_setup_multicycle_moves_hold_with_it(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC + "set_multicycle_path 2 -setup -to [get_pins r2/D]\n")

        assert t.setup("r2/D") == pytest.approx(161.0)
        # hold is checked one cycle before the moved setup edge
        assert t.hold("r2/D") == pytest.approx(-75.0)
        assert t.setup("r1/D") == pytest.approx(91.0)

    def test_hold_multicycle_restores_hold_edge(self, timed):
        sdc = PIPELINE_SDC + (
            "set_multicycle_path 2 -setup -to [get_pins r2/D]\n"
            "set_multicycle_path 1 -hold -to [get_pins r2/D]\n"
        )
        t = timed(PIPELINE_V, sdc)

        assert t.setup("r2/D") == pytest.approx(161.0)
        assert t.hold("r2/D") == pytest.approx(25.0)

    def test_negative_tns_sums_violations(self, timed):
        sdc = PIPELINE_SDC.replace("-period 100", "-period 40")
        t = timed(PIPELINE_V, sdc)

        # r2/D: 40 - 4 - 35 = 1, r1/D: 40 - 4 - 5 = 31, out: 40 - 10 - 16 = 14
        assert t.setup("r2/D") == pytest.approx(1.0)
        t2 = timed(PIPELINE_V, PIPELINE_SDC.replace("-period 100", "-period 30"))
        wns, tns = wns_tns(t2.state)
        assert wns == pytest.approx(-9.0)
        assert tns == pytest.approx(-9.0)


class TestDiamond:
    def test_slack_follows_the_slow_branch(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)

        assert t.setup("out") == pytest.approx(3.0)
        assert t.hold("out") == pytest.approx(3.0)

    def test_false_path_through_slow_branch(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC + "set_false_path -through [get_pins bB/Y]\n")

        assert t.setup("out") == pytest.approx(7.0)
        assert t.hold("out") == pytest.approx(3.0)

    def test_pin_slacks(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC)
        slack = t.state.pin_setup_slack

        assert slack[t.pin("bB/Y")] == pytest.approx(3.0)
        assert slack[t.pin("bA/Y")] == pytest.approx(7.0)
        assert slack[t.pin("in")] == pytest.approx(3.0)
        assert slack[t.pin("out")] == pytest.approx(3.0)

    def test_pin_slacks_respect_through_exception(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC + "set_false_path -through [get_pins bB/Y]\n")
        slack = t.state.pin_setup_slack

        assert math.isinf(slack[t.pin("bB/Y")])
        assert slack[t.pin("in")] == pytest.approx(7.0)

    def test_disable_timing_cuts_the_branch(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC + "set_disable_timing [get_cells bB]\n")

        assert t.setup("out") == pytest.approx(7.0)

    def test_tag_cap_merges_exception_states(self, timed):
        sdc = DIAMOND_SDC + "set_false_path -through [get_pins bB/Y]\n"
        t = timed(DIAMOND_V, sdc, tag_cap=1)

        # the two exception states at g/Y merge pessimistically
        assert t.state.tag_merges > 0
        assert t.setup("out") <= 7.0


class TestStagedApi:
    def test_stages_match_one_shot_analysis(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        state = propagate_arrivals(t.graph, t.arcs, t.constraints)
        compute_required_and_slack(state)
        pin_slack = backpropagate_pin_slacks(state, threads=2)

        np.testing.assert_array_equal(state.setup_slack, t.state.setup_slack)
        np.testing.assert_array_equal(state.hold_slack, t.state.hold_slack)
        np.testing.assert_array_equal(pin_slack, t.state.pin_setup_slack)

    def test_thread_count_does_not_change_results(self, timed):
        t = timed(DIAMOND_V, DIAMOND_SDC + "set_false_path -through [get_pins bB/Y]\n")

        state = analyze(t.graph, t.arcs, t.constraints, threads=4)

        np.testing.assert_array_equal(state.setup_slack, t.state.setup_slack)
        np.testing.assert_array_equal(state.pin_setup_slack, t.state.pin_setup_slack)


TWO_CLOCK_V = """\
module two_clk (clka, clkb, d, q);
  input clka, clkb, d;
  output q;
  wire q1, n1;
  DFF r1 (.D(d), .CK(clka), .Q(q1));
  BUF1 b (.A(q1), .Y(n1));
  DFF r2 (.D(n1), .CK(clkb), .Q(q));
endmodule
"""


class TestCrossClock:
    """r1 on a 40 ps clock feeds r2 on a 100 ps clock through one buffer."""

    SDC = (
        "create_clock -name fast -period 40 [get_ports clka]\n"
        "create_clock -name slow -period 100 [get_ports clkb]\n"
    )

    def test_setup_uses_closest_edge_pair(self, timed):
        t = timed(TWO_CLOCK_V, self.SDC)

        # launch 80, capture 100; data fall 16 + 1, setup margin 4
        assert t.setup("r2/D") == pytest.approx(20.0 - 4.0 - 17.0)

    def test_hold_checks_coincident_edges(self, timed):
        t = timed(TWO_CLOCK_V, self.SDC)

        # launch 0, capture 0; data rise 15 + 1, hold margin 1
        assert t.hold("r2/D") == pytest.approx(15.0)

    def test_slow_to_fast_hold(self, timed):
        sdc = self.SDC.replace("-period 40", "-period 400")
        t = timed(TWO_CLOCK_V, sdc)

        # launch 0 on the 400 ps clock: capture edges 0, 100, ...; setup 100, hold 0
        assert t.setup("r2/D") == pytest.approx(100.0 - 4.0 - 17.0)
        assert t.hold("r2/D") == pytest.approx(15.0)

    def test_setup_multicycle_moves_cross_clock_hold(self, timed):
        t = timed(TWO_CLOCK_V, self.SDC + "set_multicycle_path 2 -setup -to [get_pins r2/D]\n")

        # setup capture moves one slow period; hold follows it
        assert t.setup("r2/D") == pytest.approx(120.0 - 4.0 - 17.0)
        assert t.hold("r2/D") == pytest.approx(15.0 - 100.0)
