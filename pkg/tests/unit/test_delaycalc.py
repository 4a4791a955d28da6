# tests/unit/test_delaycalc.py

import math

import numpy as np
import pytest

from ministra.delaycalc import EARLY, FALL, LATE, MIN_SLEW, RISE, apply_sdf, cell_arc, compute_all_arcs, lut_eval
from ministra.graph import CELL_CHECK_ARC, NEGATIVE, NON_UNATE
from ministra.interconnect import LN9
from ministra.liberty import Lut2D, TimingArc
from ministra.parasitics import annotate_spef
from ministra.sdf import parse_sdf
from ministra.spef import parse_spef

from .conftest import CHAIN_SDC, CHAIN_SPEF, CHAIN_V, PIPELINE_SDC, PIPELINE_V

# value = slew + load on a 2x2 grid
PLANE = Lut2D(np.array([0.0, 10.0]), np.array([0.0, 2.0]), np.array([[0.0, 2.0], [10.0, 12.0]]))
# value = slew
BY_SLEW = Lut2D(np.array([0.0, 10.0]), None, np.array([[0.0], [10.0]]))


def _edge(t, frm, to, kind=None):
    nl, graph = t.netlist, t.graph
    for e in range(graph.num_edges):
        if nl.pin_name(int(graph.edge_from[e])) == frm and nl.pin_name(int(graph.edge_to[e])) == to:
            if kind is None or graph.arc(e).kind == kind:
                return e
    raise AssertionError(f"no edge {frm} -> {to}")


class TestLutEval:
    @pytest.mark.parametrize("slew, load, expected", [(5.0, 1.0, 6.0), (0.0, 0.0, 0.0), (20.0, 4.0, 24.0), (-5.0, 1.0, -4.0)])
    def test_bilinear_with_extrapolation(self, slew, load, expected):
        assert lut_eval(PLANE, slew, load) == pytest.approx(expected)

    def test_scalar_table(self):
        assert lut_eval(Lut2D(None, None, np.array([[7.0]])), 3.0, 9.0) == 7.0

    def test_single_axis(self):
        assert lut_eval(BY_SLEW, 5.0, 100.0) == pytest.approx(5.0)


class TestCellArc:
    def test_negative_unate_swaps_input_edges(self):
        arc = TimingArc("A", "Y", "negative_unate", "combinational", tables={
            "cell_rise": BY_SLEW, "cell_fall": BY_SLEW, "rise_transition": BY_SLEW, "fall_transition": BY_SLEW,
        })
        in_slew = np.array([[1.0, 2.0], [3.0, 4.0]])

        delay, slew, missing = cell_arc(arc, NEGATIVE, in_slew, 0.0)

        assert delay.tolist() == [[3.0, 4.0], [1.0, 2.0]]
        assert slew.tolist() == [[3.0, 4.0], [1.0, 2.0]]
        assert missing == 0

    def test_non_unate_takes_best_and_worst(self):
        arc = TimingArc("A", "Y", "non_unate", "combinational", tables={"cell_rise": BY_SLEW, "cell_fall": BY_SLEW})
        in_slew = np.array([[1.0, 2.0], [3.0, 4.0]])

        delay, slew, missing = cell_arc(arc, NON_UNATE, in_slew, 0.0)

        assert delay[:, EARLY].tolist() == [1.0, 1.0]
        assert delay[:, LATE].tolist() == [4.0, 4.0]
        # no transition tables: the input slew passes through
        assert slew[:, LATE].tolist() == [4.0, 4.0]
        assert missing == 2

    def test_results_are_clamped(self):
        negative = Lut2D(None, None, np.array([[-3.0]]))
        arc = TimingArc("A", "Y", "negative_unate", "combinational", tables={
            "cell_rise": negative, "cell_fall": negative, "rise_transition": negative, "fall_transition": negative,
        })

        delay, slew, _ = cell_arc(arc, NEGATIVE, np.zeros((2, 2)), 0.0)

        assert not delay.any()
        assert np.all(slew == MIN_SLEW)


class TestLumped:
    def test_cell_delays_and_zero_wires(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC)

        u1 = _edge(t, "u1/A", "u1/Y")
        wire = _edge(t, "u1/Y", "u2/A")

        assert t.arcs.delay[u1].tolist() == [[10.0, 10.0], [20.0, 20.0]]
        assert not t.arcs.delay[wire].any()
        assert t.arcs.pin_slew[t.pin("u2/A")].tolist() == [[5.0, 5.0], [5.0, 5.0]]
        assert t.arcs.model == "elmore"

    def test_net_load_counts_pins_and_set_load(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC + "set_load 3 [get_ports out]\n")
        nl = t.netlist

        assert t.arcs.net_load[nl.net_by_name["n1"]] == pytest.approx(1.0)
        assert t.arcs.net_load[nl.net_by_name["out"]] == pytest.approx(3.0)

    def test_input_transition_seeds_slew(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC + "set_input_transition 20 [get_ports in]\nset_input_transition -fall 30 [get_ports in]\n")

        assert t.arcs.pin_slew[t.pin("in"), RISE].tolist() == [20.0, 20.0]
        assert t.arcs.pin_slew[t.pin("u1/A"), RISE].tolist() == [20.0, 20.0]
        assert t.arcs.pin_slew[t.pin("u1/A"), FALL].tolist() == [30.0, 30.0]
        assert t.arcs.pin_slew[t.pin("out"), RISE].tolist() == [5.0, 5.0]

    def test_check_margins(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        setup = _edge(t, "r2/CK", "r2/D", "setup_rising")
        hold = _edge(t, "r2/CK", "r2/D", "hold_rising")

        assert int(t.graph.edge_kind[setup]) == CELL_CHECK_ARC
        assert (t.arcs.margin(setup, RISE, "setup"), t.arcs.margin(setup, FALL, "setup")) == (3.0, 4.0)
        assert (t.arcs.margin(hold, RISE, "hold"), t.arcs.margin(hold, FALL, "hold")) == (1.0, 2.0)


class TestWires:
    @pytest.fixture
    def chain(self, timed):
        t = timed(CHAIN_V, CHAIN_SDC)
        return t, annotate_spef(parse_spef(CHAIN_SPEF.encode()), t.netlist)

    def test_elmore_delay_and_slew(self, chain):
        t, store = chain

        arcs = compute_all_arcs(t.graph, store, t.constraints)
        wire = _edge(t, "u1/Y", "u2/A")

        # 2 kOhm into (1.4 + 1.0) fF, then 1 kOhm into the 1 fF pin
        assert arcs.delay[wire] == pytest.approx(np.full((2, 2), 5.8))
        assert arcs.slew[wire, RISE, LATE] == pytest.approx(math.hypot(5.0, LN9 * 5.8))
        assert arcs.net_load[t.netlist.net_by_name["n1"]] == pytest.approx(2.9)

    def test_arnoldi_is_bounded_by_elmore(self, chain):
        t, store = chain

        arcs = compute_all_arcs(t.graph, store, t.constraints, model="arnoldi", arnoldi_order=2)
        wire = _edge(t, "u1/Y", "u2/A")

        assert arcs.model == "arnoldi"
        assert arcs.fallbacks == 0
        assert np.all(arcs.delay[wire] > 0.0)
        assert np.all(arcs.delay[wire] <= 5.8 + 1e-9)

    def test_parallel_levels_match(self, chain):
        t, store = chain

        serial = compute_all_arcs(t.graph, store, t.constraints)
        parallel = compute_all_arcs(t.graph, store, t.constraints, threads=4)

        np.testing.assert_array_equal(serial.delay, parallel.delay)
        np.testing.assert_array_equal(serial.pin_slew, parallel.pin_slew)


class TestSdfAnnotation:
    SDF = """\
(DELAYFILE
  (TIMESCALE 1ps)
  (CELL (CELLTYPE "INV") (INSTANCE u1)
    (DELAY (ABSOLUTE (IOPATH A Y (1:2:3) (4)))))
  (CELL (CELLTYPE "pipe") (INSTANCE)
    (DELAY (ABSOLUTE (INTERCONNECT r1/Q u1/A (5)))))
  (CELL (CELLTYPE "DFF") (INSTANCE r2)
    (DELAY (ABSOLUTE (IOPATH (posedge CK) Q (6) ())))
    (TIMINGCHECK (SETUP D (posedge CK) (7))))
  (CELL (CELLTYPE "INV") (INSTANCE ghost)
    (DELAY (ABSOLUTE (IOPATH A Y (1)))))
)
"""

    def test_values_replace_computed_ones(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        arcs = compute_all_arcs(t.graph, None, t.constraints, sdf=parse_sdf(self.SDF.encode()))

        u1 = _edge(t, "u1/A", "u1/Y")
        wire = _edge(t, "r1/Q", "u1/A")
        launch = _edge(t, "r2/CK", "r2/Q")
        setup = _edge(t, "r2/CK", "r2/D", "setup_rising")
        hold = _edge(t, "r2/CK", "r2/D", "hold_rising")
        assert arcs.delay[u1].tolist() == [[1.0, 3.0], [4.0, 4.0]]
        assert arcs.delay[wire].tolist() == [[5.0, 5.0], [5.0, 5.0]]
        # an empty fall value keeps the library delay
        assert arcs.delay[launch].tolist() == [[6.0, 6.0], [16.0, 16.0]]
        assert arcs.margin(setup, RISE, "setup") == arcs.margin(setup, FALL, "setup") == 7.0
        assert arcs.margin(hold, RISE, "hold") == 1.0
        assert arcs.annotated[[u1, wire, launch, setup]].all()
        assert not arcs.annotated[hold]

    def test_unmatched_entries_are_counted(self, timed):
        t = timed(PIPELINE_V, PIPELINE_SDC)

        assert apply_sdf(t.arcs, t.graph, parse_sdf(self.SDF.encode())) == 1
