"""
Shared fixtures for unit tests.

The test library uses scalar tables in ps and fF so every delay below can be
worked out by hand; with no parasitics every net arc has zero delay.
"""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from ministra.config import get_config
from ministra.delaycalc import ArcTiming, compute_all_arcs
from ministra.graph import TimingGraph, build_graph
from ministra.liberty import LibertyLibrary, parse_liberty
from ministra.netlist import FlatNetlist, elaborate
from ministra.propagation import TimingState, analyze
from ministra.sdc import Constraints, eval_sdc
from ministra.sources import Source
from ministra.verilog import parse_verilog


def _comb_cell(name: str, inputs: list[str], function: str, rise: float, fall: float,
               sense: str = "positive_unate") -> str:
    pins = "\n".join(f"    pin ({p}) {{ direction : input; capacitance : 1; }}" for p in inputs)
    arcs = "\n".join(
        f"""      timing () {{
        related_pin : "{p}";
        timing_sense : {sense};
        cell_rise (scalar) {{ values ("{rise}"); }}
        cell_fall (scalar) {{ values ("{fall}"); }}
        rise_transition (scalar) {{ values ("5"); }}
        fall_transition (scalar) {{ values ("5"); }}
      }}"""
        for p in inputs
    )
    return f"""  cell ({name}) {{
    area : 1;
{pins}
    pin (Y) {{
      direction : output;
      function : "{function}";
{arcs}
    }}
  }}
"""


LIB_TEXT = (
    """library (testlib) {
  time_unit : "1ps";
  capacitive_load_unit (1, ff);
  pulling_resistance_unit : "1kohm";
"""
    + _comb_cell("INV", ["A"], "!A", 10, 20, sense="negative_unate")
    + _comb_cell("BUF1", ["A"], "A", 1, 1)
    + _comb_cell("BUF5", ["A"], "A", 5, 5)
    + _comb_cell("AND2", ["A", "B"], "A & B", 2, 2)
    + """  cell (DFF) {
    area : 4;
    ff (IQ, IQN) { next_state : "D"; clocked_on : "CK"; }
    pin (D) {
      direction : input;
      capacitance : 1;
      timing () {
        related_pin : "CK";
        timing_type : setup_rising;
        rise_constraint (scalar) { values ("3"); }
        fall_constraint (scalar) { values ("4"); }
      }
      timing () {
        related_pin : "CK";
        timing_type : hold_rising;
        rise_constraint (scalar) { values ("1"); }
        fall_constraint (scalar) { values ("2"); }
      }
    }
    pin (CK) { direction : input; capacitance : 1; clock : true; }
    pin (Q) {
      direction : output;
      function : "IQ";
      timing () {
        related_pin : "CK";
        timing_type : rising_edge;
        cell_rise (scalar) { values ("15"); }
        cell_fall (scalar) { values ("16"); }
        rise_transition (scalar) { values ("5"); }
        fall_transition (scalar) { values ("5"); }
      }
    }
  }
}
"""
)

CHAIN_V = """\
module chain (in, out);
  input in;
  output out;
  wire n1;
  INV u1 (.A(in), .Y(n1));
  INV u2 (.A(n1), .Y(out));
endmodule
"""

CHAIN_SDC = """\
create_clock -name clk -period 100
set_input_delay 0 -clock clk [get_ports in]
set_output_delay 0 -clock clk [get_ports out]
"""

DIAMOND_V = """\
module diamond (in, out);
  input in;
  output out;
  wire a, b;
  BUF1 bA (.A(in), .Y(a));
  BUF5 bB (.A(in), .Y(b));
  AND2 g (.A(a), .B(b), .Y(out));
endmodule
"""

DIAMOND_SDC = """\
create_clock -name clk -period 10
set_input_delay 0 -clock clk [all_inputs]
set_output_delay 0 -clock clk [all_outputs]
"""

PIPELINE_V = """\
module pipe (clk, in, out);
  input clk, in;
  output out;
  wire q1, n1;
  DFF r1 (.D(in), .CK(clk), .Q(q1));
  INV u1 (.A(q1), .Y(n1));
  DFF r2 (.D(n1), .CK(clk), .Q(out));
endmodule
"""

PIPELINE_SDC = """\
create_clock -name clk -period 100 [get_ports clk]
set_input_delay 5 -clock clk [get_ports in]
set_output_delay 10 -clock clk [get_ports out]
"""

# n1: u1/Y -2- n1:1 -1- u2/A, with 0.4 fF coupled to out:1
CHAIN_SPEF = """\
*SPEF "IEEE 1481-1998"
*DESIGN "chain"
*DIVIDER /
*DELIMITER :
*BUS_DELIMITER [ ]
*T_UNIT 1 PS
*C_UNIT 1 FF
*R_UNIT 1 KOHM

*NAME_MAP
*1 n1
*2 u1
*3 u2

*D_NET *1 3.0
*CONN
*I *2:Y O
*I *3:A I
*CAP
1 *1:1 1.0
2 *2:Y 0.5
3 *1:1 out:1 0.4
*RES
1 *2:Y *1:1 2.0
2 *1:1 *3:A 1.0
*END

*D_NET out 1.0
*CONN
*P out O
*I *3:Y O
*CAP
1 out:1 0.6
*RES
1 *3:Y out:1 0.5
2 out:1 out 0.5
*END
"""


@dataclass
class Timed:
    netlist: FlatNetlist
    constraints: Constraints
    graph: TimingGraph
    arcs: ArcTiming
    state: TimingState

    def pin(self, name: str) -> int:
        return self.netlist.pin_by_name[name]

    def setup(self, name: str) -> float:
        return float(self.state.setup_slack[self.pin(name)])

    def hold(self, name: str) -> float:
        return float(self.state.hold_slack[self.pin(name)])


@pytest.fixture(autouse=True)
def clear_config_cache():
    """Clears the config cache before each test run."""
    get_config.cache_clear()
    yield
    get_config.cache_clear()


@pytest.fixture(scope="session")
def lib() -> LibertyLibrary:
    return parse_liberty([Source("test.lib", LIB_TEXT.encode())])


@pytest.fixture
def make_netlist(lib):
    def _make(verilog: str, top: str | None = None) -> FlatNetlist:
        return elaborate(parse_verilog(Source("test.v", verilog.encode())), lib, top)

    return _make


@pytest.fixture
def timed(lib, make_netlist):
    """Runs the whole flow on a Verilog text and an SDC script."""

    def _run(verilog: str, sdc: str = "", tag_cap: int | None = None) -> Timed:
        netlist = make_netlist(verilog)
        constraints = eval_sdc(sdc, netlist, lib)
        graph = build_graph(netlist, constraints)
        arcs = compute_all_arcs(graph, None, constraints)
        state = analyze(graph, arcs, constraints, tag_cap=tag_cap)
        return Timed(netlist, constraints, graph, arcs, state)

    return _run
