"""Transistor-level simulator for bulk-controlled quadrature ring VCOs.

Layers, bottom up: ``models`` (MOSFET and junction physics), ``netlist``
(circuits, the SPICE-like text format and ring generators), ``engine`` (MNA
DC and transient solver), ``analysis`` (frequency, phase, current) and
``sweep`` (control-voltage sweeps and the frequency-peak locus). ``cli``
wraps them as the ``ringspice`` command.
"""

from .analysis import (NotOscillatingError, OscMetrics, average_current, detect_oscillation,
                       estimate_frequency, is_quadrature, measure_ring, phase_difference)
from .engine import (ConvergenceError, Method, OperatingPoint, SolverSettings, WaveformSet,
                     dc_operating_point, transient)
from .models import (CONSTANTS, MosModelParams, MosfetState, PhysicalConstants, Polarity, Region,
                     bulk_diode_current, bulk_factor_gamma, default_cards_path, drain_current,
                     dynamic_power_estimate, load_model_cards, threshold_voltage)
from .netlist import (Capacitor, Circuit, Diode, ISource, InverterStyle, Mosfet, NetlistError,
                      Resistor, RingConfig, Tran, VSource, build_plain_ring, build_quadrature_ring,
                      format_value, parse_netlist, parse_value, tap_name, write_netlist)
from .sweep import (InsufficientDataError, Peak, SweepError, SweepResult, SweepSpec, find_peak,
                    peak_locus, simulate_point, sweep_vcont, switched_capacitance,
                    tuning_range_report)

__version__ = "0.1.0"
