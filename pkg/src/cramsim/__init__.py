"""Simulator for MTJ-based computational RAM.

Models a magnetic-tunnel-junction memory row that computes logic in place:
device-level resistance and switching physics, the voltage-divider logic
mechanism, probabilistic gate tables, schedule compilation for arithmetic
circuits, and Monte Carlo / exact accuracy evaluation.
"""

from .analysis import (AccuracyMap, Distributions, NedReport, SimConfig,
                       accuracy_map, arithmetic_oracle, evaluate_ned,
                       exact_distribution, ideal_outputs, monte_carlo, ned)
from .array import CramCell, CramRow, execute_schedule, execute_step, mem_read, mem_write
from .compiler import (LogicStep, Schedule, array_multiplier, compact_cells,
                       dot_product, full_adder_all_nand, full_adder_maj_not,
                       ripple_carry_adder, validate_schedule)
from .device import (DEFAULT_ANCHORS, DEFAULT_PARAMS, MtjParams, MtjState,
                     calibrate_from_anchors, resistance, scale_tmr,
                     switch_probability, tmr_at_bias)
from .errors import (CalibrationError, CapacityError, ConfigError,
                     CramSimError, ParameterError, ScheduleError, SolverError)
from .gates import (ProbGate, and_from_delta, delta_binding,
                    delta_from_accuracies, gate_from_response, ideal_gate,
                    nand_from_delta, not_from_delta, sample_output)
from .models import GateModel, optimized_gate_configs, physics_table
from .vcl import (GateResponse, GateSweep, LogicStepConfig, OperatingPoint,
                  dout_mean, gate_accuracy, min_error_vs_tmr, min_gate_error,
                  optimize_vlogic, solve_operating_point, sweep_gate)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
