"""Voltage-controlled-logic engine.

A logic step connects the selected input cells in parallel between the drive
rail and the floating logic line, with the output cell from the logic line
to ground.  The input-state-dependent equivalent resistance sets the voltage
across the output cell and hence its switching probability.  This module
solves that divider self-consistently (every junction's resistance evaluated
at its own bias), turns the solved bias into the mean output logic level and
per-gate accuracy, scans the drive voltage for the optimum, and tabulates
minimum gate error against TMR and pulse width.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import device, logic
from .device import MtjParams, MtjState
from .errors import ConfigError, ParameterError, SolverError

V_TOL = 1e-6        # guaranteed operating-point residual, volts
_ITER_TOL = 1e-13   # actual iteration target (machine-level)
_MAX_ITER = 2000
_DAMPING = 0.5

DEFAULT_V_RANGE = (0.0, 1.0)
DEFAULT_V_RESOLUTION = 1e-3


@dataclass(frozen=True)
class LogicStepConfig:
    """Electrical configuration of one logic step.

    ``r_series`` lumps access-transistor and line resistance into every
    branch (each input cell and the output cell); it defaults to an ideal
    0 ohm path.
    """

    v_logic: float
    pulse_width: float
    output_preset: int
    num_inputs: int
    r_series: float = 0.0

    def __post_init__(self):
        if not self.pulse_width > 0:
            raise ParameterError(f"pulse_width must be > 0, got {self.pulse_width}")
        if self.num_inputs < 1:
            raise ParameterError(f"num_inputs must be >= 1, got {self.num_inputs}")
        if self.output_preset not in (0, 1):
            raise ParameterError(f"output_preset must be 0 or 1, got {self.output_preset}")
        if self.r_series < 0:
            raise ParameterError(f"r_series must be >= 0, got {self.r_series}")


@dataclass(frozen=True)
class OperatingPoint:
    """Solved electrical state of one logic step."""

    v_out: float
    r_in_eq: float
    i_total: float
    per_input_bias: tuple[float, ...]


@dataclass(frozen=True)
class GateResponse:
    """Mean output level and accuracy of a gate at one drive voltage."""

    gate: str
    v_logic: float
    pulse_width: float
    per_state_dout: dict[str, float]
    per_state_accuracy: dict[str, float]
    mean_accuracy: float
    worst_accuracy: float


def solve_operating_point(
    input_states,
    output_state: MtjState,
    cfg: LogicStepConfig,
    params: MtjParams,
    input_params=None,
    output_params: MtjParams | None = None,
) -> OperatingPoint:
    """Self-consistent divider solution for one step.

    ``input_params``/``output_params`` override the shared device parameters
    per cell when the row is heterogeneous.
    """
    states = list(input_states)
    if len(states) != cfg.num_inputs:
        raise ConfigError(
            f"expected {cfg.num_inputs} input states, got {len(states)}"
        )
    if input_params is not None and len(input_params) != len(states):
        raise ConfigError("input_params length must match input_states")
    out_p = output_params if output_params is not None else params

    v_drive = abs(cfg.v_logic)
    sign = 1.0 if cfg.v_logic >= 0 else -1.0
    rs = cfg.r_series

    def junction_r(k, bias):
        p = params if input_params is None else input_params[k]
        return device.resistance(p, states[k], bias)

    # damped fixed-point on the logic-line node voltage, every junction
    # resistance evaluated at its own bias from the previous iterate
    r_j = [junction_r(k, 0.0) for k in range(len(states))]
    r_out_j = device.resistance(out_p, output_state, 0.0)
    g_in = sum(1.0 / (r + rs) for r in r_j)
    v_ll = v_drive * (r_out_j + rs) / (1.0 / g_in + r_out_j + rs)
    v_o = v_ll * r_out_j / (r_out_j + rs)
    b_in = [(v_drive - v_ll) * r / (r + rs) for r in r_j]
    for _ in range(_MAX_ITER):
        r_j = [junction_r(k, b_in[k]) for k in range(len(states))]
        r_out_j = device.resistance(out_p, output_state, v_o)
        g_in = sum(1.0 / (r + rs) for r in r_j)
        v_ll_new = v_drive * (r_out_j + rs) / (1.0 / g_in + r_out_j + rs)
        converged = abs(v_ll_new - v_ll) < _ITER_TOL
        v_ll = v_ll_new if converged else (
            (1.0 - _DAMPING) * v_ll + _DAMPING * v_ll_new)
        v_o = v_ll * r_out_j / (r_out_j + rs)
        b_in = [(v_drive - v_ll) * r / (r + rs) for r in r_j]
        if converged:
            break
    else:
        raise SolverError(
            "operating point did not converge", residual=abs(v_ll_new - v_ll)
        )

    r_in_eq = 1.0 / g_in
    return OperatingPoint(
        v_out=sign * v_o,
        r_in_eq=r_in_eq,
        i_total=sign * (v_drive - v_ll) / r_in_eq,
        per_input_bias=tuple(sign * b for b in b_in),
    )


def _vout_grid(n_p: int, n_ap: int, output_state: MtjState,
               v_drive_abs: np.ndarray, params: MtjParams,
               r_series: float = 0.0) -> np.ndarray:
    """Vectorized output-junction |voltage| over a grid of drive magnitudes,
    identical devices."""
    v_drive_abs = np.asarray(v_drive_abs, dtype=float)
    rs = r_series
    r_out_j = device.resistance(params, output_state, 0.0)
    g_in0 = n_p / (params.r_p0 + rs) + n_ap / (params.r_ap0 + rs)
    v_ll = v_drive_abs * (r_out_j + rs) / (1.0 / g_in0 + r_out_j + rs)
    v_o = v_ll * r_out_j / (r_out_j + rs)
    b_ap = (v_drive_abs - v_ll) * params.r_ap0 / (params.r_ap0 + rs)
    for _ in range(_MAX_ITER):
        g_in = n_p / (params.r_p0 + rs)
        if n_ap:
            r_ap_j = device.resistance(params, MtjState.AP, b_ap)
            g_in = g_in + n_ap / (r_ap_j + rs)
        r_out_j = device.resistance(params, output_state, v_o)
        v_ll_new = v_drive_abs * (r_out_j + rs) / (1.0 / g_in + r_out_j + rs)
        converged = np.max(np.abs(v_ll_new - v_ll)) < _ITER_TOL
        v_ll = v_ll_new if converged else (
            (1.0 - _DAMPING) * v_ll + _DAMPING * v_ll_new)
        v_o = v_ll * r_out_j / (r_out_j + rs)
        if n_ap:
            b_ap = (v_drive_abs - v_ll) * r_ap_j / (r_ap_j + rs)
        if converged:
            return v_o
    raise SolverError("grid operating points did not converge",
                      residual=float(np.max(np.abs(v_ll_new - v_ll))))


def dout_mean(input_states, cfg: LogicStepConfig, params: MtjParams,
              input_params=None, output_params: MtjParams | None = None) -> float:
    """Mean logic level of the output cell after the step.

    The output cell starts at the preset; the solved bias either switches it
    (preset 0: reads 1 with the switch probability) or fails to hold it
    (preset 1: reads 1 with the complement).
    """
    preset_state = MtjState.from_bit(cfg.output_preset)
    op = solve_operating_point(input_states, preset_state, cfg, params,
                               input_params, output_params)
    out_p = output_params if output_params is not None else params
    p_sw = device.switch_probability(out_p, preset_state, op.v_out, cfg.pulse_width)
    return p_sw if cfg.output_preset == 0 else 1.0 - p_sw


@dataclass(frozen=True)
class GateSweep:
    """Per-state response of a gate across a drive-voltage grid."""

    gate: str
    pulse_width: float
    v_logic: np.ndarray            # signed grid
    dout: np.ndarray               # (n_states, n_grid)
    error: np.ndarray              # (n_states, n_grid)
    mean_error: np.ndarray = field(init=False)
    worst_error: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mean_error", self.error.mean(axis=0))
        object.__setattr__(self, "worst_error", self.error.max(axis=0))

    def response_at(self, idx: int) -> GateResponse:
        kind = logic.gate_kind(self.gate)
        dout = {
            logic.state_string(s, kind.arity): float(self.dout[s, idx])
            for s in range(2**kind.arity)
        }
        acc = {
            logic.state_string(s, kind.arity): float(1.0 - self.error[s, idx])
            for s in range(2**kind.arity)
        }
        return GateResponse(
            gate=kind.name,
            v_logic=float(self.v_logic[idx]),
            pulse_width=self.pulse_width,
            per_state_dout=dout,
            per_state_accuracy=acc,
            mean_accuracy=float(1.0 - self.mean_error[idx]),
            worst_accuracy=float(1.0 - self.worst_error[idx]),
        )


def sweep_gate(gate: str, params: MtjParams, pulse_width: float,
               v_abs: np.ndarray, r_series: float = 0.0) -> GateSweep:
    """Evaluate a gate's response over a grid of drive magnitudes.

    The grid is interpreted in the gate's canonical polarity.  Identical
    devices make states with equal numbers of AP inputs electrically
    equivalent, so operating points are solved once per weight group.
    """
    kind = logic.gate_kind(gate)
    v_abs = np.asarray(v_abs, dtype=float)
    if v_abs.size == 0:
        raise ConfigError("empty drive-voltage grid")
    preset_state = MtjState.from_bit(kind.preset)

    vout_by_weight = {}
    for w in range(kind.arity + 1):
        vout_by_weight[w] = _vout_grid(kind.arity - w, w, preset_state, v_abs,
                                       params, r_series)

    n_states = 2**kind.arity
    dout = np.empty((n_states, v_abs.size))
    error = np.empty_like(dout)
    signed_v = kind.sign * v_abs
    for s in range(n_states):
        bits = logic.state_bits(s, kind.arity)
        v_out = kind.sign * vout_by_weight[sum(bits)]
        p_sw = device.switch_probability(params, preset_state, v_out, pulse_width)
        d = p_sw if kind.preset == 0 else 1.0 - p_sw
        dout[s] = d
        # error is the distance to the ideal output; expressed through the
        # switch probability directly to avoid cancellation at tiny rates
        expects_one = logic.ideal_output(kind.name, bits) == 1
        if kind.preset == 0:
            error[s] = (1.0 - p_sw) if expects_one else p_sw
        else:
            error[s] = p_sw if expects_one else (1.0 - p_sw)
    return GateSweep(gate=kind.name, pulse_width=pulse_width,
                     v_logic=signed_v, dout=dout, error=error)


def gate_accuracy(gate: str, cfg: LogicStepConfig, params: MtjParams) -> GateResponse:
    """Per-state accuracy of a gate at one electrical configuration."""
    kind = logic.gate_kind(gate)
    if cfg.num_inputs != kind.arity:
        raise ConfigError(
            f"{kind.name} has arity {kind.arity}, config says {cfg.num_inputs}"
        )
    if cfg.output_preset != kind.preset:
        raise ConfigError(
            f"{kind.name} requires output preset {kind.preset}, got {cfg.output_preset}"
        )
    sweep = sweep_gate(gate, params, cfg.pulse_width,
                       np.array([abs(cfg.v_logic)]), cfg.r_series)
    return sweep.response_at(0)


def optimize_vlogic(
    gate: str,
    params: MtjParams,
    pulse_width: float,
    objective: str = "mean",
    v_range: tuple[float, float] = DEFAULT_V_RANGE,
    v_resolution: float = DEFAULT_V_RESOLUTION,
    r_series: float = 0.0,
) -> tuple[float, GateResponse]:
    """Scan the drive voltage and return (v_star, response at v_star).

    ``objective`` maximizes the mean or the worst per-state accuracy; ties
    resolve toward the smaller drive magnitude.
    """
    if objective not in ("mean", "worst"):
        raise ConfigError(f"objective must be 'mean' or 'worst', got {objective!r}")
    lo, hi = v_range
    if not (hi > lo >= 0.0) or not v_resolution > 0:
        raise ConfigError(f"invalid scan range {v_range} at resolution {v_resolution}")
    v_abs = np.arange(lo, hi + 0.5 * v_resolution, v_resolution)
    sweep = sweep_gate(gate, params, pulse_width, v_abs, r_series)
    series = sweep.mean_error if objective == "mean" else sweep.worst_error
    idx = int(np.argmin(series))  # first minimum = smallest |v|
    return float(sweep.v_logic[idx]), sweep.response_at(idx)


def min_gate_error(
    gate: str,
    params: MtjParams,
    pulse_width: float,
    objective: str = "worst",
    v_range: tuple[float, float] = DEFAULT_V_RANGE,
    v_resolution: float = DEFAULT_V_RESOLUTION,
    r_series: float = 0.0,
) -> tuple[float, float]:
    """Minimum achievable gate error over the drive scan: (error, v_star)."""
    v_abs = np.arange(v_range[0], v_range[1] + 0.5 * v_resolution, v_resolution)
    sweep = sweep_gate(gate, params, pulse_width, v_abs, r_series)
    series = sweep.mean_error if objective == "mean" else sweep.worst_error
    idx = int(np.argmin(series))
    return float(series[idx]), float(sweep.v_logic[idx])


def min_nand_error(params: MtjParams, pulse_width: float, **kwargs) -> tuple[float, float]:
    return min_gate_error("NAND", params, pulse_width, **kwargs)


def min_error_vs_tmr(
    gate: str,
    base_params: MtjParams,
    tmr_list,
    pulse_widths,
    objective: str = "worst",
    v_range: tuple[float, float] = DEFAULT_V_RANGE,
    v_resolution: float = DEFAULT_V_RESOLUTION,
) -> list[dict]:
    """Minimum gate error for each (TMR percent, pulse width) combination."""
    rows = []
    for tmr_pct in tmr_list:
        if tmr_pct < 0:
            raise ParameterError(f"TMR percent must be >= 0, got {tmr_pct}")
        scaled = device.scale_tmr(base_params, tmr_pct / 100.0)
        for t_p in pulse_widths:
            err, v_star = min_gate_error(
                gate, scaled, t_p, objective=objective,
                v_range=v_range, v_resolution=v_resolution,
            )
            rows.append({
                "gate": gate,
                "tmr_percent": float(tmr_pct),
                "pulse_width": float(t_p),
                "min_error": err,
                "v_star": v_star,
            })
    return rows


def canonical_config(gate: str, v_abs: float, pulse_width: float) -> LogicStepConfig:
    """Electrical configuration for a gate at a drive magnitude."""
    kind = logic.gate_kind(gate)
    return LogicStepConfig(
        v_logic=kind.sign * abs(v_abs),
        pulse_width=pulse_width,
        output_preset=kind.preset,
        num_inputs=kind.arity,
    )
