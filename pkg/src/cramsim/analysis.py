"""Schedule evaluation: Monte Carlo, exact propagation, NED, accuracy maps.

Monte Carlo runs are vectorized over (input state, trial) lanes with
counter-based random streams keyed by (seed, lane block, step), so results
depend only on the seed and configuration, never on execution order.

The exact evaluator propagates the joint distribution over the live cells
step by step, marginalizing out cells no later step reads; it covers any
schedule whose live frontier stays enumerable and raises CapacityError
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import compiler, logic
from .compiler import Schedule
from .errors import CapacityError, ConfigError, ParameterError, ScheduleError
from .models import GateModel, effective_table

_LANE_BLOCK = 1 << 20     # max lanes simulated at once (fixed; part of the layout)
_UNIT_BLOCK_CAP = 4096    # max input states per block
_SAMPLE_KEY = (2**31 - 1,)  # stream namespace for input sampling


@dataclass(frozen=True)
class SimConfig:
    """Evaluation settings for one schedule run."""

    model: GateModel
    trials: int = 10_000
    seed: int = 0
    write_error_rate: float = 0.0
    input_samples: int = 10_000
    fixed_inputs: dict[str, int] = field(default_factory=dict)
    max_enumeration_bits: int = 16

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if not (0.0 <= self.write_error_rate <= 1.0):
            raise ParameterError(
                f"write_error_rate must be in [0,1], got {self.write_error_rate}"
            )


@dataclass
class Distributions:
    """Output-value distributions per evaluated input state."""

    per_input: dict[int, dict[int, float]]
    free_ports: tuple[str, ...]
    fixed_inputs: dict[str, int]
    enumerated: bool
    method: str
    trials: int | None = None


@dataclass
class NedReport:
    """Error-distance statistics of one circuit evaluation."""

    mean_error_distance: float
    ned: float
    ned_accuracy: float
    output_bits: int
    inputs_evaluated: int
    enumerated: bool
    method: str
    trials: int | None
    per_state_distributions: dict[int, dict[int, float]]


def free_input_ports(schedule: Schedule, fixed_inputs: dict[str, int]) -> tuple[str, ...]:
    unknown = set(fixed_inputs) - set(schedule.input_ports)
    if unknown:
        raise ScheduleError(f"fixed inputs name unknown ports: {sorted(unknown)}")
    return tuple(n for n in schedule.input_order if n not in fixed_inputs)


def input_bits_for_key(schedule: Schedule, key: int,
                       fixed_inputs: dict[str, int]) -> dict[str, int]:
    """All input-port bits for one enumeration key (free ports LSB-first)."""
    bits = dict(fixed_inputs)
    for pos, name in enumerate(free_input_ports(schedule, fixed_inputs)):
        bits[name] = (key >> pos) & 1
    return {name: int(b) & 1 for name, b in bits.items()}


def select_input_keys(schedule: Schedule, cfg: SimConfig) -> tuple[list[int], bool]:
    """Enumerate the free input space, or sample it when too large."""
    free = free_input_ports(schedule, cfg.fixed_inputs)
    n_free = len(free)
    if n_free <= cfg.max_enumeration_bits:
        return list(range(2**n_free)), True
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=_SAMPLE_KEY)))
    keys = rng.integers(0, 2**n_free, size=cfg.input_samples, dtype=np.uint64)
    return [int(k) for k in keys], False


def arithmetic_oracle(schedule: Schedule):
    """Exact integer function of the circuit, built from schedule metadata."""
    meta = schedule.meta
    func = meta.get("function")
    operands = meta.get("operands")
    if func not in ("add", "mul", "dot") or operands is None:
        raise ScheduleError("schedule metadata does not define an arithmetic function")

    def operand_value(ports, bits):
        return sum(bits[p] << i for i, p in enumerate(ports))

    def fn(key: int, fixed: dict[str, int]) -> int:
        bits = input_bits_for_key(schedule, key, fixed)
        if func == "add":
            total = operand_value(operands["a"], bits) + operand_value(operands["b"], bits)
            if "cin" in operands:
                total += operand_value(operands["cin"], bits)
            return total
        if func == "mul":
            return operand_value(operands["a"], bits) * operand_value(operands["b"], bits)
        return sum(
            operand_value(ae, bits) * operand_value(be, bits)
            for ae, be in zip(operands["a"], operands["b"])
        )

    return fn


def ideal_outputs(schedule: Schedule, key: int,
                  fixed_inputs: dict[str, int]) -> dict[str, int]:
    """Error-free execution of the schedule for one input state."""
    bits = [0] * schedule.cell_count
    for name, b in input_bits_for_key(schedule, key, fixed_inputs).items():
        bits[schedule.input_ports[name]] = b
    for step in schedule.steps:
        bits[step.output_cell] = logic.ideal_output(
            step.gate, [bits[c] for c in step.input_cells]
        )
    return {name: bits[cell] for name, cell in schedule.output_ports.items()}


def _prepared_steps(schedule: Schedule, model: GateModel, write_error_rate: float):
    arrays = model.step_arrays(schedule)
    prepared = []
    for step, arr in zip(schedule.steps, arrays):
        prepared.append((
            step.input_cells,
            step.output_cell,
            effective_table(arr, step.preset, write_error_rate),
        ))
    return prepared


def _require_valid(schedule: Schedule) -> None:
    issues = compiler.validate_schedule(schedule)
    if issues:
        raise ScheduleError(f"invalid schedule: {issues}")


def monte_carlo(schedule: Schedule, cfg: SimConfig,
                input_keys: list[int] | None = None) -> Distributions:
    """Empirical output histograms over `trials` runs per input state."""
    _require_valid(schedule)
    free = free_input_ports(schedule, cfg.fixed_inputs)
    if input_keys is None:
        keys, enumerated = select_input_keys(schedule, cfg)
    else:
        keys, enumerated = list(input_keys), False

    prepared = _prepared_steps(schedule, cfg.model, cfg.write_error_rate)
    out_cells = [schedule.output_ports[name] for name in schedule.output_order]
    out_bits = len(out_cells)
    n_units = len(keys)
    trials = cfg.trials

    # input bits per unit, full port set
    port_cells = [schedule.input_ports[name] for name in schedule.input_order]
    unit_bits = np.zeros((n_units, len(port_cells)), dtype=np.uint8)
    for u, key in enumerate(keys):
        bits = input_bits_for_key(schedule, key, cfg.fixed_inputs)
        for k, name in enumerate(schedule.input_order):
            unit_bits[u, k] = bits[name]

    block_units = max(1, min(n_units, _LANE_BLOCK // max(trials, 1), _UNIT_BLOCK_CAP))
    counts = np.zeros((n_units, 2**out_bits), dtype=np.int64)

    for block, start in enumerate(range(0, n_units, block_units)):
        stop = min(start + block_units, n_units)
        bu = stop - start
        cells = np.zeros((schedule.cell_count, bu, trials), dtype=np.uint8)
        block_in = unit_bits[start:stop]  # (bu, n_ports)
        if cfg.write_error_rate > 0.0:
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(block, 0))))
            flips = rng.random((bu, len(port_cells), trials)) < cfg.write_error_rate
            written = block_in[:, :, None] ^ flips.astype(np.uint8)
        else:
            written = np.broadcast_to(block_in[:, :, None], (bu, len(port_cells), trials))
        for k, cell in enumerate(port_cells):
            cells[cell] = written[:, k]

        for s, (in_cells, out_cell, table) in enumerate(prepared):
            idx = np.zeros((bu, trials), dtype=np.int16)
            for c in in_cells:
                idx = (idx << 1) | cells[c]
            p = table[idx]
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(block, s + 1))))
            cells[out_cell] = rng.random((bu, trials)) < p

        values = np.zeros((bu, trials), dtype=np.int64)
        for pos, cell in enumerate(out_cells):
            values |= cells[cell].astype(np.int64) << pos
        flat = (np.arange(bu, dtype=np.int64)[:, None] << out_bits) | values
        hist = np.bincount(flat.ravel(), minlength=bu << out_bits)
        counts[start:stop] += hist.reshape(bu, 1 << out_bits)

    per_input = {}
    for u, key in enumerate(keys):
        nz = np.nonzero(counts[u])[0]
        per_input[int(key)] = {int(v): counts[u, v] / trials for v in nz}
    return Distributions(
        per_input=per_input, free_ports=free, fixed_inputs=dict(cfg.fixed_inputs),
        enumerated=enumerated, method="monte_carlo", trials=trials,
    )


def _keep_masks(schedule: Schedule) -> list[int]:
    """Bitmask of cells still needed after each step (read later or ported)."""
    running = 0
    for c in schedule.output_ports.values():
        running |= 1 << c
    keep = [0] * len(schedule.steps)
    for i in range(len(schedule.steps) - 1, -1, -1):
        keep[i] = running
        for c in schedule.steps[i].input_cells:
            running |= 1 << c
    return keep


def exact_distribution(schedule: Schedule, model: GateModel,
                       fixed_inputs: dict[str, int] | None = None,
                       input_keys: list[int] | None = None,
                       write_error_rate: float = 0.0,
                       seed: int = 0,
                       input_samples: int = 10_000,
                       max_enumeration_bits: int = 16,
                       max_support: int = 1 << 16) -> Distributions:
    """Exact per-input output distributions by live-frontier propagation.

    States are bitmasks over the row; each step splits the mass by its
    output table, and cells no later step reads are projected out, which
    keeps the support equal to the live frontier.  Total mass is checked to
    stay within 1e-9 of unity.  Raises CapacityError if the support would
    exceed ``max_support`` states.
    """
    _require_valid(schedule)
    fixed_inputs = dict(fixed_inputs or {})
    cfg = SimConfig(model=model, trials=1, seed=seed,
                    write_error_rate=write_error_rate,
                    input_samples=input_samples,
                    fixed_inputs=fixed_inputs,
                    max_enumeration_bits=max_enumeration_bits)
    if input_keys is None:
        keys, enumerated = select_input_keys(schedule, cfg)
    else:
        keys, enumerated = list(input_keys), False

    free = free_input_ports(schedule, fixed_inputs)
    prepared = _prepared_steps(schedule, model, write_error_rate)
    keep_masks = _keep_masks(schedule)
    plans = []
    for i, (in_cells, out_cell, table) in enumerate(prepared):
        plans.append((
            tuple(in_cells),
            1 << out_cell,
            keep_masks[i] & ~(1 << out_cell),
            [float(p) for p in table],
        ))

    out_cells = [schedule.output_ports[n] for n in schedule.output_order]
    input_cells = [schedule.input_ports[n] for n in schedule.input_order]

    per_input: dict[int, dict[int, float]] = {}
    for key in keys:
        bits = input_bits_for_key(schedule, key, fixed_inputs)
        base = 0
        for name in schedule.input_order:
            base |= bits[name] << schedule.input_ports[name]
        if write_error_rate > 0.0:
            if 2 ** len(input_cells) > max_support:
                raise CapacityError(
                    f"write-error branching over {len(input_cells)} inputs "
                    f"exceeds the support cap"
                )
            w = write_error_rate
            support = {base: 1.0}
            for c in input_cells:
                support = {
                    s ^ (flip << c): p * (w if flip else 1.0 - w)
                    for s, p in support.items() for flip in (0, 1)
                }
        else:
            support = {base: 1.0}

        for in_cells, out_mask, carry_mask, table in plans:
            new_support: dict[int, float] = {}
            get = new_support.get
            for state, prob in support.items():
                idx = 0
                for c in in_cells:
                    idx = (idx << 1) | ((state >> c) & 1)
                p_one = table[idx]
                kept = state & carry_mask
                if p_one > 0.0:
                    s1 = kept | out_mask
                    new_support[s1] = get(s1, 0.0) + prob * p_one
                if p_one < 1.0:
                    new_support[kept] = get(kept, 0.0) + prob * (1.0 - p_one)
            support = new_support
            if len(support) > max_support:
                raise CapacityError(
                    f"support grew to {len(support)} states "
                    f"(cap {max_support}); use monte_carlo instead"
                )
            total = sum(support.values())
            if abs(total - 1.0) > 1e-9:
                raise ScheduleError(
                    f"probability mass drifted to {total!r} during propagation"
                )

        dist: dict[int, float] = {}
        for state, prob in support.items():
            value = 0
            for pos, c in enumerate(out_cells):
                value |= ((state >> c) & 1) << pos
            dist[value] = dist.get(value, 0.0) + prob
        per_input[int(key)] = dist

    return Distributions(
        per_input=per_input, free_ports=free, fixed_inputs=fixed_inputs,
        enumerated=enumerated, method="exact", trials=None,
    )


def ned(distributions: Distributions, exact_fn, output_bits: int) -> NedReport:
    """Normalized error distance of the evaluated distributions.

    The mean error distance averages the expected |decoded - exact| over the
    evaluated input states with uniform weight; the maximum representable
    error 2**output_bits - 1 normalizes it.
    """
    if output_bits < 1:
        raise ParameterError(f"output_bits must be >= 1, got {output_bits}")
    if not distributions.per_input:
        raise ParameterError("no input states were evaluated")
    d_max = 2**output_bits - 1
    med = []
    for key, dist in distributions.per_input.items():
        exact = exact_fn(key, distributions.fixed_inputs)
        med.append(math.fsum(p * abs(v - exact) for v, p in dist.items()))
    mean_ed = float(np.mean(med))
    n = mean_ed / d_max
    return NedReport(
        mean_error_distance=mean_ed,
        ned=n,
        ned_accuracy=(1.0 - n) * 100.0,
        output_bits=output_bits,
        inputs_evaluated=len(distributions.per_input),
        enumerated=distributions.enumerated,
        method=distributions.method,
        trials=distributions.trials,
        per_state_distributions=distributions.per_input,
    )


@dataclass
class AccuracyMap:
    """Per-input-state, per-output-port accuracy of a schedule."""

    rows: list[tuple[str, str, float]]      # (input bits string, port, accuracy)
    overall: float
    per_input_mean: dict[str, float]
    method: str
    trials: int | None

    def accuracy(self, input_state: str, port: str) -> float:
        for state, p, acc in self.rows:
            if state == input_state and p == port:
                return acc
        raise KeyError((input_state, port))


def accuracy_map(schedule: Schedule, cfg: SimConfig,
                 method: str = "monte_carlo") -> AccuracyMap:
    """Probability that each output port matches its error-free value."""
    if method == "monte_carlo":
        dist = monte_carlo(schedule, cfg)
    elif method == "exact":
        dist = exact_distribution(
            schedule, cfg.model, fixed_inputs=cfg.fixed_inputs,
            write_error_rate=cfg.write_error_rate, seed=cfg.seed,
            input_samples=cfg.input_samples,
            max_enumeration_bits=cfg.max_enumeration_bits,
        )
    else:
        raise ConfigError(f"unknown accuracy-map method {method!r}")

    free = free_input_ports(schedule, cfg.fixed_inputs)
    rows = []
    per_input_mean = {}
    for key in sorted(dist.per_input):
        bits = input_bits_for_key(schedule, key, cfg.fixed_inputs)
        label = "".join(str(bits[n]) for n in schedule.input_order)
        ideal = ideal_outputs(schedule, key, cfg.fixed_inputs)
        accs = []
        for pos, port in enumerate(schedule.output_order):
            p_match = 0.0
            for value, prob in dist.per_input[key].items():
                if (value >> pos) & 1 == ideal[port]:
                    p_match += prob
            rows.append((label, port, p_match))
            accs.append(p_match)
        per_input_mean[label] = float(np.mean(accs))
    overall = float(np.mean([acc for _, _, acc in rows]))
    return AccuracyMap(rows=rows, overall=overall, per_input_mean=per_input_mean,
                       method=dist.method, trials=dist.trials)


def evaluate_ned(schedule: Schedule, cfg: SimConfig,
                 prefer_exact: bool = True,
                 max_support: int = 1 << 12) -> NedReport:
    """NED of a schedule: exact propagation when tractable, else Monte Carlo.

    The default support cap keeps the exact path to schedules with narrow
    live frontiers (ripple chains); wide reductions fail over to sampling.
    """
    oracle = arithmetic_oracle(schedule)
    output_bits = int(schedule.meta.get("output_bits", len(schedule.output_order)))
    keys, enumerated = select_input_keys(schedule, cfg)
    dist = None
    if prefer_exact:
        try:
            dist = exact_distribution(
                schedule, cfg.model, fixed_inputs=cfg.fixed_inputs,
                input_keys=keys, write_error_rate=cfg.write_error_rate,
                seed=cfg.seed, max_support=max_support,
            )
            dist.enumerated = enumerated
        except CapacityError:
            dist = None
    if dist is None:
        dist = monte_carlo(schedule, cfg, input_keys=keys)
        dist.enumerated = enumerated
    return ned(dist, oracle, output_bits)
