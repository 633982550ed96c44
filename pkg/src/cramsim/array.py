"""Row of CRAM cells: memory write/read and stepwise logic execution.

Each cell holds a junction (device parameters plus stored state).  A logic
step presets its output cell through the ordinary write path, drives the
inputs, and samples the switch outcome — from the device model or from a
bound probability table.  Rows are single-owner mutable state; concurrent
runs operate on independent rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import compiler, vcl
from .device import DEFAULT_PARAMS, MtjParams, MtjState
from .errors import ConfigError, ScheduleError
from .models import GateModel, _dout_cached

DEVICE_ROW_WIDTH = 7  # width of the demonstrated hardware row


@dataclass
class CramCell:
    params: MtjParams
    stored: MtjState = MtjState.P


@dataclass
class CramRow:
    cells: list[CramCell]
    write_error_rate: float = 0.0
    read_error_rate: float = 0.0

    def __post_init__(self):
        for name in ("write_error_rate", "read_error_rate"):
            rate = getattr(self, name)
            if not (0.0 <= rate <= 1.0):
                raise ConfigError(f"{name} must be in [0,1], got {rate}")

    @classmethod
    def of_width(cls, width: int, params: MtjParams = DEFAULT_PARAMS,
                 **kwargs) -> "CramRow":
        return cls(cells=[CramCell(params) for _ in range(width)], **kwargs)

    @classmethod
    def for_schedule(cls, schedule: compiler.Schedule,
                     params: MtjParams = DEFAULT_PARAMS, **kwargs) -> "CramRow":
        return cls.of_width(schedule.cell_count, params, **kwargs)

    def clone(self) -> "CramRow":
        return CramRow(
            cells=[CramCell(c.params, c.stored) for c in self.cells],
            write_error_rate=self.write_error_rate,
            read_error_rate=self.read_error_rate,
        )

    def snapshot(self) -> dict:
        return {
            "bits": [c.stored.bit for c in self.cells],
            "write_error_rate": self.write_error_rate,
            "read_error_rate": self.read_error_rate,
        }

    def dump_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)


def _check_index(row: CramRow, index: int) -> None:
    if not (0 <= index < len(row.cells)):
        raise ScheduleError(f"cell index {index} out of range 0..{len(row.cells) - 1}")


def mem_write(row: CramRow, cell_index: int, bit: int,
              rng: np.random.Generator) -> CramRow:
    """Write a bit; flips to the complement with the row's write error rate."""
    _check_index(row, cell_index)
    bit = int(bit) & 1
    if row.write_error_rate > 0.0 and rng.random() < row.write_error_rate:
        bit ^= 1
    row.cells[cell_index].stored = MtjState.from_bit(bit)
    return row


def mem_read(row: CramRow, cell_index: int,
             rng: np.random.Generator | None = None) -> int:
    """Read the stored logic value (exact unless a read error rate is set)."""
    _check_index(row, cell_index)
    bit = row.cells[cell_index].stored.bit
    if row.read_error_rate > 0.0:
        if rng is None:
            raise ConfigError("read_error_rate > 0 requires an rng")
        if rng.random() < row.read_error_rate:
            bit ^= 1
    return bit


def execute_step(row: CramRow, step: compiler.LogicStep,
                 rng: np.random.Generator, model: GateModel,
                 step_index: int = 0) -> CramRow:
    """Preset the output cell, then run the logic step.

    Input cells are never mutated.  The preset passes through the ordinary
    write path and therefore sees the write error rate; a mis-preset output
    sits in the state the step's polarity cannot switch and reads back the
    preset's complement.
    """
    _check_index(row, step.output_cell)
    for c in step.input_cells:
        _check_index(row, c)
    if step.output_cell in step.input_cells:
        raise ScheduleError(f"step output cell {step.output_cell} is also an input")

    mem_write(row, step.output_cell, step.preset, rng)
    actual_preset = row.cells[step.output_cell].stored.bit
    if actual_preset != step.preset:
        return row  # stuck at the complement for this step's polarity

    input_bits = [row.cells[c].stored.bit for c in step.input_cells]
    if model.is_physics:
        cfg = step.electrical or model.config_for(step.gate)
        out_cell = row.cells[step.output_cell]
        homogeneous = all(
            row.cells[c].params == out_cell.params for c in step.input_cells
        )
        if homogeneous:
            p_one = _dout_cached(out_cell.params, cfg, tuple(input_bits))
        else:
            p_one = vcl.dout_mean(
                [MtjState.from_bit(b) for b in input_bits], cfg, out_cell.params,
                input_params=[row.cells[c].params for c in step.input_cells],
                output_params=out_cell.params,
            )
    else:
        table = model.table_for_step(step, step_index)
        idx = 0
        for b in input_bits:
            idx = (idx << 1) | b
        p_one = table.p_one[idx]

    bit = int(rng.random() < p_one)
    row.cells[step.output_cell].stored = MtjState.from_bit(bit)
    return row


def execute_schedule(row: CramRow, schedule: compiler.Schedule,
                     input_bits: dict[str, int], rng: np.random.Generator,
                     model: GateModel,
                     row_width: int | None = None) -> dict[str, int]:
    """Write the inputs, run every step in order, read the output ports."""
    issues = compiler.validate_schedule(schedule)
    if issues:
        raise ScheduleError(f"invalid schedule: {issues}")
    missing = set(schedule.input_ports) - set(input_bits)
    if missing:
        raise ScheduleError(f"unbound input ports: {sorted(missing)}")
    if row_width is not None and schedule.cell_count > row_width:
        raise ScheduleError(
            f"schedule needs {schedule.cell_count} cells, row width is {row_width}"
        )
    if len(row.cells) < schedule.cell_count:
        raise ScheduleError(
            f"row has {len(row.cells)} cells, schedule needs {schedule.cell_count}"
        )
    for name in schedule.input_order:
        mem_write(row, schedule.input_ports[name], input_bits[name], rng)
    for i, step in enumerate(schedule.steps):
        execute_step(row, step, rng, model, step_index=i)
    return {
        name: mem_read(row, cell, rng)
        for name, cell in schedule.output_ports.items()
    }
