"""Gate-model bindings: how a schedule step resolves to output probabilities.

A binding is one of: per-kind probability tables, a per-step table list, or
the device-physics path (solved operating point at a per-kind electrical
configuration).  Step-level inline tables override everything.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from . import gates, logic, vcl
from .device import MtjParams, MtjState
from .errors import ConfigError
from .gates import ProbGate
from .vcl import LogicStepConfig


@functools.lru_cache(maxsize=100_000)
def _dout_cached(params: MtjParams, cfg: LogicStepConfig, state_bits: tuple) -> float:
    states = [MtjState.from_bit(b) for b in state_bits]
    return vcl.dout_mean(states, cfg, params)


def physics_table(params: MtjParams, gate: str, cfg: LogicStepConfig) -> ProbGate:
    """Probability table of a gate solved from device physics."""
    kind = logic.gate_kind(gate)
    if cfg.num_inputs != kind.arity:
        raise ConfigError(f"{kind.name} arity {kind.arity} != config {cfg.num_inputs}")
    p_one = tuple(
        _dout_cached(params, cfg, logic.state_bits(s, kind.arity))
        for s in range(2**kind.arity)
    )
    return ProbGate(kind=kind.name, arity=kind.arity, p_one=p_one)


@functools.lru_cache(maxsize=4096)
def _optimized_config(params: MtjParams, pulse_width: float, name: str,
                      objective: str) -> LogicStepConfig:
    kind = logic.gate_kind(name)
    v_star, _ = vcl.optimize_vlogic(kind.name, params, pulse_width,
                                    objective=objective)
    return LogicStepConfig(
        v_logic=v_star, pulse_width=pulse_width,
        output_preset=kind.preset, num_inputs=kind.arity,
    )


def optimized_gate_configs(
    params: MtjParams,
    pulse_width: float,
    kinds,
    objective: str = "mean",
) -> dict[str, LogicStepConfig]:
    """Per-kind electrical configurations at each gate's optimal drive."""
    return {
        logic.gate_kind(name).name:
            _optimized_config(params, pulse_width, logic.gate_kind(name).name,
                              objective)
        for name in kinds
    }


@dataclass(frozen=True)
class GateModel:
    """Resolves schedule steps to probability tables.

    Exactly one of the sources drives unresolved steps: ``tables`` (per gate
    kind), ``per_step`` (aligned with the schedule), or ``params`` together
    with ``gate_configs`` (device physics).  A step's own inline table or
    electrical configuration takes precedence.
    """

    tables: dict[str, ProbGate] = field(default_factory=dict)
    per_step: tuple[ProbGate, ...] | None = None
    params: MtjParams | None = None
    gate_configs: dict[str, LogicStepConfig] = field(default_factory=dict)
    pulse_width: float = 1e-3
    objective: str = "mean"

    @classmethod
    def ideal(cls) -> "GateModel":
        return cls(tables=gates.ideal_binding())

    @classmethod
    def from_delta(cls, delta: float) -> "GateModel":
        return cls(tables=gates.delta_binding(delta))

    @classmethod
    def from_tables(cls, tables: dict[str, ProbGate]) -> "GateModel":
        return cls(tables={logic.gate_kind(k).name: t for k, t in tables.items()})

    @classmethod
    def from_step_tables(cls, step_tables) -> "GateModel":
        return cls(per_step=tuple(step_tables))

    @classmethod
    def physics(cls, params: MtjParams, pulse_width: float = 1e-3,
                objective: str = "mean",
                gate_configs: dict[str, LogicStepConfig] | None = None) -> "GateModel":
        """Device-physics binding; operating points are optimized per gate
        kind on first use unless ``gate_configs`` pins them explicitly."""
        return cls(params=params, gate_configs=dict(gate_configs or {}),
                   pulse_width=pulse_width, objective=objective)

    @property
    def is_physics(self) -> bool:
        return self.params is not None

    def config_for(self, kind_name: str) -> LogicStepConfig:
        if kind_name in self.gate_configs:
            return self.gate_configs[kind_name]
        return _optimized_config(self.params, self.pulse_width, kind_name,
                                 self.objective)

    def table_for_step(self, step, index: int) -> ProbGate:
        """Probability table governing one schedule step."""
        inline = getattr(step, "table", None)
        if inline is not None:
            return inline
        if self.per_step is not None:
            if index >= len(self.per_step):
                raise ConfigError(
                    f"per-step table list has {len(self.per_step)} entries, "
                    f"step index {index} requested"
                )
            return self.per_step[index]
        kind = logic.gate_kind(step.gate)
        if self.params is not None:
            cfg = getattr(step, "electrical", None) or self.config_for(kind.name)
            return physics_table(self.params, kind.name, cfg)
        if kind.name not in self.tables:
            raise ConfigError(f"no table bound for gate kind {kind.name}")
        table = self.tables[kind.name]
        if table.arity != kind.arity:
            raise ConfigError(
                f"table bound to {kind.name} has arity {table.arity}, "
                f"expected {kind.arity}"
            )
        return table

    def step_arrays(self, schedule) -> list[np.ndarray]:
        """Per-step p(one) arrays for the vectorized executors."""
        return [
            self.table_for_step(step, i).as_array()
            for i, step in enumerate(schedule.steps)
        ]


def effective_table(p_one: np.ndarray, preset: int, write_error_rate: float) -> np.ndarray:
    """Fold the preset-write error into a step table.

    A mis-preset output cell sits in the state the step's polarity cannot
    switch, so it reads back the complement of the intended preset no matter
    what the inputs are.
    """
    if write_error_rate == 0.0:
        return p_one
    w = write_error_rate
    return (1.0 - w) * p_one + w * (1.0 - preset)
