"""Probabilistic gate tables.

A gate is summarized by its probability of producing '1' for each input
state.  Tables come from three places: the single-parameter NAND error model
(error rate delta after drive-voltage tuning equalizes the fallible states),
physics-derived gate responses, or explicit user-supplied tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import logic
from .errors import ConfigError, ParameterError


@dataclass(frozen=True)
class ProbGate:
    """Probability of output '1' per input state (big-endian state index)."""

    kind: str
    arity: int
    p_one: tuple[float, ...]

    def __post_init__(self):
        if len(self.p_one) != 2**self.arity:
            raise ParameterError(
                f"p_one must have {2**self.arity} entries, got {len(self.p_one)}"
            )
        if any(not (0.0 <= p <= 1.0) for p in self.p_one):
            raise ParameterError(f"p_one entries must lie in [0,1]: {self.p_one}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p_one, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "arity": self.arity, "p_one": list(self.p_one)}

    @classmethod
    def from_dict(cls, data: dict) -> "ProbGate":
        return cls(kind=data["kind"], arity=int(data["arity"]),
                   p_one=tuple(float(p) for p in data["p_one"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ProbGate":
        return cls.from_dict(json.loads(text))


def ideal_gate(kind: str) -> ProbGate:
    k = logic.gate_kind(kind)
    return ProbGate(kind=k.name, arity=k.arity, p_one=tuple(logic.ideal_table(kind)))


def nand_from_delta(delta: float) -> ProbGate:
    """Two-input NAND with equalized error rate delta: [1, 1-d, 1-d, d]."""
    if not (0.0 <= delta <= 1.0):
        raise ParameterError(f"delta must be in [0,1], got {delta}")
    return ProbGate("NAND", 2, (1.0, 1.0 - delta, 1.0 - delta, delta))


def not_from_delta(delta: float) -> ProbGate:
    """Inverter with the tied-input column of the delta NAND: [1, d]."""
    if not (0.0 <= delta <= 1.0):
        raise ParameterError(f"delta must be in [0,1], got {delta}")
    return ProbGate("NOT", 1, (1.0, delta))


def and_from_delta(delta: float) -> ProbGate:
    """AND realized as a delta-NAND followed by a delta-NOT, composed exactly."""
    nand = nand_from_delta(delta)
    inv = not_from_delta(delta)
    # P(and=1) = P(nand=0)*P(not=1|0) + P(nand=1)*P(not=1|1)
    p = tuple((1.0 - q) * inv.p_one[0] + q * inv.p_one[1] for q in nand.p_one)
    return ProbGate("AND", 2, p)


def delta_binding(delta: float) -> dict[str, ProbGate]:
    """Per-kind tables for the delta-parameterized projection circuits."""
    return {
        "NAND": nand_from_delta(delta),
        "NOT": not_from_delta(delta),
        "AND": and_from_delta(delta),
    }


def ideal_binding() -> dict[str, ProbGate]:
    return {name: ideal_gate(name) for name in logic.GATE_KINDS}


def delta_from_accuracies(per_state_accuracy) -> float:
    """Collapse 4 per-state NAND accuracies into the single error rate.

    The two mixed states and the all-ones state are equalized by averaging
    their errors; the all-zeros state is taken as exact, matching the tuned
    operating point where it is the first to switch.
    """
    acc = [float(a) for a in per_state_accuracy]
    if len(acc) != 4:
        raise ParameterError(f"expected 4 per-state accuracies, got {len(acc)}")
    if any(not (0.0 <= a <= 1.0) for a in acc):
        raise ParameterError(f"accuracies must lie in [0,1]: {acc}")
    errors = [1.0 - a for a in acc[1:]]
    return float(np.mean(errors))


def gate_from_response(response, kind: str) -> ProbGate:
    """Build a table from a solved gate response (mean output levels)."""
    k = logic.gate_kind(kind)
    p_one = []
    for s in range(2**k.arity):
        key = logic.state_string(s, k.arity)
        if key not in response.per_state_dout:
            raise ConfigError(f"response is missing input state {key!r}")
        p_one.append(float(response.per_state_dout[key]))
    return ProbGate(kind=k.name, arity=k.arity, p_one=tuple(p_one))


def sample_output(gate: ProbGate, inputs, rng: np.random.Generator) -> int:
    """Draw one output bit for the given input bits."""
    bits = tuple(int(b) for b in inputs)
    if len(bits) != gate.arity:
        raise ConfigError(
            f"{gate.kind} has arity {gate.arity}, got {len(bits)} inputs"
        )
    idx = 0
    for b in bits:
        idx = (idx << 1) | (b & 1)
    return int(rng.random() < gate.p_one[idx])
