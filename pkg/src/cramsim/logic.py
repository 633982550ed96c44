"""Gate kinds: arity, ideal truth tables, and canonical electrical bands.

State indexing convention: a gate's input state is the tuple of input bits in
argument order; its index is the big-endian integer of that tuple, so for a
2-input gate the states run 00, 01, 10, 11.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class GateKind:
    """A gate kind plus the preset/polarity band that realizes it.

    ``preset`` is the logic value written to the output cell before the
    step; ``sign`` is the polarity of the drive voltage (+1 or -1).
    """

    name: str
    arity: int
    preset: int
    sign: int


GATE_KINDS: dict[str, GateKind] = {
    # 2-input gates: a '0' preset with positive drive switches the output
    # high starting from the lowest-resistance input states (NOR band below
    # the NAND band); the mirrored '1' preset with negative drive realizes
    # OR and AND.
    "NAND": GateKind("NAND", 2, 0, +1),
    "NOR": GateKind("NOR", 2, 0, +1),
    "AND": GateKind("AND", 2, 1, -1),
    "OR": GateKind("OR", 2, 1, -1),
    "MAJ3": GateKind("MAJ3", 3, 1, -1),
    "MAJ5": GateKind("MAJ5", 5, 1, -1),
    "NOT": GateKind("NOT", 1, 0, +1),
    "BUF": GateKind("BUF", 1, 1, -1),
}


def gate_kind(name: str) -> GateKind:
    try:
        return GATE_KINDS[name.upper()]
    except KeyError:
        raise ConfigError(f"unknown gate kind {name!r}") from None


def ideal_output(name: str, bits) -> int:
    """Ideal boolean output of the named gate for the given input bits."""
    kind = gate_kind(name)
    bits = tuple(int(b) for b in bits)
    if len(bits) != kind.arity:
        raise ConfigError(
            f"{kind.name} expects {kind.arity} inputs, got {len(bits)}"
        )
    ones = sum(bits)
    name = kind.name
    if name == "NAND":
        return 0 if ones == kind.arity else 1
    if name == "NOR":
        return 1 if ones == 0 else 0
    if name == "AND":
        return 1 if ones == kind.arity else 0
    if name == "OR":
        return 0 if ones == 0 else 1
    if name in ("MAJ3", "MAJ5"):
        return 1 if ones * 2 > kind.arity else 0
    if name == "NOT":
        return 1 - bits[0]
    return bits[0]  # BUF


def state_bits(index: int, arity: int) -> tuple[int, ...]:
    return tuple((index >> (arity - 1 - k)) & 1 for k in range(arity))


def state_string(index: int, arity: int) -> str:
    return format(index, f"0{arity}b")


def ideal_table(name: str) -> list[float]:
    """Probability-of-one vector of the ideal gate, indexed by input state."""
    kind = gate_kind(name)
    return [
        float(ideal_output(name, state_bits(i, kind.arity)))
        for i in range(2**kind.arity)
    ]
