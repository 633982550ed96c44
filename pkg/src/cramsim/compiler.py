"""Schedule generators for the arithmetic circuits, plus validation.

A schedule is an ordered list of logic steps over a row of cells, with named
input and output ports.  Generators allocate a fresh cell per intermediate
value; ``compact_cells`` optionally remaps to a reuse-after-last-use
allocation.  Serialized form (JSON, version 1):

    {"version": 1, "cell_count": N,
     "input_ports": {name: cell}, "output_ports": {name: cell},
     "input_order": [...], "output_order": [...],
     "steps": [{"gate": kind, "inputs": [cells], "output": cell,
                "preset": bit}, ...],
     "meta": {...}}
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace

from . import logic
from .errors import ParameterError, ScheduleError
from .gates import ProbGate
from .vcl import LogicStepConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LogicStep:
    """One row operation: preset the output cell, then drive the inputs."""

    gate: str
    input_cells: tuple[int, ...]
    output_cell: int
    preset: int
    electrical: LogicStepConfig | None = None
    table: ProbGate | None = None

    def to_dict(self) -> dict:
        d = {
            "gate": self.gate,
            "inputs": list(self.input_cells),
            "output": self.output_cell,
            "preset": self.preset,
        }
        if self.electrical is not None:
            d["electrical"] = {
                "v_logic": self.electrical.v_logic,
                "pulse_width": self.electrical.pulse_width,
            }
            if self.electrical.r_series:
                d["electrical"]["r_series"] = self.electrical.r_series
        if self.table is not None:
            d["table"] = self.table.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LogicStep":
        kind = logic.gate_kind(d["gate"])
        electrical = None
        if "electrical" in d:
            electrical = LogicStepConfig(
                v_logic=float(d["electrical"]["v_logic"]),
                pulse_width=float(d["electrical"]["pulse_width"]),
                output_preset=int(d["preset"]),
                num_inputs=kind.arity,
                r_series=float(d["electrical"].get("r_series", 0.0)),
            )
        table = ProbGate.from_dict(d["table"]) if "table" in d else None
        return cls(
            gate=kind.name,
            input_cells=tuple(int(c) for c in d["inputs"]),
            output_cell=int(d["output"]),
            preset=int(d["preset"]),
            electrical=electrical,
            table=table,
        )


@dataclass(frozen=True)
class Schedule:
    steps: tuple[LogicStep, ...]
    input_ports: dict[str, int]
    output_ports: dict[str, int]
    cell_count: int
    input_order: tuple[str, ...]
    output_order: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    @property
    def gate_counts(self) -> dict[str, int]:
        return dict(Counter(step.gate for step in self.steps))

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "cell_count": self.cell_count,
            "input_ports": dict(self.input_ports),
            "output_ports": dict(self.output_ports),
            "input_order": list(self.input_order),
            "output_order": list(self.output_order),
            "steps": [s.to_dict() for s in self.steps],
            "meta": dict(self.meta),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        if d.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ScheduleError(f"unsupported schedule version {d.get('version')}")
        return cls(
            steps=tuple(LogicStep.from_dict(s) for s in d["steps"]),
            input_ports={str(k): int(v) for k, v in d["input_ports"].items()},
            output_ports={str(k): int(v) for k, v in d["output_ports"].items()},
            cell_count=int(d["cell_count"]),
            input_order=tuple(d.get("input_order", sorted(d["input_ports"]))),
            output_order=tuple(d.get("output_order", sorted(d["output_ports"]))),
            meta=dict(d.get("meta", {})),
        )

    @classmethod
    def loads(cls, text: str) -> "Schedule":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Schedule":
        with open(path) as fh:
            return cls.loads(fh.read())


def validate_schedule(schedule: Schedule) -> list[str]:
    """Structural checks; returns a list of violations (empty means valid)."""
    issues = []
    n = schedule.cell_count
    defined = set(schedule.input_ports.values())
    for name, cell in {**schedule.input_ports, **schedule.output_ports}.items():
        if not (0 <= cell < n):
            issues.append(f"port {name!r} is out of range: cell {cell}")
    for i, step in enumerate(schedule.steps):
        kind = logic.gate_kind(step.gate)
        if len(step.input_cells) != kind.arity:
            issues.append(
                f"step {i}: {kind.name} arity {kind.arity} != "
                f"{len(step.input_cells)} inputs"
            )
        if step.output_cell in step.input_cells:
            issues.append(f"step {i}: self-reference on cell {step.output_cell}")
        if len(set(step.input_cells)) != len(step.input_cells):
            issues.append(f"step {i}: duplicate input cell")
        if step.preset not in (0, 1):
            issues.append(f"step {i}: preset must be 0 or 1, got {step.preset}")
        for c in (*step.input_cells, step.output_cell):
            if not (0 <= c < n):
                issues.append(f"step {i}: cell {c} out of range 0..{n - 1}")
        for c in step.input_cells:
            if c not in defined:
                issues.append(f"step {i}: use-before-def of cell {c}")
        defined.add(step.output_cell)
    for name, cell in schedule.output_ports.items():
        if cell not in defined:
            issues.append(f"output port {name!r} reads unwritten cell {cell}")
    return issues


class _Builder:
    """Incremental schedule construction with fresh-cell allocation."""

    def __init__(self):
        self.steps: list[LogicStep] = []
        self.input_ports: dict[str, int] = {}
        self.input_order: list[str] = []
        self.next_cell = 0

    def input(self, name: str) -> int:
        cell = self.next_cell
        self.next_cell += 1
        self.input_ports[name] = cell
        self.input_order.append(name)
        return cell

    def op(self, gate: str, *inputs: int) -> int:
        kind = logic.gate_kind(gate)
        out = self.next_cell
        self.next_cell += 1
        self.steps.append(LogicStep(
            gate=kind.name,
            input_cells=tuple(inputs),
            output_cell=out,
            preset=kind.preset,
        ))
        return out

    def nand(self, a, b):
        return self.op("NAND", a, b)

    def build(self, output_ports: dict[str, int], output_order,
              meta: dict) -> Schedule:
        meta = dict(meta)
        counts = Counter(s.gate for s in self.steps)
        meta["gate_counts"] = dict(sorted(counts.items()))
        meta["step_count"] = len(self.steps)
        sched = Schedule(
            steps=tuple(self.steps),
            input_ports=dict(self.input_ports),
            output_ports=dict(output_ports),
            cell_count=self.next_cell,
            input_order=tuple(self.input_order),
            output_order=tuple(output_order),
            meta=meta,
        )
        issues = validate_schedule(sched)
        if issues:
            raise ScheduleError(f"generated schedule is invalid: {issues}")
        return sched


def _nand_full_adder(b: _Builder, a: int, x: int, c: int) -> tuple[int, int]:
    """Nine-step NAND full adder; returns (sum, carry-out) cells."""
    t1 = b.nand(a, x)
    t2 = b.nand(a, t1)
    t3 = b.nand(x, t1)
    t4 = b.nand(t2, t3)
    t5 = b.nand(t4, c)
    t6 = b.nand(t4, t5)
    t7 = b.nand(c, t5)
    s = b.nand(t6, t7)
    cout = b.nand(t5, t1)
    return s, cout


def _nand_half_adder(b: _Builder, a: int, x: int) -> tuple[int, int]:
    """Half adder from four NANDs plus an inverter; returns (sum, carry)."""
    t1 = b.nand(a, x)
    t2 = b.nand(a, t1)
    t3 = b.nand(x, t1)
    s = b.nand(t2, t3)
    c = b.op("NOT", t1)
    return s, c


def _maj_full_adder(b: _Builder, a: int, x: int, c: int) -> tuple[int, int]:
    """Majority/inverter full adder; returns (sum, carry-out) cells."""
    cout = b.op("MAJ3", a, x, c)
    n1 = b.op("NOT", cout)
    n2 = b.op("NOT", cout)
    s = b.op("MAJ5", a, x, c, n1, n2)
    return s, cout


def full_adder_maj_not() -> Schedule:
    """One-bit full adder from a MAJ3 carry, two inverters, and a MAJ5 sum."""
    b = _Builder()
    a = b.input("A")
    x = b.input("B")
    c = b.input("C")
    s, cout = _maj_full_adder(b, a, x, c)
    return b.build(
        {"S": s, "Cout": cout}, ("S", "Cout"),
        {"circuit": "full_adder_maj_not", "function": "add",
         "operands": {"a": ["A"], "b": ["B"], "cin": ["C"]}, "output_bits": 2},
    )


def full_adder_all_nand() -> Schedule:
    """One-bit full adder from nine NAND steps."""
    b = _Builder()
    a = b.input("A")
    x = b.input("B")
    c = b.input("C")
    s, cout = _nand_full_adder(b, a, x, c)
    return b.build(
        {"S": s, "Cout": cout}, ("S", "Cout"),
        {"circuit": "full_adder_all_nand", "function": "add",
         "operands": {"a": ["A"], "b": ["B"], "cin": ["C"]}, "output_bits": 2},
    )


def ripple_carry_adder(n_bits: int, design: str = "all-nand") -> Schedule:
    """n-bit ripple-carry adder with carry-in; outputs n+1 sum bits."""
    if not (1 <= n_bits <= 8):
        raise ParameterError(f"adder width must be 1..8, got {n_bits}")
    if design not in ("all-nand", "maj-not"):
        raise ParameterError(f"unknown adder design {design!r}")
    fa = _nand_full_adder if design == "all-nand" else _maj_full_adder
    b = _Builder()
    a_bits = [b.input(f"a{i}") for i in range(n_bits)]
    b_bits = [b.input(f"b{i}") for i in range(n_bits)]
    carry = b.input("cin")
    outs = {}
    order = []
    for i in range(n_bits):
        s, carry = fa(b, a_bits[i], b_bits[i], carry)
        outs[f"s{i}"] = s
        order.append(f"s{i}")
    outs[f"s{n_bits}"] = carry
    order.append(f"s{n_bits}")
    return b.build(
        outs, order,
        {"circuit": "ripple_carry_adder", "function": "add", "n_bits": n_bits,
         "design": design,
         "operands": {"a": [f"a{i}" for i in range(n_bits)],
                      "b": [f"b{i}" for i in range(n_bits)],
                      "cin": ["cin"]},
         "output_bits": n_bits + 1},
    )


def _csa_multiplier(b: _Builder, av: list[int], bv: list[int]) -> list[int]:
    """Carry-save array multiplier over cell lists; returns 2n product cells.

    Partial-product rows are folded in with saved carries; a final ripple
    row resolves the remaining diagonals.  The top position's overflow carry
    is dropped: no exact n x n product reaches bit 2n.
    """
    n = len(av)
    if n == 1:
        prod = b.op("AND", av[0], bv[0])
        inv = b.op("NOT", av[0])
        zero = b.op("AND", av[0], inv)  # constant-zero high bit
        return [prod, zero]

    sums = [b.op("AND", av[j], bv[0]) for j in range(n)]
    carries: list[int | None] = [None] * n
    out = [sums[0]]
    for i in range(1, n):
        new_sums: list[int | None] = [None] * n
        new_carries: list[int | None] = [None] * n
        for j in range(n):
            p = b.op("AND", av[j], bv[i])
            s_in = sums[j + 1] if j + 1 < n else None
            operands = [x for x in (s_in, carries[j]) if x is not None]
            if len(operands) == 2:
                new_sums[j], new_carries[j] = _nand_full_adder(b, p, *operands)
            elif len(operands) == 1:
                new_sums[j], new_carries[j] = _nand_half_adder(b, p, operands[0])
            else:
                new_sums[j] = p  # top corner passes through unchanged
        sums, carries = new_sums, new_carries
        out.append(sums[0])

    ripple = None
    for j in range(n - 1):
        operands = [x for x in (sums[j + 1], carries[j], ripple) if x is not None]
        if len(operands) == 3:
            s, ripple = _nand_full_adder(b, *operands)
        elif len(operands) == 2:
            s, ripple = _nand_half_adder(b, *operands)
        else:
            s, ripple = operands[0], None
        out.append(s)
    top = [x for x in (carries[n - 1], ripple) if x is not None]
    if len(top) == 2:
        s, _ = _nand_half_adder(b, *top)
        out.append(s)
    else:
        out.append(top[0])
    return out


def array_multiplier(n_bits: int) -> Schedule:
    """n x n array multiplier producing 2n product bits."""
    if not (1 <= n_bits <= 6):
        raise ParameterError(f"multiplier width must be 1..6, got {n_bits}")
    b = _Builder()
    a_bits = [b.input(f"a{i}") for i in range(n_bits)]
    b_bits = [b.input(f"b{i}") for i in range(n_bits)]
    product = _csa_multiplier(b, a_bits, b_bits)
    outs = {f"p{i}": c for i, c in enumerate(product)}
    order = tuple(f"p{i}" for i in range(len(product)))
    return b.build(
        outs, order,
        {"circuit": "array_multiplier", "function": "mul", "n_bits": n_bits,
         "operands": {"a": [f"a{i}" for i in range(n_bits)],
                      "b": [f"b{i}" for i in range(n_bits)]},
         "output_bits": 2 * n_bits},
    )


def _nand_vector_adder(b: _Builder, xs: list[int], ys: list[int]) -> list[int]:
    """Equal-width unsigned adder; returns w+1 result cells."""
    assert len(xs) == len(ys)
    s0, carry = _nand_half_adder(b, xs[0], ys[0])
    out = [s0]
    for j in range(1, len(xs)):
        s, carry = _nand_full_adder(b, xs[j], ys[j], carry)
        out.append(s)
    out.append(carry)
    return out


def dot_product(n_bits: int, vec_len: int) -> Schedule:
    """Dot product of two unsigned vectors: element multipliers feeding a
    binary adder tree; output width is 2*n_bits + log2(vec_len)."""
    if vec_len not in (1, 2, 4):
        raise ParameterError(f"vector length must be 1, 2, or 4, got {vec_len}")
    if not (1 <= n_bits <= 5):
        raise ParameterError(f"element width must be 1..5, got {n_bits}")
    b = _Builder()
    a_ports, b_ports = [], []
    a_cells, b_cells = [], []
    for e in range(vec_len):
        a_cells.append([b.input(f"a{e}_{i}") for i in range(n_bits)])
        a_ports.append([f"a{e}_{i}" for i in range(n_bits)])
    for e in range(vec_len):
        b_cells.append([b.input(f"b{e}_{i}") for i in range(n_bits)])
        b_ports.append([f"b{e}_{i}" for i in range(n_bits)])

    values = [_csa_multiplier(b, a_cells[e], b_cells[e]) for e in range(vec_len)]
    while len(values) > 1:
        values = [
            _nand_vector_adder(b, values[k], values[k + 1])
            for k in range(0, len(values), 2)
        ]
    result = values[0]

    outs = {f"p{i}": c for i, c in enumerate(result)}
    order = tuple(f"p{i}" for i in range(len(result)))
    return b.build(
        outs, order,
        {"circuit": "dot_product", "function": "dot", "n_bits": n_bits,
         "vec_len": vec_len,
         "operands": {"a": a_ports, "b": b_ports},
         "output_bits": len(result)},
    )


def compact_cells(schedule: Schedule) -> Schedule:
    """Remap intermediate cells with a reuse-after-last-use allocator.

    Port cells keep dedicated slots; an intermediate cell is recycled once
    no later step reads it.
    """
    last_use: dict[int, int] = {}
    for i, step in enumerate(schedule.steps):
        for c in step.input_cells:
            last_use[c] = i
    pinned = set(schedule.input_ports.values()) | set(schedule.output_ports.values())

    mapping: dict[int, int] = {}
    free: list[int] = []
    next_cell = 0

    def alloc(cell):
        nonlocal next_cell
        if cell in mapping:
            return mapping[cell]
        if free and cell not in pinned:
            mapping[cell] = free.pop()
        else:
            mapping[cell] = next_cell
            next_cell += 1
        return mapping[cell]

    for c in schedule.input_ports.values():
        alloc(c)
    new_steps = []
    for i, step in enumerate(schedule.steps):
        ins = tuple(mapping[c] for c in step.input_cells)
        out = alloc(step.output_cell)
        new_steps.append(replace(step, input_cells=ins, output_cell=out))
        for c in step.input_cells:
            if last_use.get(c) == i and c not in pinned and mapping[c] not in free:
                free.append(mapping[c])
    compacted = Schedule(
        steps=tuple(new_steps),
        input_ports={k: mapping[v] for k, v in schedule.input_ports.items()},
        output_ports={k: mapping[v] for k, v in schedule.output_ports.items()},
        cell_count=next_cell,
        input_order=schedule.input_order,
        output_order=schedule.output_order,
        meta={**schedule.meta, "allocator": "reuse"},
    )
    issues = validate_schedule(compacted)
    if issues:
        raise ScheduleError(f"compaction produced an invalid schedule: {issues}")
    return compacted
