import numpy as np
import pytest

from cramsim import analysis, compiler
from cramsim.compiler import LogicStep, Schedule
from cramsim.errors import ParameterError, ScheduleError


def eval_ideal(sched, key):
    out = analysis.ideal_outputs(sched, key, {})
    return sum(out[name] << i for i, name in enumerate(sched.output_order))


def operand(sched, key, ports):
    bits = analysis.input_bits_for_key(sched, key, {})
    return sum(bits[p] << i for i, p in enumerate(ports))


class TestFullAdders:
    def test_maj_not_structure(self):
        sched = compiler.full_adder_maj_not()
        kinds = [s.gate for s in sched.steps]
        assert kinds == ["MAJ3", "NOT", "NOT", "MAJ5"]
        assert sched.cell_count == 7
        assert not compiler.validate_schedule(sched)

    def test_all_nand_structure(self):
        sched = compiler.full_adder_all_nand()
        assert len(sched.steps) == 9
        assert all(s.gate == "NAND" for s in sched.steps)
        assert not compiler.validate_schedule(sched)

    @pytest.mark.parametrize("make", [compiler.full_adder_maj_not,
                                      compiler.full_adder_all_nand])
    def test_exhaustive_truth_table(self, make):
        sched = make()
        for key in range(8):
            bits = analysis.input_bits_for_key(sched, key, {})
            total = bits["A"] + bits["B"] + bits["C"]
            assert eval_ideal(sched, key) == total

    def test_specific_cases(self):
        maj = compiler.full_adder_maj_not()
        nand = compiler.full_adder_all_nand()
        assert analysis.ideal_outputs(maj, 0b000, {}) == {"S": 0, "Cout": 0}
        assert analysis.ideal_outputs(nand, 0b000, {}) == {"S": 0, "Cout": 0}
        # A=1, B=0, C=1 -> S=0, Cout=1 (key bit order follows input_order)
        key = 0b101
        bits = analysis.input_bits_for_key(nand, key, {})
        assert (bits["A"], bits["B"], bits["C"]) == (1, 0, 1)
        assert analysis.ideal_outputs(nand, key, {}) == {"S": 0, "Cout": 1}


class TestRippleCarryAdder:
    def test_single_bit_carry(self):
        sched = compiler.ripple_carry_adder(1)
        key = 0b011  # a0=1, b0=1, cin=0
        assert eval_ideal(sched, key) == 2

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_exhaustive(self, n):
        sched = compiler.ripple_carry_adder(n)
        for key in range(2 ** (2 * n + 1)):
            a = operand(sched, key, [f"a{i}" for i in range(n)])
            b = operand(sched, key, [f"b{i}" for i in range(n)])
            cin = operand(sched, key, ["cin"])
            assert eval_ideal(sched, key) == a + b + cin

    @pytest.mark.parametrize("n", [5, 6])
    def test_sampled_wide(self, n):
        sched = compiler.ripple_carry_adder(n)
        rng = np.random.default_rng(n)
        for key in rng.integers(0, 2 ** (2 * n + 1), 300):
            key = int(key)
            a = operand(sched, key, [f"a{i}" for i in range(n)])
            b = operand(sched, key, [f"b{i}" for i in range(n)])
            cin = operand(sched, key, ["cin"])
            assert eval_ideal(sched, key) == a + b + cin

    def test_maj_not_design(self):
        sched = compiler.ripple_carry_adder(2, design="maj-not")
        assert {"MAJ3", "MAJ5", "NOT"} == set(sched.gate_counts)
        for key in range(32):
            a = operand(sched, key, ["a0", "a1"])
            b = operand(sched, key, ["b0", "b1"])
            cin = operand(sched, key, ["cin"])
            assert eval_ideal(sched, key) == a + b + cin

    def test_width_limits(self):
        with pytest.raises(ParameterError):
            compiler.ripple_carry_adder(0)
        with pytest.raises(ParameterError):
            compiler.ripple_carry_adder(9)
        with pytest.raises(ParameterError):
            compiler.ripple_carry_adder(4, design="xor-tree")


class TestArrayMultiplier:
    def test_small_product(self):
        sched = compiler.array_multiplier(2)
        key = 0b1111  # 3 * 3
        assert eval_ideal(sched, key) == 9

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_exhaustive(self, n):
        sched = compiler.array_multiplier(n)
        for key in range(2 ** (2 * n)):
            a = operand(sched, key, [f"a{i}" for i in range(n)])
            b = operand(sched, key, [f"b{i}" for i in range(n)])
            assert eval_ideal(sched, key) == a * b

    @pytest.mark.parametrize("n", [5, 6])
    def test_sampled_wide(self, n):
        sched = compiler.array_multiplier(n)
        rng = np.random.default_rng(n)
        for key in rng.integers(0, 2 ** (2 * n), 300):
            key = int(key)
            a = operand(sched, key, [f"a{i}" for i in range(n)])
            b = operand(sched, key, [f"b{i}" for i in range(n)])
            assert eval_ideal(sched, key) == a * b

    def test_width_limits(self):
        with pytest.raises(ParameterError):
            compiler.array_multiplier(0)
        with pytest.raises(ParameterError):
            compiler.array_multiplier(7)


class TestDotProduct:
    def test_worked_example(self):
        sched = compiler.dot_product(2, 2)
        bits = {"a0_0": 1, "a0_1": 0, "a1_0": 0, "a1_1": 1,
                "b0_0": 1, "b0_1": 1, "b1_0": 1, "b1_1": 0}
        key = 0
        for pos, name in enumerate(sched.input_order):
            key |= bits[name] << pos
        # (1,2) . (3,1) = 5
        assert eval_ideal(sched, key) == 5

    @pytest.mark.parametrize("n,k", [(1, 1), (2, 2), (3, 4), (4, 4)])
    def test_sampled_against_arithmetic(self, n, k):
        sched = compiler.dot_product(n, k)
        rng = np.random.default_rng(n * 10 + k)
        oracle = analysis.arithmetic_oracle(sched)
        for key in rng.integers(0, 2 ** (2 * n * k), 200):
            key = int(key)
            assert eval_ideal(sched, key) == oracle(key, {})

    def test_output_width(self):
        import math
        for n, k in ((2, 2), (4, 4), (3, 1)):
            sched = compiler.dot_product(n, k)
            assert sched.meta["output_bits"] == 2 * n + int(math.log2(k))

    def test_degenerate_tree_matches_multiplier_gates(self):
        dot = compiler.dot_product(3, 1)
        mult = compiler.array_multiplier(3)
        assert dot.gate_counts == mult.gate_counts

    def test_shape_limits(self):
        with pytest.raises(ParameterError):
            compiler.dot_product(4, 3)
        with pytest.raises(ParameterError):
            compiler.dot_product(6, 2)


class TestValidateSchedule:
    def test_generated_schedules_valid(self):
        for sched in (compiler.full_adder_maj_not(),
                      compiler.full_adder_all_nand(),
                      compiler.ripple_carry_adder(3),
                      compiler.array_multiplier(3),
                      compiler.dot_product(2, 4)):
            assert compiler.validate_schedule(sched) == []

    def test_use_before_def(self):
        sched = Schedule(
            steps=(LogicStep("NAND", (0, 2), 3, 0),),
            input_ports={"a": 0, "b": 1}, output_ports={"y": 3},
            cell_count=4, input_order=("a", "b"), output_order=("y",))
        issues = compiler.validate_schedule(sched)
        assert any("use-before-def" in i for i in issues)

    def test_self_reference(self):
        sched = Schedule(
            steps=(LogicStep("NAND", (0, 1), 1, 0),),
            input_ports={"a": 0, "b": 1}, output_ports={"y": 1},
            cell_count=2, input_order=("a", "b"), output_order=("y",))
        issues = compiler.validate_schedule(sched)
        assert any("self-reference" in i for i in issues)

    def test_unwritten_output_port(self):
        sched = Schedule(
            steps=(), input_ports={"a": 0}, output_ports={"y": 1},
            cell_count=2, input_order=("a",), output_order=("y",))
        issues = compiler.validate_schedule(sched)
        assert any("unwritten" in i for i in issues)

    def test_arity_and_bounds(self):
        sched = Schedule(
            steps=(LogicStep("MAJ3", (0, 1), 5, 1),),
            input_ports={"a": 0, "b": 1}, output_ports={"y": 5},
            cell_count=3, input_order=("a", "b"), output_order=("y",))
        issues = compiler.validate_schedule(sched)
        assert any("arity" in i for i in issues)
        assert any("out of range" in i for i in issues)


class TestSerializationAndCounts:
    def test_byte_identical_generation(self):
        a = compiler.array_multiplier(4).dumps()
        b = compiler.array_multiplier(4).dumps()
        assert a == b

    def test_json_round_trip(self):
        sched = compiler.ripple_carry_adder(3)
        again = Schedule.loads(sched.dumps())
        assert again == sched

    def test_file_round_trip(self, tmp_path):
        sched = compiler.full_adder_maj_not()
        path = tmp_path / "fa.json"
        sched.save(path)
        assert Schedule.load(path) == sched

    def test_electrical_step_round_trip(self):
        from cramsim.vcl import LogicStepConfig
        step = LogicStep(
            gate="NAND", input_cells=(0, 1), output_cell=2, preset=0,
            electrical=LogicStepConfig(0.62, 1e-3, 0, 2, r_series=25.0))
        again = LogicStep.from_dict(step.to_dict())
        assert again == step

    def test_schema_fields(self):
        d = compiler.full_adder_all_nand().to_dict()
        assert d["version"] == compiler.SCHEMA_VERSION
        assert set(d) >= {"cell_count", "input_ports", "output_ports", "steps"}
        assert set(d["steps"][0]) == {"gate", "inputs", "output", "preset"}

    def test_gate_counts_monotone_in_width(self):
        adder_steps = [len(compiler.ripple_carry_adder(n).steps)
                       for n in range(1, 7)]
        mult_steps = [len(compiler.array_multiplier(n).steps)
                      for n in range(1, 6)]
        assert adder_steps == sorted(adder_steps)
        assert mult_steps == sorted(mult_steps)
        assert compiler.ripple_carry_adder(4).meta["gate_counts"]["NAND"] == 36

    def test_counts_recorded_in_meta(self):
        meta = compiler.dot_product(2, 2).meta
        assert meta["step_count"] == len(compiler.dot_product(2, 2).steps)
        assert "gate_counts" in meta


class TestCompaction:
    @pytest.mark.parametrize("make,nfree", [
        (compiler.full_adder_all_nand, 3),
        (lambda: compiler.ripple_carry_adder(2), 5),
        (lambda: compiler.array_multiplier(3), 6),
    ])
    def test_semantics_preserved(self, make, nfree):
        sched = make()
        comp = compiler.compact_cells(sched)
        assert comp.cell_count < sched.cell_count
        assert not compiler.validate_schedule(comp)
        for key in range(2**nfree):
            assert eval_ideal(sched, key) == eval_ideal(comp, key)
