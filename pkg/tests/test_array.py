import numpy as np
import pytest

from cramsim import array, compiler, device, vcl
from cramsim.array import CramRow
from cramsim.device import MtjState
from cramsim.errors import ConfigError, ScheduleError
from cramsim.models import GateModel


def ideal_model():
    return GateModel.ideal()


class TestMemoryOps:
    def test_error_free_write_read(self, params):
        row = CramRow.of_width(3, params)
        rng = np.random.default_rng(0)
        array.mem_write(row, 1, 1, rng)
        assert array.mem_read(row, 1) == 1
        assert row.cells[1].stored == MtjState.AP
        array.mem_write(row, 1, 0, rng)
        assert array.mem_read(row, 1) == 0

    def test_read_is_stable(self, params):
        row = CramRow.of_width(1, params)
        array.mem_write(row, 0, 1, np.random.default_rng(0))
        assert array.mem_read(row, 0) == array.mem_read(row, 0) == 1

    def test_write_error_statistics(self, params):
        rate = 1.5e-4
        n = 1_000_000
        row = CramRow.of_width(1, params, write_error_rate=rate)
        rng = np.random.default_rng(99)
        flips = 0
        for _ in range(n):
            array.mem_write(row, 0, 0, rng)
            flips += row.cells[0].stored.bit
        expected = n * rate
        sigma = (n * rate * (1 - rate)) ** 0.5
        assert abs(flips - expected) < 3 * sigma

    def test_index_bounds(self, params):
        row = CramRow.of_width(2, params)
        rng = np.random.default_rng(0)
        with pytest.raises(ScheduleError):
            array.mem_write(row, 2, 1, rng)
        with pytest.raises(ScheduleError):
            array.mem_read(row, -1)

    def test_read_error_knob(self, params):
        row = CramRow.of_width(1, params, read_error_rate=1.0)
        array.mem_write(row, 0, 1, np.random.default_rng(0))
        assert array.mem_read(row, 0, np.random.default_rng(1)) == 0
        with pytest.raises(ConfigError):
            array.mem_read(row, 0)

    def test_snapshot(self, params):
        row = CramRow.of_width(3, params)
        array.mem_write(row, 2, 1, np.random.default_rng(0))
        snap = row.snapshot()
        assert snap["bits"] == [0, 0, 1]
        assert "write_error_rate" in row.dump_json()


class TestExecuteStep:
    def test_ideal_nand_table(self, params):
        sched = compiler.full_adder_all_nand()
        row = CramRow.for_schedule(sched, params)
        rng = np.random.default_rng(0)
        array.mem_write(row, 0, 1, rng)
        array.mem_write(row, 1, 1, rng)
        array.execute_step(row, sched.steps[0], rng, ideal_model())
        assert array.mem_read(row, sched.steps[0].output_cell) == 0

    def test_zero_drive_keeps_preset(self, params):
        step = compiler.LogicStep(
            gate="NAND", input_cells=(0, 1), output_cell=2, preset=0,
            electrical=vcl.LogicStepConfig(0.0, 1e-3, 0, 2))
        row = CramRow.of_width(3, params)
        rng = np.random.default_rng(0)
        array.mem_write(row, 0, 0, rng)
        array.mem_write(row, 1, 0, rng)
        model = GateModel.physics(params)
        array.execute_step(row, step, rng, model)
        assert array.mem_read(row, 2) == 0

    def test_inputs_never_mutated(self, params):
        sched = compiler.full_adder_all_nand()
        model = GateModel.from_delta(0.3)
        rng = np.random.default_rng(5)
        for _ in range(50):
            row = CramRow.for_schedule(sched, params)
            in_bits = {n: int(rng.integers(0, 2)) for n in sched.input_order}
            for name, b in in_bits.items():
                array.mem_write(row, sched.input_ports[name], b, rng)
            for i, step in enumerate(sched.steps):
                before = [array.mem_read(row, c) for c in step.input_cells]
                array.execute_step(row, step, rng, model, step_index=i)
                after = [array.mem_read(row, c) for c in step.input_cells]
                assert before == after

    def test_self_reference_rejected(self, params):
        step = compiler.LogicStep(gate="NAND", input_cells=(0, 1),
                                  output_cell=1, preset=0)
        row = CramRow.of_width(3, params)
        with pytest.raises(ScheduleError):
            array.execute_step(row, step, np.random.default_rng(0), ideal_model())

    def test_physics_switch_statistics(self, params):
        # lowest-resistance input state must switch the preset-0 output
        step = compiler.LogicStep(
            gate="NAND", input_cells=(0, 1), output_cell=2, preset=0,
            electrical=vcl.LogicStepConfig(0.620, 1e-3, 0, 2))
        model = GateModel.physics(params)
        rng = np.random.default_rng(11)
        row = CramRow.of_width(3, params)
        ones = 0
        n = 10_000
        for _ in range(n):
            array.mem_write(row, 0, 0, rng)
            array.mem_write(row, 1, 0, rng)
            array.execute_step(row, step, rng, model)
            ones += array.mem_read(row, 2)
        assert ones / n >= 0.99

    def test_single_step_matches_dout_mean(self, params):
        cfg = vcl.LogicStepConfig(0.631, 1e-3, 0, 2)
        step = compiler.LogicStep(gate="NAND", input_cells=(0, 1),
                                  output_cell=2, preset=0, electrical=cfg)
        expected = vcl.dout_mean([MtjState.P, MtjState.AP], cfg, params)
        model = GateModel.physics(params)
        rng = np.random.default_rng(17)
        row = CramRow.of_width(3, params)
        array.mem_write(row, 0, 0, rng)
        array.mem_write(row, 1, 1, rng)
        n = 100_000
        ones = 0
        for _ in range(n):
            array.execute_step(row, step, rng, model)
            ones += array.mem_read(row, 2)
        sigma = (expected * (1 - expected) / n) ** 0.5
        assert abs(ones / n - expected) < 3 * sigma + 1e-9

    def test_heterogeneous_cells(self, params):
        cfg = vcl.LogicStepConfig(0.620, 1e-3, 0, 2)
        step = compiler.LogicStep(gate="NAND", input_cells=(0, 1),
                                  output_cell=2, preset=0, electrical=cfg)
        row = CramRow.of_width(3, params)
        row.cells[1] = array.CramCell(device.scale_tmr(params, 3.0), MtjState.AP)
        rng = np.random.default_rng(2)
        array.mem_write(row, 0, 1, rng)
        model = GateModel.physics(params)
        array.execute_step(row, step, rng, model)  # runs the per-cell path
        assert array.mem_read(row, 2) in (0, 1)


class TestExecuteSchedule:
    @pytest.mark.parametrize("make", [compiler.full_adder_all_nand,
                                      compiler.full_adder_maj_not])
    def test_ideal_exhaustive_addition(self, params, make):
        sched = make()
        rng = np.random.default_rng(0)
        for key in range(8):
            a, b, c = key & 1, (key >> 1) & 1, (key >> 2) & 1
            row = CramRow.for_schedule(sched, params)
            out = array.execute_schedule(row, sched, {"A": a, "B": b, "C": c},
                                         rng, ideal_model())
            assert out["S"] + 2 * out["Cout"] == a + b + c

    def test_pure_function_with_ideal_gates(self, params):
        sched = compiler.ripple_carry_adder(2)
        bits = {"a0": 1, "a1": 0, "b0": 1, "b1": 1, "cin": 0}
        outs = set()
        for seed in range(5):
            row = CramRow.for_schedule(sched, params)
            out = array.execute_schedule(row, sched, bits,
                                         np.random.default_rng(seed),
                                         ideal_model())
            outs.add(tuple(sorted(out.items())))
        assert len(outs) == 1

    def test_unbound_port(self, params):
        sched = compiler.full_adder_all_nand()
        row = CramRow.for_schedule(sched, params)
        with pytest.raises(ScheduleError):
            array.execute_schedule(row, sched, {"A": 1}, np.random.default_rng(0),
                                   ideal_model())

    def test_row_width_enforcement(self, params):
        sched = compiler.full_adder_all_nand()  # 12 cells
        row = CramRow.for_schedule(sched, params)
        with pytest.raises(ScheduleError):
            array.execute_schedule(row, sched, {"A": 0, "B": 0, "C": 0},
                                   np.random.default_rng(0), ideal_model(),
                                   row_width=array.DEVICE_ROW_WIDTH)

    def test_narrow_design_fits_device_row(self, params):
        sched = compiler.full_adder_maj_not()  # 7 cells
        row = CramRow.for_schedule(sched, params)
        out = array.execute_schedule(row, sched, {"A": 1, "B": 0, "C": 1},
                                     np.random.default_rng(0), ideal_model(),
                                     row_width=array.DEVICE_ROW_WIDTH)
        assert out["S"] + 2 * out["Cout"] == 2

    def test_row_too_small(self, params):
        sched = compiler.full_adder_all_nand()
        row = CramRow.of_width(5, params)
        with pytest.raises(ScheduleError):
            array.execute_schedule(row, sched, {"A": 0, "B": 0, "C": 0},
                                   np.random.default_rng(0), ideal_model())
