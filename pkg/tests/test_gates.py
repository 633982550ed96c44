import numpy as np
import pytest

from cramsim import gates, logic, vcl
from cramsim.errors import ConfigError, ParameterError
from cramsim.gates import ProbGate


class TestNandFromDelta:
    def test_ideal(self):
        assert gates.nand_from_delta(0.0).p_one == (1.0, 1.0, 1.0, 0.0)

    @pytest.mark.parametrize("delta", [0.0076, 2.1e-4])
    def test_reference_rates(self, delta):
        got = gates.nand_from_delta(delta)
        assert got.p_one == (1.0, 1.0 - delta, 1.0 - delta, delta)

    @pytest.mark.parametrize("delta", [-0.1, 1.01])
    def test_domain(self, delta):
        with pytest.raises(ParameterError):
            gates.nand_from_delta(delta)


class TestDerivedTables:
    def test_not_is_tied_input_column(self):
        nand = gates.nand_from_delta(0.3)
        inv = gates.not_from_delta(0.3)
        assert inv.p_one == (nand.p_one[0b00], nand.p_one[0b11])

    def test_and_is_exact_two_step_composition(self):
        delta = 0.2
        nand = gates.nand_from_delta(delta)
        inv = gates.not_from_delta(delta)
        got = gates.and_from_delta(delta)
        for s in range(4):
            q = nand.p_one[s]
            expected = (1.0 - q) * inv.p_one[0] + q * inv.p_one[1]
            assert got.p_one[s] == pytest.approx(expected, abs=1e-15)

    def test_and_ideal_limit(self):
        assert gates.and_from_delta(0.0).p_one == (0.0, 0.0, 0.0, 1.0)

    def test_binding_covers_projection_kinds(self):
        binding = gates.delta_binding(0.01)
        assert set(binding) == {"NAND", "NOT", "AND"}


class TestDeltaFromAccuracies:
    def test_perfect_gate(self):
        assert gates.delta_from_accuracies([1, 1, 1, 1]) == 0.0

    @pytest.mark.parametrize("e", [0.0, 0.1, 0.5, 1.0])
    def test_equalized_form_is_fixed_point(self, e):
        assert gates.delta_from_accuracies(
            [1.0, 1.0 - e, 1.0 - e, 1.0 - e]) == pytest.approx(e, abs=1e-15)

    def test_round_trip_with_delta_table(self):
        delta = 0.0076
        table = gates.nand_from_delta(delta)
        # per-state accuracy of the table: matches for expected-1 states,
        # complement for the expected-0 state
        acc = [table.p_one[0], table.p_one[1], table.p_one[2],
               1.0 - table.p_one[3]]
        assert gates.delta_from_accuracies(acc) == pytest.approx(delta, abs=1e-15)

    def test_averages_unequal_states(self):
        assert gates.delta_from_accuracies([1.0, 0.9, 0.8, 0.7]) == pytest.approx(
            0.2, abs=1e-15)

    def test_domain(self):
        with pytest.raises(ParameterError):
            gates.delta_from_accuracies([1.0, 0.5, 1.2, 0.9])
        with pytest.raises(ParameterError):
            gates.delta_from_accuracies([1.0, 0.5])


class TestGateFromResponse:
    def test_ideal_table(self, params):
        _, resp = vcl.optimize_vlogic("NAND", params, 1e-3)
        table = gates.gate_from_response(resp, "NAND")
        assert [round(p) for p in table.p_one] == [1, 1, 1, 0]

    def test_worst_state_error_near_target(self, params):
        _, resp = vcl.optimize_vlogic("NAND", params, 1e-3, objective="worst")
        table = gates.gate_from_response(resp, "NAND")
        worst = max(abs(p - i) for p, i in zip(table.p_one, (1, 1, 1, 0)))
        assert 0.004 <= worst <= 0.016

    def test_preserves_dout_ordering(self, params):
        _, resp = vcl.optimize_vlogic("MAJ3", params, 1e-3)
        table = gates.gate_from_response(resp, "MAJ3")
        ordered = sorted(resp.per_state_dout,
                         key=lambda s: resp.per_state_dout[s])
        values = [table.p_one[int(s, 2)] for s in ordered]
        assert values == sorted(values)

    def test_missing_state_rejected(self):
        class Fake:
            per_state_dout = {"00": 1.0, "01": 1.0, "10": 1.0}
        with pytest.raises(ConfigError):
            gates.gate_from_response(Fake(), "NAND")


class TestSampleOutput:
    def test_ideal_nand_on_ones(self):
        rng = np.random.default_rng(0)
        table = gates.nand_from_delta(0.0)
        assert all(gates.sample_output(table, (1, 1), rng) == 0
                   for _ in range(200))

    def test_certain_one(self):
        rng = np.random.default_rng(0)
        table = ProbGate("NAND", 2, (1.0, 1.0, 1.0, 1.0))
        assert all(gates.sample_output(table, (1, 1), rng) == 1
                   for _ in range(200))

    def test_half_rate_within_binomial_bound(self):
        rng = np.random.default_rng(123)
        table = gates.nand_from_delta(0.5)
        n = 100_000
        ones = sum(gates.sample_output(table, (1, 1), rng) for _ in range(n))
        sigma = (0.5 * 0.5 / n) ** 0.5
        assert abs(ones / n - 0.5) < 3 * sigma

    def test_arity_mismatch(self):
        with pytest.raises(ConfigError):
            gates.sample_output(gates.nand_from_delta(0.0), (1,),
                                np.random.default_rng(0))


class TestSerialization:
    def test_json_round_trip(self):
        table = gates.nand_from_delta(0.0076)
        assert ProbGate.loads(table.dumps()) == table

    def test_table_validation(self):
        with pytest.raises(ParameterError):
            ProbGate("NAND", 2, (1.0, 0.5, 0.5))
        with pytest.raises(ParameterError):
            ProbGate("NAND", 2, (1.0, 0.5, 0.5, 1.5))

    def test_ideal_tables_match_truth(self):
        for name in logic.GATE_KINDS:
            table = gates.ideal_gate(name)
            kind = logic.gate_kind(name)
            for s in range(2**kind.arity):
                bits = logic.state_bits(s, kind.arity)
                assert table.p_one[s] == logic.ideal_output(name, bits)
