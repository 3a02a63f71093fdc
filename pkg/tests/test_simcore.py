import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantum_nft.errors import CapacityError, InvariantError, ParameterError, QubitIndexError
from quantum_nft.solver import simcore
from quantum_nft.solver.simcore import BlockOutcome, Gate, GateKind

H = Gate(GateKind.H)


def random_state(n_qubits: int, seed: int) -> simcore.StateVector:
    gen = np.random.default_rng(seed)
    amplitudes = gen.normal(size=1 << n_qubits) + 1j * gen.normal(size=1 << n_qubits)
    return simcore.StateVector(n_qubits, amplitudes / np.linalg.norm(amplitudes))


def honest_block(theta: float) -> simcore.StateVector:
    state = simcore.bell_pair(simcore.new_state(2), 0, 1)
    return simcore.apply_gate(state, Gate.phase(theta), (0,))


class TestStatePreparation:
    def test_new_state_is_all_zeros(self):
        state = simcore.new_state(3)
        assert state.amplitudes[0] == 1
        assert np.count_nonzero(state.amplitudes) == 1

    @pytest.mark.parametrize("n_qubits", [0, 17])
    def test_capacity_limits(self, n_qubits):
        with pytest.raises(CapacityError):
            simcore.new_state(n_qubits)

    def test_density_capacity(self):
        with pytest.raises(CapacityError):
            simcore.new_density(9)

    def test_tensor_keeps_low_register_on_low_qubits(self):
        one = simcore.apply_gate(simcore.new_state(1), Gate(GateKind.X), (0,))
        joint = simcore.tensor_states(simcore.new_state(1), one)
        assert joint.amplitudes[1] == 1

    def test_bell_pair(self):
        state = simcore.bell_pair(simcore.new_state(2), 0, 1)
        np.testing.assert_allclose(state.amplitudes, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)], atol=1e-15)

    def test_bell_pair_requires_zero_qubits(self):
        state = simcore.apply_gate(simcore.new_state(2), H, (1,))
        with pytest.raises(ParameterError):
            simcore.bell_pair(state, 0, 1)


class TestGates:
    def test_duplicate_targets_rejected(self):
        with pytest.raises(QubitIndexError):
            simcore.apply_gate(simcore.new_state(2), Gate(GateKind.CNOT), (1, 1))

    def test_out_of_range_target(self):
        with pytest.raises(QubitIndexError):
            simcore.apply_gate(simcore.new_state(2), H, (2,))

    def test_arity_mismatch(self):
        with pytest.raises(QubitIndexError):
            simcore.apply_gate(simcore.new_state(3), Gate.ccp(1.0), (0, 1))

    def test_non_finite_angle(self):
        with pytest.raises(ParameterError):
            Gate.phase(float("nan"))

    def test_cnot_control_is_first_listed(self):
        state = simcore.apply_gate(simcore.new_state(2), Gate(GateKind.X), (1,))
        state = simcore.apply_gate(state, Gate(GateKind.CNOT), (1, 0))
        assert abs(state.amplitudes[3]) == pytest.approx(1.0)

    @pytest.mark.parametrize("angle", [math.pi / 4, math.pi / 2, math.pi])
    def test_ccp_decomposition_matches_direct_gate(self, angle):
        state = random_state(3, seed=7)
        direct = simcore.apply_gate(state, Gate.ccp(angle), (0, 1, 2))
        decomposed = simcore.apply_circuit(state, simcore.decompose_ccp(angle, 0, 1, 2))
        assert np.max(np.abs(direct.amplitudes - decomposed.amplitudes)) < 1e-12

    @given(st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False))
    @settings(max_examples=50, deadline=None)
    def test_ccp_decomposition_any_angle(self, angle):
        state = random_state(4, seed=3)
        direct = simcore.apply_gate(state, Gate.ccp(angle), (3, 0, 2))
        decomposed = simcore.apply_circuit(state, simcore.decompose_ccp(angle, 3, 0, 2))
        assert np.max(np.abs(direct.amplitudes - decomposed.amplitudes)) < 1e-12

    def test_mcp_with_two_controls_is_ccp(self):
        state = random_state(3, seed=11)
        a = simcore.apply_gate(state, Gate.mcp(0.3, 2), (2, 0, 1))
        b = simcore.apply_gate(state, Gate.ccp(0.3), (2, 0, 1))
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-15)

    @pytest.mark.parametrize("n_controls", [1, 2, 3, 4])
    def test_mcp_matches_brute_force_diagonal(self, n_controls):
        n_qubits = 5
        state = random_state(n_qubits, seed=n_controls)
        targets = tuple(np.random.default_rng(n_controls).permutation(n_qubits)[: n_controls + 1].tolist())
        result = simcore.apply_gate(state, Gate.mcp(0.9, n_controls), targets)
        mask = sum(1 << q for q in targets)
        indices = np.arange(1 << n_qubits)
        diagonal = np.where((indices & mask) == mask, np.exp(0.9j), 1.0)
        np.testing.assert_allclose(result.amplitudes, diagonal * state.amplitudes, atol=1e-12)

    @pytest.mark.parametrize("kind", list(GateKind))
    def test_every_gate_kind_is_unitary(self, kind):
        gate = Gate(kind, 0.7, 3 if kind is GateKind.MCP else 0)
        matrix = gate.matrix()
        assert matrix.shape == (1 << gate.arity, 1 << gate.arity)
        np.testing.assert_allclose(matrix.conj().T @ matrix, np.eye(1 << gate.arity), atol=1e-12)

    def test_unnormalized_input_is_an_invariant_breach(self):
        drifted = simcore.StateVector(1, np.array([1.0, 1.0]))
        with pytest.raises(InvariantError):
            simcore.apply_gate(drifted, H, (0,))

    @given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**16))
    @settings(max_examples=30, deadline=None)
    def test_gates_preserve_norm(self, n_qubits, seed):
        state = random_state(n_qubits, seed)
        for q in range(n_qubits):
            state = simcore.apply_gate(state, H, (q,))
        assert state.norm_error() < simcore.NORM_TOLERANCE


class TestMeasurement:
    def test_measure_all_bit_order(self, rng):
        state = simcore.apply_gate(simcore.new_state(3), Gate(GateKind.X), (0,))
        bits, collapsed = simcore.measure_all(state, rng)
        assert bits == "001"
        assert collapsed.amplitudes[1] == 1

    def test_measure_computational_collapses(self, rng):
        bell = simcore.bell_pair(simcore.new_state(2), 0, 1)
        bit, collapsed = simcore.measure_computational(bell, 0, rng)
        assert abs(collapsed.amplitudes[3 * bit]) == pytest.approx(1.0)

    def test_born_frequency_of_plus_state(self):
        trials = 100_000
        plus = simcore.apply_gate(simcore.new_state(1), H, (0,))
        gen = np.random.default_rng(2024)
        ones = sum(simcore.measure_computational(plus, 0, gen)[0] for _ in range(trials))
        assert abs(ones / trials - 0.5) <= 3 * math.sqrt(0.25 / trials)

    @pytest.mark.parametrize("delta", [math.pi / 3, math.pi / 2, 2 * math.pi / 3])
    def test_sampled_pass_frequency_follows_phase_mismatch(self, delta):
        trials = 20_000
        block = honest_block(0.2)
        gen = np.random.default_rng(99)
        passed = sum(
            simcore.measure_in_block_basis(block, 0, 1, 0.2 + delta, gen)[0] is BlockOutcome.PLUS
            for _ in range(trials)
        )
        expected = math.cos(delta / 2) ** 2
        assert abs(passed / trials - expected) <= 3 * math.sqrt(expected * (1 - expected) / trials)

    def test_sample_counts_total(self, rng):
        probs = simcore.probabilities(simcore.bell_pair(simcore.new_state(2), 0, 1))
        counts = simcore.sample_counts(probs, 2, [0, 1], 1000, rng)
        assert counts.sum() == 1000
        assert counts[1] == counts[2] == 0

    def test_sample_counts_rejects_zero_shots(self, rng):
        with pytest.raises(ParameterError):
            simcore.sample_counts(np.array([1.0, 0.0]), 1, [0], 0, rng)

    def test_honest_block_is_plus_eigenstate(self):
        probs = simcore.block_basis_probabilities(honest_block(0.7), 0, 1, 0.7)
        assert probs[BlockOutcome.PLUS] == pytest.approx(1.0, abs=1e-12)

    def test_leak_state_never_passes(self, rng):
        leak = simcore.apply_gate(simcore.new_state(2), Gate(GateKind.X), (0,))
        for _ in range(20):
            outcome, _ = simcore.measure_in_block_basis(leak, 0, 1, 0.3, rng)
            assert outcome in (BlockOutcome.LEAK01, BlockOutcome.LEAK10)

    @pytest.mark.parametrize("delta", [0.0, math.pi / 8, math.pi / 4, math.pi / 2, math.pi])
    def test_pass_probability_closed_form(self, delta):
        probs = simcore.block_basis_probabilities(honest_block(0.2), 0, 1, 0.2 + delta)
        assert probs[BlockOutcome.PLUS] == pytest.approx(math.cos(delta / 2) ** 2, abs=1e-12)

    def test_block_basis_is_unitary(self):
        basis = simcore.block_basis(1.1)
        np.testing.assert_allclose(basis @ basis.conj().T, np.eye(4), atol=1e-12)

    def test_non_finite_verification_phase(self, rng):
        with pytest.raises(ParameterError):
            simcore.measure_in_block_basis(honest_block(0.1), 0, 1, float("inf"), rng)


class TestDensityMatrices:
    def test_full_depolarizing_gives_maximally_mixed(self):
        rho = simcore.to_density(simcore.apply_gate(simcore.new_state(1), H, (0,)))
        mixed = simcore.apply_depolarizing(rho, 0.75, 0)
        np.testing.assert_allclose(mixed.entries, np.eye(2) / 2, atol=1e-12)

    def test_weak_depolarizing_of_ground_state(self):
        noisy = simcore.apply_depolarizing(simcore.new_density(1), 0.1, 0)
        np.testing.assert_allclose(noisy.entries, np.diag([1 - 0.2 / 3, 0.2 / 3]), atol=1e-12)
        assert simcore.fidelity_pure(noisy, simcore.new_state(1)) == pytest.approx(0.933333333333, abs=1e-9)

    def test_zero_depolarizing_is_identity(self):
        rho = simcore.to_density(random_state(2, seed=4))
        for q in (0, 1):
            np.testing.assert_allclose(simcore.apply_depolarizing(rho, 0.0, q).entries, rho.entries, atol=1e-15)

    def test_depolarizing_shrinks_bloch_vector(self):
        # p/3 per Pauli: the Bloch vector shrinks by 1 - 4p/3
        rho = simcore.to_density(simcore.apply_gate(simcore.new_state(1), H, (0,)))
        for p in (0.1, 0.3, 1.0):
            noisy = simcore.apply_depolarizing(rho, p, 0)
            assert simcore.expectation_pauli(noisy, "X") == pytest.approx(1 - 4 * p / 3, abs=1e-12)

    def test_non_trace_preserving_kraus_is_an_invariant_breach(self):
        with pytest.raises(InvariantError):
            simcore.apply_kraus(simcore.new_density(1), [1.1 * np.eye(2)], 0)

    def test_depolarizing_rejects_bad_probability(self):
        with pytest.raises(ParameterError):
            simcore.kraus_depolarizing(1.5)

    def test_partial_trace_of_bell_pair(self):
        rho = simcore.to_density(simcore.bell_pair(simcore.new_state(2), 0, 1))
        reduced = simcore.partial_trace(rho, [1])
        np.testing.assert_allclose(reduced.entries, np.eye(2) / 2, atol=1e-12)

    def test_partial_trace_keeps_qubit_order(self):
        state = simcore.apply_gate(simcore.new_state(3), Gate(GateKind.X), (2,))
        reduced = simcore.partial_trace(simcore.to_density(state), [0, 2])
        assert reduced.entries[2, 2] == pytest.approx(1.0)

    def test_noisy_run_stays_physical(self):
        instructions = [(H, (0,)), (Gate(GateKind.CNOT), (0, 1)), (Gate.cp(math.pi / 2), (1, 2))]
        rho = simcore.run_density(3, instructions, simcore.NoiseChannel(0.1))
        assert rho.is_physical()
        assert rho.trace() == pytest.approx(1.0, abs=1e-10)

    def test_noiseless_density_matches_statevector(self):
        instructions = [(H, (0,)), (Gate(GateKind.CNOT), (0, 1)), (Gate.phase(0.4), (1,))]
        rho = simcore.run_density(2, instructions)
        psi = simcore.run_statevector(2, instructions)
        assert simcore.fidelity_pure(rho, psi) == pytest.approx(1.0, abs=1e-12)

    def test_trace_distance_orthogonal(self):
        zero = simcore.new_density(1)
        one = simcore.to_density(simcore.apply_gate(simcore.new_state(1), Gate(GateKind.X), (0,)))
        assert simcore.trace_distance(zero, one) == pytest.approx(1.0)

    def test_noise_channel_rejects_unknown_kind(self):
        with pytest.raises(ParameterError):
            simcore.NoiseChannel(0.1, kind="amplitude_damping")


class TestObservables:
    def test_bell_pauli_expectations(self):
        theta = 0.9
        rho = simcore.to_density(honest_block(theta))
        assert simcore.expectation_pauli(rho, "ZZ") == pytest.approx(1.0)
        assert simcore.expectation_pauli(rho, "XX") == pytest.approx(math.cos(theta))
        assert simcore.expectation_pauli(rho, "IZ") == pytest.approx(0.0, abs=1e-12)

    def test_pauli_string_length_checked(self):
        with pytest.raises(ParameterError):
            simcore.expectation_pauli(simcore.new_density(2), "Z")

    def test_pauli_label_checked(self):
        with pytest.raises(ParameterError):
            simcore.pauli_operator("XQ")

    def test_pauli_rightmost_label_on_qubit_zero(self):
        state = simcore.apply_gate(simcore.new_state(2), Gate(GateKind.X), (0,))
        rho = simcore.to_density(state)
        assert simcore.expectation_pauli(rho, "IZ") == pytest.approx(-1.0)
        assert simcore.expectation_pauli(rho, "ZI") == pytest.approx(1.0)

    @given(st.integers(min_value=0, max_value=2**16))
    @settings(max_examples=20, deadline=None)
    def test_uhlmann_matches_pure_fidelity(self, seed):
        psi = random_state(2, seed)
        rho = simcore.DensityMatrix(
            2, 0.9 * simcore.to_density(random_state(2, seed + 1)).entries + 0.1 * np.eye(4) / 4
        )
        pure = simcore.fidelity_pure(rho, psi)
        mixed = simcore.fidelity_mixed(rho, simcore.to_density(psi))
        assert mixed == pytest.approx(pure, abs=1e-6)

    def test_fidelity_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            simcore.fidelity_pure(simcore.new_density(2), simcore.new_state(1))


class TestSeedsAndDebugOutput:
    def test_derived_streams_are_reproducible(self):
        a = simcore.derive_rng(5, 1, 2).random(4)
        b = simcore.derive_rng(5, 1, 2).random(4)
        c = simcore.derive_rng(5, 2, 1).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_dump_amplitudes_golden_bell_pair(self):
        amplitude = 0.7071067811865475
        bell = simcore.StateVector(2, np.array([amplitude, 0.0, 0.0, amplitude]))
        assert simcore.dump_amplitudes(bell) == (
            '{"index": 0, "re": 0.7071067811865475, "im": 0.0}\n'
            '{"index": 1, "re": 0.0, "im": 0.0}\n'
            '{"index": 2, "re": 0.0, "im": 0.0}\n'
            '{"index": 3, "re": 0.7071067811865475, "im": 0.0}\n'
        )
        assert simcore.dump_amplitudes(bell, tol=1e-12) == (
            '{"index": 0, "re": 0.7071067811865475, "im": 0.0}\n'
            '{"index": 3, "re": 0.7071067811865475, "im": 0.0}\n'
        )

    def test_dump_amplitudes_skips_small_entries(self):
        lines = simcore.dump_amplitudes(simcore.bell_pair(simcore.new_state(2), 0, 1), tol=1e-12).splitlines()
        assert len(lines) == 2
        assert '"index": 3' in lines[1]
