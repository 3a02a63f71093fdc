import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import three_sigma
from quantum_nft.controller import attacks
from quantum_nft.controller.protocol import ClassicalDisclosure
from quantum_nft.errors import ParameterError
from quantum_nft.solver import simcore
from quantum_nft.solver.driver.api_models import InterceptStrategy, MitmMode

THETAS = [math.pi / 16, math.pi / 4, 3 * math.pi / 4, 1.3]


def random_branches(seed: int) -> tuple[complex, complex, complex, complex]:
    """Random (a, b, c, d) with |a|^2 + |c|^2 = |b|^2 + |d|^2 = 1."""
    gen = np.random.default_rng(seed)
    a, c = gen.normal(size=2) + 1j * gen.normal(size=2)
    b, d = gen.normal(size=2) + 1j * gen.normal(size=2)
    norm_ac = math.sqrt(abs(a) ** 2 + abs(c) ** 2)
    norm_bd = math.sqrt(abs(b) ** 2 + abs(d) ** 2)
    return a / norm_ac, b / norm_bd, c / norm_ac, d / norm_bd


class TestInterceptResend:
    def test_exact_guess_is_never_detected(self, rng):
        stats = attacks.attack_intercept_resend(2000, InterceptStrategy.EXACT, rng)
        assert stats.detections == 0
        assert stats.within_3sigma

    def test_opposite_phase_is_always_detected(self, rng):
        stats = attacks.attack_intercept_resend(2000, InterceptStrategy.FIXED, rng, offset=math.pi)
        assert stats.detection_frequency == 1.0
        assert stats.expected_detection == pytest.approx(1.0)

    def test_uniform_guess_is_detected_half_the_time(self):
        stats = attacks.attack_intercept_resend(10000, InterceptStrategy.UNIFORM, np.random.default_rng(17))
        assert stats.expected_detection == 0.5
        assert stats.within_3sigma
        assert stats.adversary_measurements == 10000

    def test_attacked_copies_per_round(self, rng):
        stats = attacks.attack_intercept_resend(500, InterceptStrategy.UNIFORM, rng, peers=3)
        assert stats.trials == 1500
        assert abs(stats.detection_frequency - 0.5) <= three_sigma(0.5, 1500)

    def test_forgery_phase(self, rng):
        adversary = attacks.InterceptResendAdversary(InterceptStrategy.FIXED, offset=0.5)
        assert adversary.forged_phase(1.0, rng) == pytest.approx(1.5)

    def test_rounds_must_be_positive(self, rng):
        with pytest.raises(ParameterError):
            attacks.attack_intercept_resend(0, InterceptStrategy.UNIFORM, rng)


class TestManInTheMiddle:
    def test_without_the_secret(self, rng):
        stats = attacks.attack_mitm(1000, rng, MitmMode.NO_SECRET)
        assert stats.detection_frequency == 1.0

    def test_with_the_secret(self):
        stats = attacks.attack_mitm(10000, np.random.default_rng(23), MitmMode.FORGE)
        assert stats.expected_detection == 0.5
        assert stats.within_3sigma

    def test_passive_relay(self, rng):
        stats = attacks.attack_mitm(1000, rng, MitmMode.PASSIVE)
        assert stats.detections == 0
        assert stats.adversary_measurements == 0

    def test_substitute_disclosure_is_unauthentic(self, rng):
        adversary = attacks.MitmAdversary(MitmMode.NO_SECRET)
        disclosure = ClassicalDisclosure(1, 1, 0.2, 0.2).signed("genesis")
        _, substitute = adversary.intercept(attacks.bell_state(0.4), disclosure, rng)
        assert not substitute.authentic("genesis")


class TestEntangleMeasure:
    def test_untouched_ancilla(self, rng):
        report = attacks.attack_entangle_measure(1, 1, 0, 0, THETAS, rng, shots=2000)
        for z in report.z_distributions:
            assert z == pytest.approx([1.0, 0.0], abs=1e-12)
        assert report.swap_test_p0 == pytest.approx(1.0)

    def test_branch_flip_gives_uniform_ancilla(self, rng):
        report = attacks.attack_entangle_measure(1, 0, 0, 1, THETAS, rng, shots=2000)
        for z in report.z_distributions:
            assert z == pytest.approx([0.5, 0.5], abs=1e-12)
        assert report.max_tv_analytic < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_ancilla_is_independent_of_the_block_phase(self, seed, rng):
        a, b, c, d = random_branches(seed)
        report = attacks.attack_entangle_measure(a, b, c, d, THETAS, rng, shots=10000)
        assert report.max_tv_analytic < 1e-12
        assert report.information_gained < 1e-12
        assert report.max_tv_sampled <= 2 * report.tv_noise_bound

    @given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_marginals_do_not_depend_on_theta(self, theta_1, theta_2, seed):
        branches = random_branches(seed)
        z1, x1 = attacks.ancilla_marginals(*branches, theta_1)
        z2, x2 = attacks.ancilla_marginals(*branches, theta_2)
        np.testing.assert_allclose(z1, z2, atol=1e-12)
        np.testing.assert_allclose(x1, x2, atol=1e-12)

    def test_entangling_disturbs_the_block(self, rng):
        report = attacks.attack_entangle_measure(1, 0, 0, 1, [math.pi / 4], rng, shots=100)
        # branches decohere completely: fidelity 1/2
        assert report.swap_test_p0 == pytest.approx(0.75)

    def test_non_unitary_amplitudes(self):
        with pytest.raises(ParameterError):
            attacks.entangle_unitary(1, 1, 1, 0)

    def test_unitary_branches(self):
        unitary = attacks.entangle_unitary(*random_branches(3))
        np.testing.assert_allclose(unitary @ unitary.conj().T, np.eye(8), atol=1e-12)

    def test_no_phases(self, rng):
        with pytest.raises(ParameterError):
            attacks.attack_entangle_measure(1, 1, 0, 0, [], rng)

    def test_adversary_forwards_a_block(self, rng):
        adversary = attacks.EntangleMeasureAdversary(*random_branches(4))
        disclosure = ClassicalDisclosure(1, 1, 0.1, 0.1)
        forwarded, relayed = adversary.intercept(attacks.bell_state(0.2), disclosure, rng)
        assert forwarded.n_qubits == 2
        assert forwarded.norm_error() < simcore.NORM_TOLERANCE
        assert relayed is disclosure
        assert adversary.measurements == 1

    def test_sampled_ancilla_frequencies(self, rng):
        adversary = attacks.EntangleMeasureAdversary(*random_branches(6))
        z_freq, x_freq = adversary.sample_ancilla(attacks.bell_state(0.4), 5000, rng)
        assert z_freq.sum() == pytest.approx(1.0)
        assert x_freq.sum() == pytest.approx(1.0)
        assert adversary.measurements == 10_000

    def test_untouched_ancilla_samples_are_exact(self, rng):
        report = attacks.attack_entangle_measure(1, 1, 0, 0, THETAS, rng, shots=500)
        for z in report.sampled_z:
            assert z == [1.0, 0.0]

    def test_disturbed_block_of_a_decohering_adversary(self):
        adversary = attacks.EntangleMeasureAdversary(1, 0, 0, 1)
        honest = attacks.bell_state(math.pi / 4)
        rho = adversary.disturbed_block(honest)
        assert simcore.fidelity_pure(rho, honest) == pytest.approx(0.5)
        assert rho.entries[3, 0] == pytest.approx(0.0, abs=1e-12)
