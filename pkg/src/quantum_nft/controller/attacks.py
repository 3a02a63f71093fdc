# Channel Adversaries and Attack Harness
# --------------------------------------
# Every adversary implements `intercept(state, disclosure, rng)` and sits on a
# protocol Channel. The harness functions run many independent deliveries of
# random honest blocks through such a channel and compare the observed
# detection frequency with its closed form.

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from quantum_nft.controller.protocol import (
    Channel,
    ClassicalDisclosure,
    Minter,
    Peer,
    receive_block,
)
from quantum_nft.errors import InvariantError, ParameterError
from quantum_nft.model import codec, ledger
from quantum_nft.solver import simcore
from quantum_nft.solver.driver.api_models import (
    DetectionStats,
    InterceptStrategy,
    LeakReport,
    MitmMode,
)

logger = logging.getLogger(__name__)

UNITARY_TOLERANCE = 1e-9
_ANCILLA = 2


def bell_state(theta: float) -> simcore.StateVector:
    """(|00> + e^{i theta}|11>)/sqrt(2) for any real theta; forgeries are not bound by the weight budget."""
    state = simcore.bell_pair(simcore.new_state(2), 0, 1)
    return simcore.apply_gate(state, simcore.Gate.phase(theta % (2 * math.pi)), (0,))


@dataclass
class PhaseShiftAdversary:
    """Adds a fixed phase offset to every block copy it sees."""
    offset: float
    measurements: int = 0

    def intercept(self, state, disclosure, rng):
        return simcore.apply_gate(state, simcore.Gate.phase(self.offset % (2 * math.pi)), (0,)), disclosure


@dataclass
class InterceptResendAdversary:
    """
    Captures each copy and resends a forged Bell-phase state.

    The FIXED and EXACT strategies place the forgery relative to the true
    phase, which models an adversary that learned it by other means.
    """
    strategy: InterceptStrategy = InterceptStrategy.UNIFORM
    offset: float = math.pi
    measurements: int = 0

    def forged_phase(self, true_phase: float, rng: np.random.Generator) -> float:
        if self.strategy is InterceptStrategy.UNIFORM:
            return float(rng.uniform(0.0, 2 * math.pi))
        if self.strategy is InterceptStrategy.FIXED:
            return true_phase + self.offset
        return true_phase

    def intercept(self, state, disclosure, rng):
        self.measurements += 1
        true_phase = disclosure.theta_a + disclosure.theta_b
        return bell_state(self.forged_phase(true_phase, rng)), disclosure


def entangle_unitary(a: complex, b: complex, c: complex, d: complex) -> np.ndarray:
    """
    8x8 unitary U_E on (ancilla, qB, qA), ancilla as qubit 2.

    On the |00> branch the ancilla |0> goes to a|0> + c|1>, on the |11>
    branch to b|0> + d|1>. Each branch is completed to the unitary
    [[x, -y*], [y, x*]]; the |01> and |10> branches are left untouched.

    Raises:
        ParameterError: If |a|^2 + |c|^2 or |b|^2 + |d|^2 differs from 1
    """
    for name, (x, y) in {"(a, c)": (a, c), "(b, d)": (b, d)}.items():
        if abs(abs(x) ** 2 + abs(y) ** 2 - 1.0) > UNITARY_TOLERANCE:
            raise ParameterError(f"Amplitudes {name} do not extend to a unitary: |x|^2 + |y|^2 != 1")
    unitary = np.eye(8, dtype=np.complex128)
    for pair_index, (x, y) in ((0, (a, c)), (3, (b, d))):
        rows = [pair_index, pair_index + 4]
        unitary[np.ix_(rows, rows)] = [[x, -np.conj(y)], [y, np.conj(x)]]
    if not np.allclose(unitary @ unitary.conj().T, np.eye(8), atol=UNITARY_TOLERANCE):
        raise InvariantError("entangling operator is not unitary")
    return unitary


def entangle(state: simcore.StateVector, unitary: np.ndarray) -> simcore.StateVector:
    """Attaches an ancilla in |0> above the block and applies U_E."""
    joint = simcore.tensor_states(simcore.new_state(1), state)
    return simcore.StateVector(3, unitary @ joint.amplitudes)


@dataclass
class EntangleMeasureAdversary:
    """Entangles an ancilla with each copy, measures it in Z and forwards the block."""
    a: complex
    b: complex
    c: complex
    d: complex
    measurements: int = 0

    def __post_init__(self) -> None:
        self._unitary = entangle_unitary(self.a, self.b, self.c, self.d)

    def joint(self, state: simcore.StateVector) -> simcore.StateVector:
        """Ancilla (qubit 2) entangled with the block."""
        return entangle(state, self._unitary)

    def sample_ancilla(
        self, state: simcore.StateVector, shots: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """Ancilla outcome frequencies over `shots` fresh copies, in the Z and in the X basis."""
        joint = self.joint(state)
        z_counts = simcore.sample_counts(simcore.probabilities(joint), 3, [_ANCILLA], shots, rng)
        rotated = simcore.apply_gate(joint, simcore.Gate(simcore.GateKind.H), (_ANCILLA,))
        x_counts = simcore.sample_counts(simcore.probabilities(rotated), 3, [_ANCILLA], shots, rng)
        self.measurements += 2 * shots
        return z_counts / shots, x_counts / shots

    def disturbed_block(self, state: simcore.StateVector) -> simcore.DensityMatrix:
        """What the receiver holds once the ancilla is out of reach."""
        return simcore.partial_trace(simcore.to_density(self.joint(state)), [0, 1])

    def intercept(self, state, disclosure, rng):
        self.measurements += 1
        bit, collapsed = simcore.measure_computational(self.joint(state), _ANCILLA, rng)
        block = collapsed.amplitudes[4 * bit: 4 * bit + 4]
        return simcore.StateVector(2, block / np.linalg.norm(block)), disclosure


@dataclass
class MitmAdversary:
    """
    Man in the middle on both the quantum and the classical link.

    NO_SECRET substitutes its own block and a disclosure it cannot tag;
    FORGE holds the secret, substitutes a uniformly phased copy and relays
    a correctly tagged disclosure; PASSIVE relays everything.
    """
    mode: MitmMode = MitmMode.NO_SECRET
    secret: Optional[str] = None
    measurements: int = 0

    def intercept(self, state, disclosure, rng):
        if self.mode is MitmMode.PASSIVE:
            return state, disclosure
        self.measurements += 1
        phase = float(rng.uniform(0.0, 2 * math.pi))
        forged = bell_state(phase)
        if self.mode is MitmMode.FORGE:
            return forged, disclosure.signed(self.secret or "")
        substitute = ClassicalDisclosure(
            disclosure.round_id, disclosure.block_index, disclosure.theta_a, phase - disclosure.theta_a
        ).signed(f"not-{self.secret or ''}")
        return forged, substitute


# --- Harness ---

def _random_block(encoding: codec.PhaseEncoding, rng: np.random.Generator) -> ledger.Block:
    owner = "".join(rng.choice(["0", "1"], size=encoding.info_length))
    token_bits = "".join(rng.choice(["0", "1"], size=encoding.token_qubits))
    token = codec.Token.from_bits(token_bits, encoding.token_theta1, 1)
    return ledger.Block.mint(1, owner, token, encoding)


def _detection_stats(
    attack: str, strategy: str, rounds: int, trials: int, detections: int, expected: float,
    measurements: int = 0,
) -> DetectionStats:
    frequency = detections / trials
    sigma = math.sqrt(expected * (1 - expected) / trials)
    within = abs(frequency - expected) <= max(3 * sigma, 1e-12)
    stats = DetectionStats(
        attack=attack,
        strategy=strategy,
        rounds=rounds,
        trials=trials,
        detections=detections,
        detection_frequency=frequency,
        expected_detection=expected,
        sigma=sigma,
        within_3sigma=within,
        adversary_measurements=measurements,
    )
    logger.info(
        f"{attack}/{strategy}: detected {detections}/{trials} = {frequency:.4f} "
        f"(expected {expected:.4f}, 3 sigma {3 * sigma:.4f})"
    )
    return stats


def run_deliveries(
    channel: Channel,
    rounds: int,
    peers: int,
    rng: np.random.Generator,
    secret: str = "genesis",
    encoding: Optional[codec.PhaseEncoding] = None,
) -> int:
    """Delivers `rounds` x `peers` random honest blocks over `channel`; returns how many copies failed."""
    if rounds < 1:
        raise ParameterError(f"rounds must be at least 1, got {rounds}")
    encoding = encoding or codec.PhaseEncoding()
    victim = Peer("victim", ledger.ChainState(encoding=encoding))
    minter = Minter()
    detections = 0
    for round_id, _ in itertools.product(range(1, rounds + 1), range(peers)):
        block = _random_block(encoding, rng)
        disclosure = ClassicalDisclosure(round_id, block.index, block.theta_a, block.theta_b).signed(secret)
        payload, received = channel.transmit(minter.prepare(block), disclosure, rng)
        detections += not receive_block(victim, payload, received, secret, rng).passed
    return detections


def attack_intercept_resend(
    rounds: int,
    strategy: InterceptStrategy,
    rng: np.random.Generator,
    offset: float = math.pi,
    peers: int = 1,
) -> DetectionStats:
    """
    Intercept-and-resend against the verification rule.

    Expected detection is 1/2 for a uniform guess, sin^2(offset/2) for a
    fixed offset and 0 for an exact guess.
    """
    adversary = InterceptResendAdversary(strategy, offset)
    detections = run_deliveries(Channel("intercepted", adversary), rounds, peers, rng)
    expected = {
        InterceptStrategy.UNIFORM: 0.5,
        InterceptStrategy.FIXED: math.sin(offset / 2) ** 2,
        InterceptStrategy.EXACT: 0.0,
    }[strategy]
    return _detection_stats(
        "intercept_resend", strategy.value, rounds, rounds * peers, detections, expected, adversary.measurements
    )


def attack_mitm(
    rounds: int,
    rng: np.random.Generator,
    mode: MitmMode = MitmMode.NO_SECRET,
    secret: str = "genesis",
    peers: int = 1,
) -> DetectionStats:
    """
    Man-in-the-middle on quantum and classical links.

    Without the secret every substitute disclosure fails authentication;
    with it, a uniformly forged copy passes half the time; a passive relay
    is never detected and makes no measurement.
    """
    adversary = MitmAdversary(mode, secret if mode is MitmMode.FORGE else None)
    detections = run_deliveries(Channel("mitm", adversary), rounds, peers, rng, secret)
    expected = {MitmMode.NO_SECRET: 1.0, MitmMode.FORGE: 0.5, MitmMode.PASSIVE: 0.0}[mode]
    return _detection_stats("mitm", mode.value, rounds, rounds * peers, detections, expected, adversary.measurements)


def _total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def _max_pairwise_tv(distributions: list[np.ndarray]) -> float:
    return max((_total_variation(p, q) for p, q in itertools.combinations(distributions, 2)), default=0.0)


def ancilla_marginals(
    a: complex, b: complex, c: complex, d: complex, theta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact ancilla outcome distributions in the Z and X bases after U_E acts on the honest block."""
    joint = simcore.to_density(entangle(bell_state(theta), entangle_unitary(a, b, c, d)))
    ancilla = simcore.partial_trace(joint, [_ANCILLA]).entries
    z = np.real(np.diag(ancilla))
    coherence = float(np.real(ancilla[0, 1]))
    x = np.array([0.5 + coherence, 0.5 - coherence])
    return z, x


def attack_entangle_measure(
    a: complex,
    b: complex,
    c: complex,
    d: complex,
    thetas: list[float],
    rng: np.random.Generator,
    shots: int = 10000,
) -> LeakReport:
    """
    Entangle-and-measure: what does the ancilla reveal about the block phase?

    For each phase the honest block is entangled with an ancilla through
    U_E and the ancilla is measured in Z and X. Exact marginals, sampled
    frequencies and the largest total-variation distance between phases
    are reported, together with the swap-test value of the disturbed
    block against an honest copy, (1 + <psi|rho|psi>) / 2.

    Raises:
        ParameterError: If (a, b, c, d) do not extend to a unitary, or no phases are given
    """
    if not thetas:
        raise ParameterError("At least one block phase is required")
    adversary = EntangleMeasureAdversary(a, b, c, d)
    z_exact, x_exact, z_sampled, x_sampled = [], [], [], []
    for theta in thetas:
        z, x = ancilla_marginals(a, b, c, d, theta)
        z_exact.append(z)
        x_exact.append(x)
        z_freq, x_freq = adversary.sample_ancilla(bell_state(theta), shots, rng)
        z_sampled.append(z_freq)
        x_sampled.append(x_freq)

    max_tv_analytic = max(_max_pairwise_tv(z_exact), _max_pairwise_tv(x_exact))
    max_tv_sampled = max(_max_pairwise_tv(z_sampled), _max_pairwise_tv(x_sampled))
    honest = bell_state(thetas[0])
    swap_p0 = (1.0 + simcore.fidelity_pure(adversary.disturbed_block(honest), honest)) / 2.0

    report = LeakReport(
        amplitudes=[[complex(v).real, complex(v).imag] for v in (a, b, c, d)],
        thetas=list(thetas),
        shots=shots,
        z_distributions=[z.tolist() for z in z_exact],
        x_distributions=[x.tolist() for x in x_exact],
        sampled_z=[z.tolist() for z in z_sampled],
        sampled_x=[x.tolist() for x in x_sampled],
        max_tv_analytic=max_tv_analytic,
        max_tv_sampled=max_tv_sampled,
        tv_noise_bound=3 * math.sqrt(0.5 / shots),
        information_gained=max_tv_analytic,
        swap_test_p0=swap_p0,
    )
    logger.info(
        f"entangle_measure: max TV analytic={max_tv_analytic:.3e}, sampled={max_tv_sampled:.4f}, "
        f"swap test P(0)={swap_p0:.4f}"
    )
    return report
