import hashlib
import hmac
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from quantum_nft.errors import CapacityError, ConstraintError, DecodeError, InvariantError, ProtocolError
from quantum_nft.model import codec, ledger
from quantum_nft.model.consensus import StakeLedger
from quantum_nft.model.hypergraph import HyperedgeMode
from quantum_nft.solver import simcore
from quantum_nft.solver.driver.api_models import (
    PeerVerdict,
    RoundReport,
    RoundStatus,
    SwapTestReport,
)

logger = logging.getLogger(__name__)

AUTH_FAILED = "auth_failed"
INCONSISTENT_PHASE = "inconsistent_phase"
MAX_SWAP_WIDTH = 6


@dataclass
class Peer:
    """A network participant holding its own copy of the chain."""
    id: str
    chain: ledger.ChainState
    trusted: bool = True
    log: ledger.ChainLog = field(default_factory=ledger.ChainLog)

    @property
    def encoding(self) -> codec.PhaseEncoding:
        return self.chain.encoding


class QuantumPayload:
    """
    A block state in transit.

    The state can be taken exactly once; a second `take` is a protocol error,
    so a payload can never be handed to two receivers.
    """

    def __init__(self, state: simcore.StateVector) -> None:
        self._state: Optional[simcore.StateVector] = state

    @property
    def consumed(self) -> bool:
        return self._state is None

    def take(self) -> simcore.StateVector:
        if self._state is None:
            raise ProtocolError("Quantum payload was already consumed")
        state, self._state = self._state, None
        return state


@dataclass(frozen=True)
class ClassicalDisclosure:
    """
    The (theta_A, theta_B) announcement sent alongside each block copy.

    The QKD link is modelled as an authenticated, confidential channel: the
    tag is an HMAC over the message keyed with the genesis secret.
    """
    round_id: int
    block_index: int
    theta_a: float
    theta_b: float
    tag: str = ""

    def message(self) -> bytes:
        return f"{self.round_id}|{self.block_index}|{self.theta_a!r}|{self.theta_b!r}".encode()

    def signed(self, secret: str) -> "ClassicalDisclosure":
        tag = hmac.new(secret.encode(), self.message(), hashlib.sha256).hexdigest()
        return ClassicalDisclosure(self.round_id, self.block_index, self.theta_a, self.theta_b, tag)

    def authentic(self, secret: str) -> bool:
        return hmac.compare_digest(self.signed(secret).tag, self.tag)


class Adversary(Protocol):
    """Anything sitting on a channel that may replace what passes through it."""

    def intercept(
        self,
        state: simcore.StateVector,
        disclosure: ClassicalDisclosure,
        rng: np.random.Generator,
    ) -> tuple[simcore.StateVector, ClassicalDisclosure]:
        ...


@dataclass
class Channel:
    """Minter-to-peer link; `adversary` None is an honest channel."""
    name: str
    adversary: Optional[Adversary] = None

    def transmit(
        self,
        payload: QuantumPayload,
        disclosure: ClassicalDisclosure,
        rng: np.random.Generator,
    ) -> tuple[QuantumPayload, ClassicalDisclosure]:
        if self.adversary is None:
            return payload, disclosure
        state, disclosure = self.adversary.intercept(payload.take(), disclosure, rng)
        return QuantumPayload(state), disclosure


class Minter:
    """Prepares one independent copy of a block state per receiving peer."""

    def __init__(self) -> None:
        self.preparations = 0

    def prepare(self, block: ledger.Block) -> QuantumPayload:
        self.preparations += 1
        return QuantumPayload(ledger.create_block_state(block))


@dataclass
class VerificationResult:
    passed: bool
    outcome: str
    state: Optional[simcore.StateVector] = None


def verify_block(
    peer: Peer,
    received_state: simcore.StateVector,
    theta_a: float,
    theta_b: float,
    rng: np.random.Generator,
) -> VerificationResult:
    """
    Measures a received block copy in the basis of the disclosed phase.

    Passes only on the |+_T> outcome with T = theta_A + theta_B; the minus
    and both leak outcomes fail. The collapsed state is returned so a
    passing peer can integrate its own copy.

    Raises:
        ProtocolError: If the received state is not a 2-qubit state
    """
    if received_state.n_qubits != 2:
        raise ProtocolError(f"Peer {peer.id} expected a 2-qubit block, got {received_state.n_qubits} qubits")
    outcome, collapsed = simcore.measure_in_block_basis(received_state, 0, 1, theta_a + theta_b, rng)
    passed = outcome is simcore.BlockOutcome.PLUS
    logger.debug(f"Peer {peer.id} verification: {outcome.value}")
    return VerificationResult(passed=passed, outcome=outcome.value, state=collapsed)


def receive_block(
    peer: Peer,
    payload: QuantumPayload,
    disclosure: ClassicalDisclosure,
    secret: str,
    rng: np.random.Generator,
) -> VerificationResult:
    """Authenticates the disclosure, checks it against the encoding, then verifies the copy."""
    state = payload.take()
    if not disclosure.authentic(secret):
        logger.warning(f"Peer {peer.id} rejected an unauthenticated disclosure")
        return VerificationResult(passed=False, outcome=AUTH_FAILED)
    if peer.encoding.scaled:
        try:
            codec.decode_info(disclosure.theta_a, peer.encoding, disclosure.block_index)
        except DecodeError:
            logger.warning(f"Peer {peer.id} got theta_A off the encoding lattice for block {disclosure.block_index}")
            return VerificationResult(passed=False, outcome=INCONSISTENT_PHASE)
    return verify_block(peer, state, disclosure.theta_a, disclosure.theta_b, rng)


def build_peers(
    ids: list[str],
    encoding: codec.PhaseEncoding,
    trusted: Optional[list[bool]] = None,
    mode: HyperedgeMode = HyperedgeMode.BOTH,
    enforce_budget: bool = True,
) -> list[Peer]:
    trusted = trusted if trusted is not None else [True] * len(ids)
    return [
        Peer(
            id=peer_id,
            chain=ledger.ChainState(encoding=encoding, mode=mode, enforce_budget=enforce_budget),
            trusted=is_trusted,
        )
        for peer_id, is_trusted in zip(ids, trusted)
    ]


def mint_round(
    peers: list[Peer],
    stakes: StakeLedger,
    owner_info: str,
    rng: np.random.Generator,
    *,
    secret: str,
    round_id: int = 1,
    channels: Optional[dict[str, Channel]] = None,
    token_bits: Optional[str] = None,
    token_peer_index: Optional[int] = None,
    workers: int = 1,
    minter: Optional[Minter] = None,
) -> RoundReport:
    """
    Runs one mint -> broadcast -> verify -> integrate round.

    The validator is drawn by proof of stake and mints a block for
    `owner_info` with a fresh token. Every peer, validator included,
    receives its own prepared copy plus the signed phase disclosure over
    its channel and verifies it. The round commits when the passing share
    of trusted peers reaches the policy quorum; otherwise it aborts, the
    validator is slashed and the token is discarded.

    Args:
        peers: All peers, in stake-ledger order
        stakes: Proof-of-stake ledger
        owner_info: Owner/asset bits for the new block
        rng: Round generator
        secret: Genesis secret keying the disclosure tags
        round_id: Identifier written to reports and logs
        channels: Per-peer channels by peer id; missing entries are honest
        token_bits: Fixed token bits instead of a fresh draw
        token_peer_index: Token peer index k; defaults to the validator's 1-based position
        workers: Threads used for peer verification
        minter: Preparation counter, created when omitted

    Returns:
        RoundReport with status "committed" or "aborted"

    Raises:
        ConsensusError: If no peer holds stake
        ConstraintError: If the block would break the weight budget
        CapacityError: If the chain is full
    """
    if not peers:
        raise ProtocolError("A round needs at least one peer")
    channels = channels or {}
    minter = minter or Minter()
    by_id = {peer.id: peer for peer in peers}

    validator_id = stakes.select_validator(rng)
    validator = by_id[validator_id]
    encoding = validator.encoding
    k = token_peer_index if token_peer_index is not None else peers.index(validator) + 1
    if token_bits is not None:
        token = codec.Token.from_bits(token_bits, encoding.token_theta1, k)
    else:
        token = codec.generate_token(encoding.token_qubits, encoding.token_theta1, k, rng)

    index = validator.chain.height + 1
    if index > ledger.MAX_BLOCKS:
        raise CapacityError(f"Chains are limited to {ledger.MAX_BLOCKS} blocks")
    block = ledger.Block.mint(index, owner_info, token, encoding)
    if validator.chain.enforce_budget and not codec.validate_budget(
        validator.chain.phases() + [(block.theta_a, block.theta_b)]
    ):
        raise ConstraintError(f"Block {index} would exceed the weight budget")
    disclosure = ClassicalDisclosure(round_id, index, block.theta_a, block.theta_b).signed(secret)
    logger.info(
        f"Round {round_id}: validator {validator_id} mints block {index} "
        f"(theta_A={block.theta_a:.6f}, theta_B={block.theta_b:.6f})"
    )

    base_seed = int(rng.integers(2**63))
    deliveries = []
    for i, peer in enumerate(peers):
        channel = channels.get(peer.id, Channel(peer.id))
        payload, received = channel.transmit(minter.prepare(block), disclosure, simcore.derive_rng(base_seed, i, 0))
        deliveries.append((i, peer, payload, received))

    def verify(item) -> VerificationResult:
        i, peer, payload, received = item
        return receive_block(peer, payload, received, secret, simcore.derive_rng(base_seed, i, 1))

    # every verdict is in before any chain changes
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(verify, deliveries))
    else:
        results = [verify(item) for item in deliveries]
    if minter.preparations < len(peers):
        raise InvariantError(f"{minter.preparations} preparations for {len(peers)} peers")

    verdicts = [
        PeerVerdict(peer=peer.id, passed=result.passed, outcome=result.outcome, trusted=peer.trusted)
        for peer, result in zip(peers, results)
    ]
    voters = [v for v in verdicts if v.trusted] or verdicts
    passing_share = sum(v.passed for v in voters) / len(voters)
    flagged = [v.peer for v in verdicts if not v.passed]
    committed = passing_share >= stakes.policy.quorum

    report = RoundReport(
        round_id=round_id,
        winner=validator_id,
        status=RoundStatus.COMMITTED.value if committed else RoundStatus.ABORTED.value,
        block_index=index,
        owner_bits=owner_info,
        token_bits=token.bits,
        theta_a=block.theta_a,
        theta_b=block.theta_b,
        verdicts=verdicts,
        flagged_channels=flagged,
        preparations=minter.preparations,
    )
    outcomes = {v.peer: v.outcome for v in verdicts}

    if committed:
        record = ledger.ChainLogRecord(kind="block", round_id=round_id, block=block, verdicts=outcomes)
        for peer, result in zip(peers, results):
            # peers whose copy failed rebuild the block from the committed records
            verified = result.state if result.passed else None
            peer.chain = ledger.append_block(peer.chain, block, verified)
            peer.log.append(record)
        stakes.reward(validator_id)
        stakes.settle_win(validator_id)
        reward = ledger.ChainLogRecord(
            kind="stake", round_id=round_id, event="reward", peer=validator_id, amount=stakes.policy.reward
        )
        for peer in peers:
            peer.log.append(reward)
        logger.info(f"Round {round_id} committed block {index}; {len(flagged)} copies flagged")
    else:
        report.abort_reason = (
            f"{len(voters) - sum(v.passed for v in voters)} of {len(voters)} trusted peers failed verification"
        )
        stakes.slash(validator_id)
        slash = ledger.ChainLogRecord(
            kind="stake", round_id=round_id, event="slash", peer=validator_id,
            amount=stakes.policy.slash_fraction,
        )
        for peer in peers:
            peer.log.append(slash)
        logger.warning(f"Round {round_id} aborted: {report.abort_reason}; flagged {flagged}")
    return report


# --- Swap Test ---

def swap_test(
    psi: simcore.StateVector, phi: simcore.StateVector, shots: int, rng: np.random.Generator
) -> SwapTestReport:
    """
    Controlled-swap test between two registers of equal width.

    The ancilla is qubit 0, psi occupies qubits 1..w and phi qubits w+1..2w.
    P(ancilla = 0) = (1 + |<psi|phi>|^2) / 2.

    Raises:
        ProtocolError: On a width mismatch
        CapacityError: If a register is wider than MAX_SWAP_WIDTH
    """
    if psi.n_qubits != phi.n_qubits:
        raise ProtocolError(f"Swap test needs equal widths, got {psi.n_qubits} and {phi.n_qubits}")
    width = psi.n_qubits
    if width > MAX_SWAP_WIDTH:
        raise CapacityError(f"Swap test supports registers up to {MAX_SWAP_WIDTH} qubits, got {width}")
    register = simcore.tensor_states(simcore.tensor_states(phi, psi), simcore.new_state(1))
    instructions: list[simcore.Instruction] = [(simcore.Gate(simcore.GateKind.H), (0,))]
    instructions += [
        (simcore.Gate(simcore.GateKind.CSWAP), (0, 1 + i, 1 + width + i)) for i in range(width)
    ]
    instructions.append((simcore.Gate(simcore.GateKind.H), (0,)))
    register = simcore.apply_circuit(register, instructions)

    probs = simcore.probabilities(register)
    counts = simcore.sample_counts(probs, register.n_qubits, [0], shots, rng)
    overlap_sq = abs(simcore.overlap(psi, phi)) ** 2
    return SwapTestReport(
        shots=shots,
        p0_sampled=float(counts[0]) / shots,
        p0_analytic=(1.0 + overlap_sq) / 2.0,
        overlap_sq=overlap_sq,
    )


def compare_chains_swap_test(
    peer_m: Peer, peer_n: Peer, shots: int, rng: np.random.Generator
) -> SwapTestReport:
    """Checks whether two peers hold the same chain register."""
    if peer_m.chain.register is None or peer_n.chain.register is None:
        raise ProtocolError("Swap test needs two non-empty chains")
    report = swap_test(peer_m.chain.register, peer_n.chain.register, shots, rng)
    logger.info(
        f"Swap test {peer_m.id} vs {peer_n.id}: P(0)={report.p0_sampled:.4f} "
        f"(analytic {report.p0_analytic:.4f})"
    )
    return report
