import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from dataclasses_json import dataclass_json

from quantum_nft.errors import CapacityError, CodecError, DecodeError, ParameterError
from quantum_nft.solver import simcore

logger = logging.getLogger(__name__)

PHASE_TOLERANCE = 1e-9
MAX_TOKEN_QUBITS = 50
# token qubits are prepared and measured in batches of this many
_TOKEN_BATCH = 8


@dataclass_json
@dataclass
class PhaseEncoding:
    """
    Chain-wide parameters mapping classical bits to phases.

    Every peer holds an identical copy, fixed at genesis.

    Bit conventions differ on purpose:
        - owner info bits are read left to right, bit i (from 1) weighs theta1 / 2^(i-1)
        - token bits are read right to left, bit i (from 1) weighs token_theta1 / 2^(k+i)
    """
    theta1: float = math.pi / 4          # base angle for owner/asset info
    token_theta1: float = math.pi        # base angle for token phases
    scaling_base: int = 2                # n in theta_mA = theta_A / n^(m-1)
    info_length: int = 3                 # L, fixed per chain
    token_qubits: int = 20               # q
    scaled: bool = True                  # scale info phases by block index

    def validate(self) -> None:
        if not self.theta1 > 0:
            raise CodecError(f"theta1 must be positive, got {self.theta1}")
        if not self.token_theta1 > 0:
            raise CodecError(f"token_theta1 must be positive, got {self.token_theta1}")
        if self.scaling_base < 1:
            raise CodecError(f"scaling_base must be >= 1, got {self.scaling_base}")
        if not 3 <= self.info_length <= 64:
            raise CodecError(f"info_length must be in 3..64, got {self.info_length}")
        if not 1 <= self.token_qubits <= MAX_TOKEN_QUBITS:
            raise CodecError(f"token_qubits must be in 1..{MAX_TOKEN_QUBITS}, got {self.token_qubits}")

    def block_scale(self, block_index: int) -> float:
        if block_index < 1:
            raise CodecError(f"Block index must be positive, got {block_index}")
        if not self.scaled:
            return 1.0
        return 1.0 / self.scaling_base ** (block_index - 1)


@dataclass_json
@dataclass
class InfoPayload:
    """Owner/asset identifier bits destined for block `block_index`."""
    bits: str
    block_index: int = 1

    def __post_init__(self) -> None:
        if not self.bits or set(self.bits) - {"0", "1"}:
            raise CodecError(f"Info payload must be a binary string, got '{self.bits}'")


@dataclass_json
@dataclass
class Token:
    """Random token: measured bits and the phase they determine for peer index k."""
    bits: str
    theta: float
    peer_index: int

    @classmethod
    def from_bits(cls, bits: str, theta1: float, peer_index: int) -> "Token":
        return cls(bits=bits, theta=token_phase(bits, theta1, peer_index), peer_index=peer_index)

    def rederive(self, theta1: float) -> float:
        return token_phase(self.bits, theta1, self.peer_index)


def encode_info(payload: InfoPayload, enc: PhaseEncoding) -> float:
    """
    Maps owner bits to the class-A phase of block m.

    theta_mA = (1/n^(m-1)) * sum_i bit_i * theta1 / 2^(i-1), with i counted
    from the leftmost bit. "110" with theta1 = pi/4 gives pi/4 + pi/8 = 3pi/8.

    Raises:
        CodecError: If the payload length differs from the chain's info length
    """
    if len(payload.bits) != enc.info_length:
        raise CodecError(
            f"Info payload has {len(payload.bits)} bits, chain expects {enc.info_length}"
        )
    total = math.fsum(
        enc.theta1 / 2 ** i for i, bit in enumerate(payload.bits) if bit == "1"
    )
    return total * enc.block_scale(payload.block_index)


def decode_info(theta: float, enc: PhaseEncoding, block_index: int) -> str:
    """
    Inverts `encode_info` for block `block_index`.

    Raises:
        DecodeError: If no bit string encodes to theta within 1e-9 rad
    """
    length = enc.info_length
    unscaled = theta / enc.block_scale(block_index)
    step = enc.theta1 / 2 ** (length - 1)
    value = round(unscaled / step)
    if not 0 <= value < 2**length:
        raise DecodeError(f"Phase {theta} is outside the {length}-bit encoding range")
    bits = format(value, f"0{length}b")
    if abs(encode_info(InfoPayload(bits, block_index), enc) - theta) > PHASE_TOLERANCE:
        raise DecodeError(f"Phase {theta} does not sit on the encoding lattice")
    return bits


def token_phase(bits: str, theta1: float, peer_index: int) -> float:
    """
    Token phase for measured bits b_q ... b_1 (b_1 rightmost).

    theta = sum_i b_i * theta1 / 2^(k+i). With theta1 = pi, k = 1:
    001 -> pi/4, 100 -> pi/16, 110 -> 3pi/16.
    """
    if set(bits) - {"0", "1"}:
        raise CodecError(f"Token bits must be binary, got '{bits}'")
    return math.fsum(
        theta1 / 2 ** (peer_index + i)
        for i, bit in enumerate(reversed(bits), start=1)
        if bit == "1"
    )


def generate_token(q: int, theta1: float, peer_index: int, rng: np.random.Generator) -> Token:
    """
    Prepares q qubits in |+>, measures them and derives the token phase.

    Qubits are simulated in batches so the register never exceeds the
    statevector capacity; the first measured qubit becomes b_1.

    Raises:
        CapacityError: If q is outside 1..50
    """
    if not 1 <= q <= MAX_TOKEN_QUBITS:
        raise CapacityError(f"Token needs 1..{MAX_TOKEN_QUBITS} qubits, got {q}")
    chunks = []
    remaining = q
    while remaining > 0:
        width = min(_TOKEN_BATCH, remaining)
        state = simcore.new_state(width)
        for qubit in range(width):
            state = simcore.apply_gate(state, simcore.Gate(simcore.GateKind.H), (qubit,))
        measured, _ = simcore.measure_all(state, rng)
        chunks.append(measured)
        remaining -= width
    # later batches hold the higher-order bits
    bits = "".join(reversed(chunks))
    token = Token.from_bits(bits, theta1, peer_index)
    logger.debug(f"Generated token bits={bits} theta={token.theta:.12f} k={peer_index}")
    return token


def validate_budget(chain_phases: Iterable[tuple[float, float]]) -> bool:
    """Accepts iff sum over blocks of (theta_A + theta_B) is strictly below pi."""
    total = math.fsum(theta_a + theta_b for theta_a, theta_b in chain_phases)
    return total < math.pi


def token_collision_report(
    draws: int, q: int, theta1: float, peer_index: int, rng: np.random.Generator
) -> dict:
    """
    Draws `draws` tokens and counts repeated phases.

    The expected count is the birthday bound draws*(draws-1)/2^(q+1).
    """
    if draws < 1:
        raise ParameterError(f"draws must be positive, got {draws}")
    seen: dict[str, int] = {}
    for _ in range(draws):
        token = generate_token(q, theta1, peer_index, rng)
        seen[token.bits] = seen.get(token.bits, 0) + 1
    collisions = sum(count - 1 for count in seen.values())
    expected = draws * (draws - 1) / 2 ** (q + 1)
    if collisions > expected:
        logger.warning(f"Token collisions {collisions} above birthday expectation {expected:.3f}")
    return {
        "draws": draws,
        "token_qubits": q,
        "collisions": collisions,
        "expected_collisions": expected,
    }
