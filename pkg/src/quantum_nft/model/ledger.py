import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from dataclasses_json import dataclass_json

from quantum_nft.errors import (
    CapacityError,
    ConstraintError,
    InvariantError,
    OrderingError,
    ProtocolError,
)
from quantum_nft.model import codec, hypergraph
from quantum_nft.model.hypergraph import HyperedgeMode, VertexClass
from quantum_nft.solver import simcore

logger = logging.getLogger(__name__)

MAX_BLOCKS = 6
LOG_SCHEMA_VERSION = 1
REGISTER_FIDELITY_FLOOR = 1 - 1e-10


@dataclass_json
@dataclass
class Block:
    """
    One NFT entry stored on a Bell pair.

    The class-A qubit carries the owner/asset phase, the class-B qubit the token phase.
    """
    index: int
    theta_a: float
    theta_b: float
    owner_bits: str
    token: codec.Token

    @classmethod
    def mint(
        cls, index: int, owner_bits: str, token: codec.Token, enc: codec.PhaseEncoding
    ) -> "Block":
        theta_a = codec.encode_info(codec.InfoPayload(owner_bits, index), enc)
        return cls(index=index, theta_a=theta_a, theta_b=token.theta, owner_bits=owner_bits, token=token)

    @property
    def relative_phase(self) -> float:
        return self.theta_a + self.theta_b

    def records_consistent(self, enc: codec.PhaseEncoding) -> bool:
        """True when both phases can be re-derived from the classical records."""
        theta_a = codec.encode_info(codec.InfoPayload(self.owner_bits, self.index), enc)
        theta_b = self.token.rederive(enc.token_theta1)
        return (
            abs(theta_a - self.theta_a) <= codec.PHASE_TOLERANCE
            and abs(theta_b - self.theta_b) <= codec.PHASE_TOLERANCE
            and abs(self.token.theta - self.theta_b) <= codec.PHASE_TOLERANCE
        )


@dataclass
class ChainState:
    """A peer's copy of the chain: block records plus the entangled register."""
    encoding: codec.PhaseEncoding
    blocks: list[Block] = field(default_factory=list)
    register: simcore.StateVector | None = None
    mode: HyperedgeMode = HyperedgeMode.BOTH
    # off for reference chains whose phases sum past pi (the three-NFT chain sums to 41pi/32)
    enforce_budget: bool = True

    @property
    def height(self) -> int:
        return len(self.blocks)

    @property
    def n_qubits(self) -> int:
        return 2 * self.height

    def phases(self) -> list[tuple[float, float]]:
        return [(b.theta_a, b.theta_b) for b in self.blocks]


# --- Block States ---

def create_block_state(block: Block) -> simcore.StateVector:
    """
    Bell pair carrying the block's relative phase: (|00> + e^{i(tA + tB)}|11>)/sqrt(2).

    Raises:
        ConstraintError: If the block alone breaks the weight budget
    """
    if not codec.validate_budget([(block.theta_a, block.theta_b)]):
        raise ConstraintError(f"Block {block.index} phases exceed the weight budget")
    state = simcore.bell_pair(simcore.new_state(2), 0, 1)
    state = hypergraph.apply_weight(state, 0, VertexClass.A, block.theta_a)
    return hypergraph.apply_weight(state, 0, VertexClass.B, block.theta_b, block.theta_a)


def block_instructions(block: Block, offset: int) -> list[simcore.Instruction]:
    """Gate list preparing a block on qubits (offset, offset + 1) from |00>."""
    a, b = offset, offset + 1
    return [
        (simcore.Gate(simcore.GateKind.H), (a,)),
        (simcore.Gate(simcore.GateKind.CNOT), (a, b)),
        (simcore.Gate.phase(block.theta_a), (a,)),
        (simcore.Gate.phase(block.theta_b), (b,)),
    ]


def entangling_instructions(block_index: int, mode: HyperedgeMode) -> list[simcore.Instruction]:
    """
    (m-1)-controlled P(pi/2) per class: earlier same-class qubits control the new one.

    Block 1 has no entangling gate; block 2 gets plain CP, block 3 CC-P, and so on.
    """
    if block_index < 2:
        return []
    return hypergraph.edge_instructions(list(range(block_index)), mode)


def chain_circuit(chain: ChainState) -> list[simcore.Instruction]:
    instructions: list[simcore.Instruction] = []
    for block in chain.blocks:
        instructions += block_instructions(block, 2 * (block.index - 1))
        instructions += entangling_instructions(block.index, chain.mode)
    return instructions


# --- Chain Growth ---

def append_block(
    chain: ChainState, block: Block, verified_state: simcore.StateVector | None = None
) -> ChainState:
    """
    Adjoins a block to the chain and entangles it with all earlier blocks.

    Args:
        chain: The current chain copy (left untouched)
        block: The block to add; its index must be height + 1
        verified_state: The peer's post-verification copy of the block, if any;
            a fresh preparation is used otherwise

    Returns:
        The extended chain copy

    Raises:
        OrderingError: If the block index is out of sequence
        CapacityError: If the chain already holds MAX_BLOCKS blocks
        ConstraintError: If the chain budget would reach pi
    """
    if block.index != chain.height + 1:
        raise OrderingError(f"Expected block {chain.height + 1}, got block {block.index}")
    if block.index > MAX_BLOCKS:
        raise CapacityError(f"Chains are limited to {MAX_BLOCKS} blocks")
    if chain.enforce_budget and not codec.validate_budget(
        chain.phases() + [(block.theta_a, block.theta_b)]
    ):
        raise ConstraintError(f"Appending block {block.index} would exceed the weight budget")

    piece = verified_state if verified_state is not None else create_block_state(block)
    if piece.n_qubits != 2:
        raise ProtocolError(f"A block state has 2 qubits, got {piece.n_qubits}")
    register = piece.copy() if chain.register is None else simcore.tensor_states(piece, chain.register)
    register = simcore.apply_circuit(register, entangling_instructions(block.index, chain.mode))
    logger.debug(f"Appended block {block.index}: relative phase {block.relative_phase:.12f}")
    return ChainState(
        encoding=chain.encoding,
        blocks=chain.blocks + [block],
        register=register,
        mode=chain.mode,
        enforce_budget=chain.enforce_budget,
    )


def closed_form(chain: ChainState) -> simcore.StateVector | None:
    """
    Rebuilds the register from the block records alone.

    Returns None for an empty chain.
    """
    replay = ChainState(encoding=chain.encoding, mode=chain.mode, enforce_budget=chain.enforce_budget)
    for block in chain.blocks:
        replay = append_block(replay, block)
    return replay.register


def build_density(chain: ChainState, noise: simcore.NoiseChannel | None = None) -> simcore.DensityMatrix:
    """Replays the chain circuit in density-matrix mode with optional per-gate noise."""
    if chain.height == 0:
        raise ProtocolError("Cannot build the density matrix of an empty chain")
    return simcore.run_density(chain.n_qubits, chain_circuit(chain), noise)


def check_register(chain: ChainState) -> float:
    """
    Fidelity of the live register against the closed form.

    Raises:
        InvariantError: If the fidelity drops below 1 - 1e-10
    """
    reference = closed_form(chain)
    if reference is None:
        return 1.0
    if chain.register is None:
        raise InvariantError("Chain has blocks but no register")
    fidelity = abs(simcore.overlap(reference, chain.register)) ** 2
    if fidelity < REGISTER_FIDELITY_FLOOR:
        raise InvariantError(f"Register diverged from its block records (fidelity {fidelity:.12f})")
    return fidelity


def bell_support_ok(register: simcore.StateVector, n_blocks: int, tol: float = 1e-12) -> bool:
    """True when every populated basis state reads 00 or 11 on each block pair."""
    indices = np.nonzero(np.abs(register.amplitudes) > tol)[0]
    for m in range(n_blocks):
        bit_a = (indices >> (2 * m)) & 1
        bit_b = (indices >> (2 * m + 1)) & 1
        if np.any(bit_a != bit_b):
            return False
    return True


def find_blocks_by_owner(chain: ChainState, owner_bits: str) -> list[Block]:
    """Proof of ownership: every block minted for these owner bits."""
    return [block for block in chain.blocks if block.owner_bits == owner_bits]


# --- Chain Log ---

@dataclass_json
@dataclass
class ChainLogRecord:
    """
    One line of the append-only chain log.

    kind "block" carries the block and the per-peer verifier outcomes;
    kind "stake" carries a reward or slash event.
    """
    kind: str
    round_id: int
    schema: int = LOG_SCHEMA_VERSION
    block: Optional[Block] = None
    verdicts: dict[str, str] = field(default_factory=dict)
    event: Optional[str] = None
    peer: Optional[str] = None
    amount: Optional[float] = None


class ChainLog:
    """
    Append-only JSON-lines log of a peer's classical chain records.

    Kept in memory; mirrored to `path` when one is given so a chain can be
    replayed after a restart.
    """

    def __init__(self, path: Path | None = None) -> None:
        self._path = path
        self._lines: list[str] = []
        if path is not None and path.exists():
            self._lines = [line for line in path.read_text().splitlines() if line.strip()]
            logger.info(f"Loaded {len(self._lines)} chain log records from {path}")

    @property
    def lines(self) -> list[str]:
        return list(self._lines)

    def append(self, record: ChainLogRecord) -> None:
        line = record.to_json(sort_keys=True)
        self._lines.append(line)
        if self._path is not None:
            with open(self._path, "a") as fh:
                fh.write(line + "\n")

    def records(self) -> list[ChainLogRecord]:
        return [ChainLogRecord.from_json(line) for line in self._lines]

    def text(self) -> str:
        return "".join(line + "\n" for line in self._lines)


def replay_log(
    records: list[ChainLogRecord],
    encoding: codec.PhaseEncoding,
    mode: HyperedgeMode = HyperedgeMode.BOTH,
) -> ChainState:
    """Rebuilds a chain copy from its log; stake events are skipped."""
    chain = ChainState(encoding=encoding, mode=mode)
    for record in records:
        if record.schema != LOG_SCHEMA_VERSION:
            raise ProtocolError(f"Unsupported chain log schema {record.schema}")
        if record.kind == "block" and record.block is not None:
            chain = append_block(chain, record.block)
    return chain
