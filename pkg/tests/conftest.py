import math
from pathlib import Path

import numpy as np
import pytest

from quantum_nft.model import codec, ledger
from quantum_nft.model.hypergraph import HyperedgeMode

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def three_sigma(p: float, trials: int) -> float:
    return 3 * math.sqrt(p * (1 - p) / trials)


def brute_force_chain(phases: list[float], mode: HyperedgeMode = HyperedgeMode.BOTH) -> np.ndarray:
    """
    Chain amplitudes written out term by term.

    Block m (from 0) lives on qubits (2m, 2m + 1). A pattern b over blocks
    populates the index with both qubits of every set block; its phase is
    sum_m b_m * Theta_m plus pi/2 per hyperedge class for each block m >= 1
    whose prefix b_0..b_m is all ones.
    """
    n_blocks = len(phases)
    amplitudes = np.zeros(1 << (2 * n_blocks), dtype=np.complex128)
    classes = len(mode.classes)
    for pattern in np.ndindex(*([2] * n_blocks)):
        index = sum(bit * (3 << (2 * m)) for m, bit in enumerate(pattern))
        phase = sum(bit * theta for bit, theta in zip(pattern, phases))
        for m in range(1, n_blocks):
            if all(pattern[: m + 1]):
                phase += classes * math.pi / 2
        amplitudes[index] = np.exp(1j * phase) / math.sqrt(2**n_blocks)
    return amplitudes


def build_chain(blocks: list[ledger.Block], encoding: codec.PhaseEncoding, enforce_budget: bool = True,
                mode: HyperedgeMode = HyperedgeMode.BOTH) -> ledger.ChainState:
    chain = ledger.ChainState(encoding=encoding, mode=mode, enforce_budget=enforce_budget)
    for block in blocks:
        chain = ledger.append_block(chain, block)
    return chain


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def two_block_encoding() -> codec.PhaseEncoding:
    return codec.PhaseEncoding(theta1=math.pi / 4, token_theta1=math.pi, info_length=3, token_qubits=3)


@pytest.fixture
def two_block_blocks(two_block_encoding) -> list[ledger.Block]:
    """Block phases (pi/16, pi/16) and (pi/32, pi/32)."""
    return [
        ledger.Block.mint(1, "001", codec.Token.from_bits("001", math.pi, 3), two_block_encoding),
        ledger.Block.mint(2, "001", codec.Token.from_bits("010", math.pi, 3), two_block_encoding),
    ]


@pytest.fixture
def two_block_chain(two_block_blocks, two_block_encoding) -> ledger.ChainState:
    return build_chain(two_block_blocks, two_block_encoding)


@pytest.fixture
def three_nft_encoding() -> codec.PhaseEncoding:
    return codec.PhaseEncoding(
        theta1=math.pi / 2, token_theta1=math.pi, info_length=5, token_qubits=3, scaled=False
    )


@pytest.fixture
def three_nft_blocks(three_nft_encoding) -> list[ledger.Block]:
    """Phases (pi/2, pi/4), (pi/4, pi/16), (pi/32, 3pi/16)."""
    specs = [("10000", "001"), ("01000", "100"), ("00001", "110")]
    return [
        ledger.Block.mint(m, owner, codec.Token.from_bits(token, math.pi, 1), three_nft_encoding)
        for m, (owner, token) in enumerate(specs, start=1)
    ]
