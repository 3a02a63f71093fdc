# Statevector / Density-Matrix Engine
# -----------------------------------
# Conventions:
#     - Qubit 0 is the least-significant bit of a basis-state index, so the
#       amplitude of |q_{n-1} ... q_1 q_0> lives at index sum_q q * 2^q.
#     - Gates listing several qubits (controls first, target last) use the
#       first listed qubit as the most-significant bit of the local matrix.
#     - Pauli strings read like bit strings: the rightmost label acts on qubit 0.
#
# Every gate keeps the statevector normalized to 1e-10; every channel keeps
# the density matrix trace at 1 within 1e-10.

import json
import logging
import math
import string
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from quantum_nft.errors import (
    CapacityError,
    InvariantError,
    ParameterError,
    QubitIndexError,
)

logger = logging.getLogger(__name__)

MAX_STATE_QUBITS = 16
MAX_DENSITY_QUBITS = 8
NORM_TOLERANCE = 1e-10
PSD_FLOOR = -1e-8

_SQRT2_INV = 1 / math.sqrt(2)

PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_FIXED_MATRICES = {
    "h": np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT2_INV,
    "x": PAULI_MATRICES["X"],
    "cnot": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
    "swap": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
    ),
}
# control, a, b: |1 0 1> <-> |1 1 0>
_CSWAP = np.eye(8, dtype=np.complex128)
_CSWAP[[5, 6]] = _CSWAP[[6, 5]]
_FIXED_MATRICES["cswap"] = _CSWAP


class GateKind(Enum):
    """
    Gate families understood by the engine.

    Diagonal families (Z, SDG, P, CP, CCP, MCP) are applied as elementwise
    phase multiplications; the others through tensor contraction.
    """
    H = "h"
    X = "x"
    Z = "z"
    SDG = "sdg"      # S-dagger, used for Y-basis rotations
    P = "p"          # phase gate P(theta)
    CNOT = "cnot"
    CP = "cp"        # controlled phase
    CCP = "ccp"      # control-control phase
    MCP = "mcp"      # phase with an arbitrary number of controls
    SWAP = "swap"
    CSWAP = "cswap"


_DIAGONAL_KINDS = {GateKind.Z, GateKind.SDG, GateKind.P, GateKind.CP, GateKind.CCP, GateKind.MCP}
_FIXED_ARITY = {
    GateKind.H: 1,
    GateKind.X: 1,
    GateKind.Z: 1,
    GateKind.SDG: 1,
    GateKind.P: 1,
    GateKind.CNOT: 2,
    GateKind.CP: 2,
    GateKind.SWAP: 2,
    GateKind.CCP: 3,
    GateKind.CSWAP: 3,
}


@dataclass(frozen=True)
class Gate:
    """
    A gate family plus its parameters.

    `angle` is in radians and only meaningful for the phase families;
    `n_controls` is only meaningful for MCP.
    """
    kind: GateKind
    angle: float = 0.0
    n_controls: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.angle):
            raise ParameterError(f"Gate angle must be finite, got {self.angle}")
        if self.kind is GateKind.MCP and not 0 <= self.n_controls < MAX_STATE_QUBITS:
            raise ParameterError(f"MCP needs 0..{MAX_STATE_QUBITS - 1} controls, got {self.n_controls}")

    @classmethod
    def phase(cls, angle: float) -> "Gate":
        return cls(GateKind.P, angle)

    @classmethod
    def cp(cls, angle: float) -> "Gate":
        return cls(GateKind.CP, angle)

    @classmethod
    def ccp(cls, angle: float) -> "Gate":
        return cls(GateKind.CCP, angle)

    @classmethod
    def mcp(cls, angle: float, n_controls: int) -> "Gate":
        return cls(GateKind.MCP, angle, n_controls)

    @property
    def arity(self) -> int:
        """Number of qubits the gate acts on (controls included)."""
        if self.kind is GateKind.MCP:
            return self.n_controls + 1
        return _FIXED_ARITY[self.kind]

    @property
    def is_diagonal(self) -> bool:
        return self.kind in _DIAGONAL_KINDS

    def diagonal(self) -> np.ndarray:
        """Diagonal of the local matrix for the diagonal families."""
        if not self.is_diagonal:
            raise ParameterError(f"{self.kind.value} is not a diagonal gate")
        if self.kind is GateKind.Z:
            return np.array([1, -1], dtype=np.complex128)
        if self.kind is GateKind.SDG:
            return np.array([1, -1j], dtype=np.complex128)
        diag = np.ones(1 << self.arity, dtype=np.complex128)
        diag[-1] = np.exp(1j * self.angle)
        return diag

    def matrix(self) -> np.ndarray:
        """Dense local unitary, first listed qubit most significant."""
        if self.is_diagonal:
            return np.diag(self.diagonal())
        return _FIXED_MATRICES[self.kind.value].copy()


Instruction = tuple[Gate, tuple[int, ...]]


@dataclass
class StateVector:
    """A pure register of `n_qubits` qubits."""
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ParameterError(
                f"Expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm_error(self) -> float:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass
class DensityMatrix:
    """A (possibly mixed) register of `n_qubits` qubits."""
    n_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        dim = 1 << self.n_qubits
        if self.entries.shape != (dim, dim):
            raise ParameterError(
                f"Expected a {dim}x{dim} matrix for {self.n_qubits} qubits, got {self.entries.shape}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def is_physical(self, tol: float = NORM_TOLERANCE) -> bool:
        """Hermitian, unit trace and PSD up to numerical slack."""
        if np.max(np.abs(self.entries - self.entries.conj().T)) > tol:
            return False
        if abs(np.trace(self.entries) - 1.0) > tol:
            return False
        return bool(np.min(np.linalg.eigvalsh(self.entries)) >= PSD_FLOOR)


@dataclass(frozen=True)
class NoiseChannel:
    """Depolarizing noise applied to every qubit a gate touches."""
    p: float
    kind: str = "depolarizing"

    def __post_init__(self) -> None:
        if self.kind != "depolarizing":
            raise ParameterError(f"Unsupported noise channel '{self.kind}'")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"Depolarizing probability must be in [0, 1], got {self.p}")

    def kraus(self) -> list[np.ndarray]:
        return kraus_depolarizing(self.p)

    def describe(self) -> dict:
        return {"kind": self.kind, "p": self.p}


class BlockOutcome(Enum):
    """Outcomes of the completed verification basis {|+_T>, |-_T>, |01>, |10>}."""
    PLUS = "plus"
    MINUS = "minus"
    LEAK01 = "leak01"
    LEAK10 = "leak10"


_BLOCK_OUTCOMES = (BlockOutcome.PLUS, BlockOutcome.MINUS, BlockOutcome.LEAK01, BlockOutcome.LEAK10)


# --- Helpers ---

def _check_capacity(n_qubits: int, limit: int, what: str) -> None:
    if not 1 <= n_qubits <= limit:
        raise CapacityError(f"{what} supports 1..{limit} qubits, got {n_qubits}")


def _check_targets(targets: Sequence[int], n_qubits: int, arity: int | None = None) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in targets)
    if arity is not None and len(qubits) != arity:
        raise QubitIndexError(f"Gate expects {arity} qubits, got {len(qubits)}")
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"Duplicate qubit indices in {qubits}")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise QubitIndexError(f"Qubit index {q} out of range for {n_qubits} qubits")
    return qubits


def _axis(qubit: int, n_qubits: int) -> int:
    # C-order reshape puts the most-significant bit on axis 0
    return n_qubits - 1 - qubit


def _apply_to_axes(tensor: np.ndarray, operator: np.ndarray, axes: list[int]) -> np.ndarray:
    k = len(axes)
    op = operator.reshape([2] * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _local_index(n_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    indices = np.arange(1 << n_qubits)
    local = np.zeros_like(indices)
    for q in qubits:
        local = (local << 1) | ((indices >> q) & 1)
    return local


def derive_rng(seed: int | None, *stream: int) -> np.random.Generator:
    """
    Returns an independent generator for the stream (seed, *stream).

    Shots, peers and tomography settings each get their own stream so results
    do not depend on execution order or on the number of workers.
    """
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(s) for s in stream)]))


# --- State Preparation ---

def new_state(n_qubits: int) -> StateVector:
    """
    Allocates |0...0> on `n_qubits` qubits.

    Raises:
        CapacityError: If n_qubits is outside 1..16
    """
    _check_capacity(n_qubits, MAX_STATE_QUBITS, "Statevector")
    amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    return StateVector(n_qubits, amplitudes)


def new_density(n_qubits: int) -> DensityMatrix:
    _check_capacity(n_qubits, MAX_DENSITY_QUBITS, "Density matrix")
    entries = np.zeros((1 << n_qubits, 1 << n_qubits), dtype=np.complex128)
    entries[0, 0] = 1.0
    return DensityMatrix(n_qubits, entries)


def tensor_states(high: StateVector, low: StateVector) -> StateVector:
    """Adjoins `high` above `low`: low keeps qubits 0.., high is renumbered after it."""
    n_qubits = high.n_qubits + low.n_qubits
    _check_capacity(n_qubits, MAX_STATE_QUBITS, "Statevector")
    return StateVector(n_qubits, np.kron(high.amplitudes, low.amplitudes))


# --- Gate Application ---

def apply_gate(state: StateVector, gate: Gate, targets: Sequence[int]) -> StateVector:
    """
    Applies `gate` to the listed qubits and returns the new state.

    Diagonal gates (every phase family, MCP included) multiply amplitudes by
    their diagonal directly; MCP is never decomposed.

    Args:
        state: The register to act on (left untouched)
        gate: The gate to apply
        targets: Qubit indices, controls first and target last

    Returns:
        The transformed register

    Raises:
        QubitIndexError: If targets repeat, are out of range or do not match the gate arity
    """
    n = state.n_qubits
    qubits = _check_targets(targets, n, gate.arity)
    if gate.is_diagonal:
        amplitudes = state.amplitudes * gate.diagonal()[_local_index(n, qubits)]
    else:
        tensor = state.amplitudes.reshape([2] * n)
        axes = [_axis(q, n) for q in qubits]
        amplitudes = _apply_to_axes(tensor, gate.matrix(), axes).reshape(-1)
    result = StateVector(n, amplitudes)
    if not result.norm_error() < NORM_TOLERANCE:
        raise InvariantError(f"Statevector norm drifted by {result.norm_error():.3e} after {gate.kind.value}")
    return result


def apply_circuit(state: StateVector, instructions: Sequence[Instruction]) -> StateVector:
    for gate, targets in instructions:
        state = apply_gate(state, gate, targets)
    return state


def run_statevector(n_qubits: int, instructions: Sequence[Instruction]) -> StateVector:
    return apply_circuit(new_state(n_qubits), instructions)


def decompose_ccp(angle: float, control_1: int, control_2: int, target: int) -> list[Instruction]:
    """
    Control-control phase built from controlled phases and CNOTs.

    CP(a/2) on (c2, t); CNOT(c1, c2); CP(-a/2) on (c2, t); CNOT(c1, c2);
    CP(a/2) on (c1, t). The phases collected on t = 1 add up to a * c1 * c2.
    """
    half = angle / 2
    return [
        (Gate.cp(half), (control_2, target)),
        (Gate(GateKind.CNOT), (control_1, control_2)),
        (Gate.cp(-half), (control_2, target)),
        (Gate(GateKind.CNOT), (control_1, control_2)),
        (Gate.cp(half), (control_1, target)),
    ]


def bell_pair(state: StateVector, qubit_a: int, qubit_b: int) -> StateVector:
    """
    Turns two qubits that are marginally |0> into (|00> + |11>)/sqrt(2).

    Raises:
        QubitIndexError: If the qubits coincide or are out of range
        ParameterError: If either qubit is not in |0>
    """
    qubits = _check_targets((qubit_a, qubit_b), state.n_qubits, 2)
    probs = np.abs(state.amplitudes) ** 2
    indices = np.arange(state.dim)
    for q in qubits:
        if probs[((indices >> q) & 1) == 1].sum() > NORM_TOLERANCE:
            raise ParameterError(f"Qubit {q} is not in |0>, cannot form a Bell pair")
    state = apply_gate(state, Gate(GateKind.H), (qubit_a,))
    return apply_gate(state, Gate(GateKind.CNOT), (qubit_a, qubit_b))


# --- Measurement ---

def probabilities(state: StateVector) -> np.ndarray:
    probs = np.abs(state.amplitudes) ** 2
    return probs / probs.sum()


def marginal_probabilities(probs: np.ndarray, n_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    """Born probabilities over the listed qubits, first listed most significant."""
    qubits = _check_targets(qubits, n_qubits)
    return np.bincount(_local_index(n_qubits, qubits), weights=probs, minlength=1 << len(qubits))


def sample_counts(
    probs: np.ndarray, n_qubits: int, qubits: Sequence[int], shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Multinomial shot counts over the listed qubits."""
    if shots < 1:
        raise ParameterError(f"shots must be positive, got {shots}")
    marginal = marginal_probabilities(probs, n_qubits, qubits)
    return rng.multinomial(shots, marginal / marginal.sum())


def measure_computational(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """
    Projectively measures one qubit in the Z basis.

    Returns:
        The sampled bit and the renormalized post-measurement state
    """
    (q,) = _check_targets((qubit,), state.n_qubits)
    bit_set = ((np.arange(state.dim) >> q) & 1).astype(bool)
    p_one = float(np.sum(np.abs(state.amplitudes[bit_set]) ** 2))
    bit = int(rng.random() < p_one)
    keep = bit_set if bit else ~bit_set
    p_outcome = p_one if bit else 1.0 - p_one
    collapsed = np.where(keep, state.amplitudes, 0.0) / math.sqrt(p_outcome)
    logger.debug(f"Measured qubit {q}: bit={bit} (p1={p_one:.6f})")
    return bit, StateVector(state.n_qubits, collapsed)


def measure_all(state: StateVector, rng: np.random.Generator) -> tuple[str, StateVector]:
    """
    Measures every qubit at once.

    Returns:
        The bit string (qubit n-1 leftmost, qubit 0 rightmost) and the collapsed basis state
    """
    index = int(rng.choice(state.dim, p=probabilities(state)))
    collapsed = np.zeros(state.dim, dtype=np.complex128)
    collapsed[index] = 1.0
    return format(index, f"0{state.n_qubits}b"), StateVector(state.n_qubits, collapsed)


def block_basis(theta: float) -> np.ndarray:
    """
    Rows are |+_T>, |-_T>, |01>, |10> in the (qA, qB) local ordering.

    |+-_T> = (|00> +- e^{iT}|11>)/sqrt(2); the leak vectors complete the basis.
    """
    phase = np.exp(1j * theta)
    return np.array(
        [
            [_SQRT2_INV, 0, 0, _SQRT2_INV * phase],
            [_SQRT2_INV, 0, 0, -_SQRT2_INV * phase],
            [0, 1, 0, 0],
            [0, 0, 1, 0],
        ],
        dtype=np.complex128,
    )


def _project_pair(state: StateVector, qubit_a: int, qubit_b: int, theta: float):
    if not math.isfinite(theta):
        raise ParameterError(f"Verification phase must be finite, got {theta}")
    n = state.n_qubits
    _check_targets((qubit_a, qubit_b), n, 2)
    axes = [_axis(qubit_a, n), _axis(qubit_b, n)]
    pair = np.moveaxis(state.amplitudes.reshape([2] * n), axes, [0, 1]).reshape(4, -1)
    basis = block_basis(theta)
    projected = basis.conj() @ pair
    probs = np.sum(np.abs(projected) ** 2, axis=1)
    return basis, projected, probs / probs.sum(), axes


def block_basis_probabilities(
    state: StateVector, qubit_a: int, qubit_b: int, theta: float
) -> dict[BlockOutcome, float]:
    """Exact outcome probabilities of `measure_in_block_basis`."""
    _, _, probs, _ = _project_pair(state, qubit_a, qubit_b, theta)
    return {outcome: float(p) for outcome, p in zip(_BLOCK_OUTCOMES, probs)}


def measure_in_block_basis(
    state: StateVector, qubit_a: int, qubit_b: int, theta: float, rng: np.random.Generator
) -> tuple[BlockOutcome, StateVector]:
    """
    Projective measurement of a qubit pair in {|+_T>, |-_T>, |01>, |10>}.

    Args:
        state: Register holding the pair
        qubit_a: Class-A qubit of the pair
        qubit_b: Class-B qubit of the pair
        theta: The block phase T the verifier expects
        rng: Seeded generator

    Returns:
        The outcome label and the collapsed register
    """
    basis, projected, probs, axes = _project_pair(state, qubit_a, qubit_b, theta)
    k = int(rng.choice(4, p=probs))
    n = state.n_qubits
    collapsed = np.outer(basis[k], projected[k]) / math.sqrt(probs[k])
    collapsed = np.moveaxis(collapsed.reshape([2, 2] + [2] * (n - 2)), [0, 1], axes)
    return _BLOCK_OUTCOMES[k], StateVector(n, collapsed.reshape(-1))


# --- Density Matrices and Channels ---

def to_density(state: StateVector) -> DensityMatrix:
    _check_capacity(state.n_qubits, MAX_DENSITY_QUBITS, "Density matrix")
    return DensityMatrix(state.n_qubits, np.outer(state.amplitudes, state.amplitudes.conj()))


def apply_gate_density(rho: DensityMatrix, gate: Gate, targets: Sequence[int]) -> DensityMatrix:
    """Returns U rho U^dagger for the gate placed on `targets`."""
    n = rho.n_qubits
    qubits = _check_targets(targets, n, gate.arity)
    if gate.is_diagonal:
        diag = gate.diagonal()[_local_index(n, qubits)]
        entries = rho.entries * diag[:, None] * diag.conj()[None, :]
        return DensityMatrix(n, entries)
    return DensityMatrix(n, _conjugate(rho.entries, gate.matrix(), qubits, n))


def _conjugate(entries: np.ndarray, operator: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    tensor = entries.reshape([2] * (2 * n))
    tensor = _apply_to_axes(tensor, operator, [_axis(q, n) for q in qubits])
    tensor = _apply_to_axes(tensor, operator.conj(), [n + _axis(q, n) for q in qubits])
    return tensor.reshape(1 << n, 1 << n)


def kraus_depolarizing(p: float) -> list[np.ndarray]:
    """
    Kraus operators of E(rho) = (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z).
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"Depolarizing probability must be in [0, 1], got {p}")
    return [
        math.sqrt(1 - p) * PAULI_MATRICES["I"],
        math.sqrt(p / 3) * PAULI_MATRICES["X"],
        math.sqrt(p / 3) * PAULI_MATRICES["Y"],
        math.sqrt(p / 3) * PAULI_MATRICES["Z"],
    ]


def apply_kraus(rho: DensityMatrix, kraus_ops: Sequence[np.ndarray], target: int) -> DensityMatrix:
    (q,) = _check_targets((target,), rho.n_qubits)
    entries = np.zeros_like(rho.entries)
    for op in kraus_ops:
        entries += _conjugate(rho.entries, op, (q,), rho.n_qubits)
    result = DensityMatrix(rho.n_qubits, entries)
    if not abs(result.trace() - 1.0) < NORM_TOLERANCE:
        raise InvariantError(f"Channel broke trace preservation: trace {result.trace():.12f}")
    return result


def apply_depolarizing(rho: DensityMatrix, p: float, target: int) -> DensityMatrix:
    """
    Depolarizes one qubit with probability p (p/3 per Pauli).

    p = 3/4 maps any single-qubit state to I/2.

    Raises:
        ParameterError: If p is outside [0, 1]
    """
    return apply_kraus(rho, kraus_depolarizing(p), target)


def run_density(
    n_qubits: int, instructions: Sequence[Instruction], noise: NoiseChannel | None = None
) -> DensityMatrix:
    """
    Executes `instructions` from |0...0><0...0|.

    With a noise channel, every qubit a gate touches is depolarized right
    after the gate, so noise accrues with circuit depth.
    """
    rho = new_density(n_qubits)
    kraus_ops = noise.kraus() if noise is not None and noise.p > 0 else None
    for gate, targets in instructions:
        rho = apply_gate_density(rho, gate, targets)
        if kraus_ops is not None:
            for q in targets:
                rho = apply_kraus(rho, kraus_ops, q)
    return rho


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Traces out every qubit not in `keep`; kept qubits are renumbered in ascending order."""
    n = rho.n_qubits
    kept = set(_check_targets(sorted(set(keep)), n))
    if not kept:
        raise ParameterError("partial_trace needs at least one kept qubit")
    letters = string.ascii_letters
    rows = [letters[i] for i in range(n)]
    cols = [letters[n + i] if _axis(i, n) in kept else rows[i] for i in range(n)]
    out_rows = [rows[i] for i in range(n) if _axis(i, n) in kept]
    out_cols = [cols[i] for i in range(n) if _axis(i, n) in kept]
    subscripts = f"{''.join(rows + cols)}->{''.join(out_rows + out_cols)}"
    dim = 1 << len(kept)
    reduced = np.einsum(subscripts, rho.entries.reshape([2] * (2 * n))).reshape(dim, dim)
    return DensityMatrix(len(kept), reduced)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.n_qubits != sigma.n_qubits:
        raise ParameterError("trace_distance needs matrices of equal size")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho.entries - sigma.entries))))


# --- Observables and Fidelity ---

def pauli_operator(pauli_string: str) -> np.ndarray:
    """Dense operator of a Pauli string, rightmost label on qubit 0."""
    try:
        factors = [PAULI_MATRICES[label] for label in pauli_string]
    except KeyError as exc:
        raise ParameterError(f"Invalid Pauli label {exc.args[0]!r} in '{pauli_string}'") from None
    return reduce(np.kron, factors)


def expectation_pauli(rho: DensityMatrix, pauli_string: str) -> float:
    """
    Returns Tr(rho P) for a Pauli string.

    Raises:
        ParameterError: If the string length differs from n_qubits or holds labels outside IXYZ
    """
    if len(pauli_string) != rho.n_qubits:
        raise ParameterError(
            f"Pauli string '{pauli_string}' has {len(pauli_string)} labels for {rho.n_qubits} qubits"
        )
    value = float(np.real(np.trace(rho.entries @ pauli_operator(pauli_string))))
    return min(1.0, max(-1.0, value))


def fidelity_pure(rho: DensityMatrix, psi: StateVector) -> float:
    """
    Pure-target fidelity <psi|rho|psi>.

    Raises:
        ParameterError: On a dimension mismatch
    """
    if rho.n_qubits != psi.n_qubits:
        raise ParameterError(
            f"Fidelity needs equal sizes, got {rho.n_qubits} and {psi.n_qubits} qubits"
        )
    value = float(np.real(np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes)))
    return min(1.0, max(0.0, value))


def fidelity_mixed(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.n_qubits != sigma.n_qubits:
        raise ParameterError("fidelity_mixed needs matrices of equal size")
    root = scipy.linalg.sqrtm(rho.entries)
    inner = scipy.linalg.sqrtm(root @ sigma.entries @ root)
    value = float(np.real(np.trace(inner)) ** 2)
    return min(1.0, max(0.0, value))


def overlap(psi: StateVector, phi: StateVector) -> complex:
    if psi.n_qubits != phi.n_qubits:
        raise ParameterError("overlap needs registers of equal width")
    return complex(np.vdot(psi.amplitudes, phi.amplitudes))


# --- Debug Output ---

def dump_amplitudes(state: StateVector, tol: float = 0.0) -> str:
    """One JSON record per line: {"index", "re", "im"}; amplitudes with |a| <= tol are skipped."""
    records = []
    for index, amplitude in enumerate(state.amplitudes):
        if abs(amplitude) <= tol and tol > 0:
            continue
        records.append(
            json.dumps({"index": index, "re": float(amplitude.real), "im": float(amplitude.imag)})
        )
    return "\n".join(records) + "\n"
