# Pauli-Basis State Tomography
# ----------------------------
# A setting is a string over {X, Y, Z}, one label per qubit, rightmost label
# on qubit 0. Counts for a setting are a vector over the 2^n computational
# outcomes of the rotated register, indexed the same way as amplitudes.
#
# Reconstruction is linear inversion over all 4^n Pauli strings followed by
# eigenvalue clipping to the nearest PSD, unit-trace matrix.

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from quantum_nft.errors import CalibrationError, CapacityError, ParameterError, TomographyError
from quantum_nft.model import ledger
from quantum_nft.solver import simcore

logger = logging.getLogger(__name__)

MAX_TOMOGRAPHY_QUBITS = 4
MEASUREMENT_LABELS = "XYZ"
# tolerated fidelity increase between neighbouring calibration points
MONOTONE_SLACK = 0.01

_ROTATIONS = {
    "X": [simcore.Gate(simcore.GateKind.H)],
    "Y": [simcore.Gate(simcore.GateKind.SDG), simcore.Gate(simcore.GateKind.H)],
    "Z": [],
}


@dataclass(frozen=True)
class TomographySetting:
    """
    One measurement setting.

    `shots=None` returns exact Born probabilities instead of sampled counts.
    """
    pauli_string: str
    shots: Optional[int] = 8192

    def __post_init__(self) -> None:
        if not self.pauli_string or set(self.pauli_string) - set(MEASUREMENT_LABELS):
            raise ParameterError(
                f"Setting '{self.pauli_string}' must use only the labels {MEASUREMENT_LABELS}"
            )
        if self.shots is not None and self.shots < 1:
            raise ParameterError(f"shots must be positive, got {self.shots}")

    @property
    def n_qubits(self) -> int:
        return len(self.pauli_string)


@dataclass
class TomographyResult:
    rho_est: simcore.DensityMatrix
    rho_raw: simcore.DensityMatrix
    fidelity_vs_ideal: float
    raw_fidelity: float
    clipped_mass: float
    shots_per_setting: Optional[int]
    noise_config: Optional[dict] = None


@dataclass
class CalibrationResult:
    p: float
    mean_fidelity: float
    trace: list[tuple[float, float]] = field(default_factory=list)
    monotone: bool = True
    seeds: list[int] = field(default_factory=list)


def all_settings(n_qubits: int, shots: Optional[int] = 8192) -> list[TomographySetting]:
    """The 3^n settings of a complete Pauli tomography job, in lexicographic order."""
    if not 1 <= n_qubits <= MAX_TOMOGRAPHY_QUBITS:
        raise CapacityError(f"Tomography supports 1..{MAX_TOMOGRAPHY_QUBITS} qubits, got {n_qubits}")
    return [
        TomographySetting("".join(labels), shots)
        for labels in itertools.product(MEASUREMENT_LABELS, repeat=n_qubits)
    ]


def _rotate(rho: simcore.DensityMatrix, pauli_string: str) -> simcore.DensityMatrix:
    n = rho.n_qubits
    for position, label in enumerate(pauli_string):
        qubit = n - 1 - position
        for gate in _ROTATIONS[label]:
            rho = simcore.apply_gate_density(rho, gate, (qubit,))
    return rho


def sample_setting(
    rho: simcore.DensityMatrix, setting: TomographySetting, rng: np.random.Generator
) -> np.ndarray:
    """
    Measures every qubit in the setting's basis.

    Each qubit is rotated into its basis (H for X, S-dagger then H for Y,
    nothing for Z) and computational outcomes are sampled with Born
    probabilities.

    Returns:
        Counts over the 2^n outcomes, or exact probabilities when setting.shots is None

    Raises:
        ParameterError: If the setting length differs from the register width
    """
    if setting.n_qubits != rho.n_qubits:
        raise ParameterError(
            f"Setting '{setting.pauli_string}' has {setting.n_qubits} labels for {rho.n_qubits} qubits"
        )
    rotated = _rotate(rho, setting.pauli_string)
    probs = np.clip(np.real(np.diag(rotated.entries)), 0.0, None)
    probs = probs / probs.sum()
    if setting.shots is None:
        return probs
    return rng.multinomial(setting.shots, probs)


def _parity_signs(n_qubits: int, mask: int) -> np.ndarray:
    outcomes = np.arange(1 << n_qubits)
    parity = np.zeros_like(outcomes)
    remaining = outcomes & mask
    while np.any(remaining):
        parity ^= remaining & 1
        remaining >>= 1
    return 1.0 - 2.0 * parity


def estimate_expectations(data: dict[str, np.ndarray]) -> dict[str, float]:
    """
    Estimates <P> for every Pauli string P over {I, X, Y, Z}^n.

    A string with identities is estimated from every setting that agrees
    with it on its non-identity positions, averaging the parity estimates.

    Raises:
        TomographyError: If the data does not cover all 3^n settings
    """
    if not data:
        raise TomographyError("No tomography data")
    n = len(next(iter(data)))
    expected = {setting.pauli_string for setting in all_settings(n)}
    missing = expected - set(data)
    if missing:
        raise TomographyError(f"Incomplete tomography data: {len(missing)} of {len(expected)} settings missing")

    sums: dict[str, float] = {}
    hits: dict[str, int] = {}
    signs = {mask: _parity_signs(n, mask) for mask in range(1 << n)}
    for pauli_string in sorted(expected):
        counts = np.asarray(data[pauli_string], dtype=float)
        if counts.shape != (1 << n,):
            raise TomographyError(f"Setting '{pauli_string}' has counts of shape {counts.shape}")
        total = counts.sum()
        if not total > 0:
            raise TomographyError(f"Setting '{pauli_string}' has no counts")
        freqs = counts / total
        for mask in range(1 << n):
            # positions outside the mask are traced out (identity)
            label = "".join(
                pauli_string[pos] if (mask >> (n - 1 - pos)) & 1 else "I" for pos in range(n)
            )
            sums[label] = sums.get(label, 0.0) + float(freqs @ signs[mask])
            hits[label] = hits.get(label, 0) + 1
    return {label: sums[label] / hits[label] for label in sums}


def linear_inversion(data: dict[str, np.ndarray]) -> simcore.DensityMatrix:
    """rho = (1/2^n) sum_P <P> P over all 4^n Pauli strings; may be non-PSD on sampled data."""
    expectations = estimate_expectations(data)
    n = len(next(iter(expectations)))
    entries = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for label, value in expectations.items():
        entries += value * simcore.pauli_operator(label)
    return simcore.DensityMatrix(n, entries / (1 << n))


def project_psd(rho: simcore.DensityMatrix) -> tuple[simcore.DensityMatrix, float]:
    """
    Nearest PSD, unit-trace matrix by eigenvalue clipping and renormalization.

    Returns:
        The projected matrix and the clipped (negative) eigenvalue mass
    """
    hermitian = 0.5 * (rho.entries + rho.entries.conj().T)
    eigenvalues, vectors = np.linalg.eigh(hermitian)
    clipped_mass = float(-np.sum(eigenvalues[eigenvalues < 0]))
    kept = np.clip(eigenvalues, 0.0, None)
    if not kept.sum() > 0:
        raise TomographyError("Reconstructed matrix has no positive spectrum")
    kept = kept / kept.sum()
    entries = (vectors * kept) @ vectors.conj().T
    return simcore.DensityMatrix(rho.n_qubits, entries), clipped_mass


def reconstruct(data: dict[str, np.ndarray]) -> simcore.DensityMatrix:
    """
    Linear inversion followed by PSD projection.

    Args:
        data: Counts (or exact probabilities) keyed by setting string, all 3^n settings

    Raises:
        TomographyError: If settings are missing
    """
    projected, _ = project_psd(linear_inversion(data))
    return projected


def collect(
    rho: simcore.DensityMatrix,
    shots: Optional[int],
    seed: Optional[int],
    workers: int = 1,
) -> dict[str, np.ndarray]:
    """Samples every setting, each from its own derived stream so results do not depend on `workers`."""
    settings = all_settings(rho.n_qubits, shots)

    def run(indexed: tuple[int, TomographySetting]) -> tuple[str, np.ndarray]:
        index, setting = indexed
        return setting.pauli_string, sample_setting(rho, setting, simcore.derive_rng(seed, index))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, enumerate(settings)))
    else:
        results = [run(item) for item in enumerate(settings)]
    return dict(results)


def run_tomography(
    rho: simcore.DensityMatrix,
    ideal: simcore.StateVector,
    shots: Optional[int],
    seed: Optional[int],
    noise_config: Optional[dict] = None,
    workers: int = 1,
) -> TomographyResult:
    """
    Samples all settings of `rho`, reconstructs it and scores it against `ideal`.

    Args:
        rho: The state being measured (simulated device output)
        ideal: Noiseless target state
        shots: Shots per setting; None for exact expectations
        seed: Seed of the per-setting streams
        noise_config: Description of the noise that produced rho, copied to the result
        workers: Threads used to sample settings

    Returns:
        TomographyResult with projected and raw estimates and their fidelities
    """
    data = collect(rho, shots, seed, workers)
    raw = linear_inversion(data)
    projected, clipped_mass = project_psd(raw)
    raw_fidelity = float(np.real(np.vdot(ideal.amplitudes, raw.entries @ ideal.amplitudes)))
    fidelity = simcore.fidelity_pure(projected, ideal)
    logger.debug(
        f"Tomography: {rho.n_qubits} qubits, shots={shots}, seed={seed}, "
        f"fidelity={fidelity:.6f}, clipped={clipped_mass:.3e}"
    )
    return TomographyResult(
        rho_est=projected,
        rho_raw=raw,
        fidelity_vs_ideal=fidelity,
        raw_fidelity=raw_fidelity,
        clipped_mass=clipped_mass,
        shots_per_setting=shots,
        noise_config=noise_config,
    )


def repetition_seeds(seed: Optional[int], count: int) -> list[int]:
    """Concrete seeds for `count` independent tomography repetitions."""
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    sequence = np.random.SeedSequence(seed)
    return [int(s) for s in sequence.generate_state(count, dtype=np.uint32)]


def chain_noise(p: Optional[float]) -> Optional[simcore.NoiseChannel]:
    return simcore.NoiseChannel(p) if p else None


def tomography_of_chain(
    chain: ledger.ChainState,
    shots: Optional[int],
    seed: Optional[int],
    p: Optional[float] = None,
    workers: int = 1,
) -> TomographyResult:
    """
    Tomography of a chain register prepared with optional per-gate depolarizing noise.

    Raises:
        CapacityError: If the chain is wider than the tomography limit
    """
    if chain.n_qubits > MAX_TOMOGRAPHY_QUBITS:
        raise CapacityError(
            f"Tomography supports up to {MAX_TOMOGRAPHY_QUBITS} qubits, chain has {chain.n_qubits}"
        )
    ideal = ledger.closed_form(chain)
    if ideal is None:
        raise TomographyError("Cannot run tomography on an empty chain")
    noise = chain_noise(p)
    rho = ledger.build_density(chain, noise)
    return run_tomography(rho, ideal, shots, seed, noise.describe() if noise else None, workers)


def mean_chain_fidelity(
    chain: ledger.ChainState,
    shots: Optional[int],
    seeds: list[int],
    p: Optional[float] = None,
    workers: int = 1,
) -> float:
    fidelities = [
        tomography_of_chain(chain, shots, seed, p, workers).fidelity_vs_ideal for seed in seeds
    ]
    return math.fsum(fidelities) / len(fidelities)


def is_monotone(trace: list[tuple[float, float]], slack: float = MONOTONE_SLACK) -> bool:
    """True when fidelity never rises by more than `slack` as p grows."""
    ordered = sorted(trace)
    return all(later <= earlier + slack for (_, earlier), (_, later) in zip(ordered, ordered[1:]))


def calibrate_noise_to_fidelity(
    target: float,
    chain: ledger.ChainState,
    shots: Optional[int],
    seed: Optional[int],
    seeds: int = 5,
    tolerance: float = 0.02,
    p_max: float = 0.5,
    max_iterations: int = 40,
    workers: int = 1,
) -> CalibrationResult:
    """
    Bisects the per-gate depolarizing probability p until the mean
    reconstructed fidelity is within `tolerance` of `target`.

    Every evaluation reuses the same repetition seeds, so the fidelity curve
    is compared on common random numbers. The bisection trace is audited
    for monotonicity and the verdict is recorded on the result.

    Args:
        target: Desired mean fidelity in (0, 1]
        chain: Chain whose register is prepared and measured
        shots: Shots per setting
        seed: Seed of the repetition seeds
        seeds: Number of repetitions averaged per evaluation
        tolerance: Accepted distance from target
        p_max: Upper end of the search range

    Returns:
        CalibrationResult with p, its mean fidelity and the evaluation trace

    Raises:
        ParameterError: If target or seeds are out of range
        CalibrationError: If the target cannot be reached for p in [0, p_max]
    """
    if not 0 < target <= 1:
        raise ParameterError(f"target must be in (0, 1], got {target}")
    if seeds < 5:
        raise ParameterError(f"Calibration averages at least 5 seeds, got {seeds}")
    repetitions = repetition_seeds(seed, seeds)
    trace: list[tuple[float, float]] = []

    def evaluate(p: float) -> float:
        value = mean_chain_fidelity(chain, shots, repetitions, p, workers)
        trace.append((p, value))
        logger.info(f"Calibration: p={p:.6f} mean fidelity={value:.4f}")
        return value

    def finish(p: float, value: float) -> CalibrationResult:
        monotone = is_monotone(trace)
        if not monotone:
            logger.warning("Calibration trace is not monotone in p")
        return CalibrationResult(p=p, mean_fidelity=value, trace=trace, monotone=monotone, seeds=repetitions)

    f_low = evaluate(0.0)
    if f_low <= target + tolerance:
        if f_low < target - tolerance:
            raise CalibrationError(
                f"Noiseless fidelity {f_low:.4f} is already below target {target} - {tolerance}"
            )
        return finish(0.0, f_low)

    f_high = evaluate(p_max)
    if f_high > target + tolerance:
        raise CalibrationError(
            f"Target fidelity {target} unreachable: p={p_max} still gives {f_high:.4f}"
        )
    if f_high >= target - tolerance:
        best = (p_max, f_high)
    else:
        best = None

    low, high = 0.0, p_max
    for _ in range(max_iterations):
        mid = 0.5 * (low + high)
        value = evaluate(mid)
        if abs(value - target) <= tolerance:
            return finish(mid, value)
        if value > target:
            low = mid
        else:
            high = mid
    if best is not None:
        return finish(*best)
    raise CalibrationError(f"Bisection did not reach {target} +- {tolerance} in {max_iterations} steps")
