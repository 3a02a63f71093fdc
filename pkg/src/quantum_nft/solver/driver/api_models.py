import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from dataclasses_json import dataclass_json

from quantum_nft.errors import CodecError, ConfigError
from quantum_nft.model.codec import PhaseEncoding
from quantum_nft.model.consensus import StakePolicy
from quantum_nft.model.hypergraph import HyperedgeMode


class LogLevel(Enum):
    """
    Enumeration of available logging levels for a run.

    These values control how verbose the driver output will be during execution.
    """
    INFO = "info"   # Standard information messages
    DEBUG = "debug" # Detailed debugging information
    ERROR = "error" # Only error messages


class InterceptStrategy(Enum):
    """How an intercept-and-resend adversary picks the phase of its forgeries."""
    UNIFORM = "uniform"   # uniform on [0, 2pi)
    FIXED = "fixed"       # true phase plus a fixed offset
    EXACT = "exact"       # lucky guess of the true phase


class MitmMode(Enum):
    """Capabilities of a man-in-the-middle adversary."""
    NO_SECRET = "no_secret"  # cannot authenticate its substitutes
    FORGE = "forge"          # holds the secret, forges block copies uniformly
    PASSIVE = "passive"      # relays everything untouched


class RoundStatus(Enum):
    COMMITTED = "committed"
    ABORTED = "aborted"


# --- Genesis Configuration ---

@dataclass_json
@dataclass
class SetupSettings:
    """General run settings such as logging verbosity."""
    log_level: str = LogLevel.INFO.value


@dataclass_json
@dataclass
class PeerSettings:
    """One peer with its initial coins and coin age."""
    id: str
    coins: float = 100.0  # Initial coins
    holding_time: float = 1.0  # Initial coin age in ticks
    trusted: bool = True  # Honest peers decide commit/abort


@dataclass_json
@dataclass
class RoundScript:
    """
    Fixes the inputs of one mint round.

    Owner bits are required; token bits and token peer index pin the token
    phase instead of drawing it, which reproduces a known chain exactly.
    """
    owner_bits: str
    token_bits: Optional[str] = None
    token_peer_index: Optional[int] = None


@dataclass_json
@dataclass
class RoundSettings:
    count: int = 2  # Number of mint rounds
    scripted: list[RoundScript] = field(default_factory=list)  # Inputs of the first rounds
    ticks_per_round: float = 1.0  # Coin age added after each round
    workers: int = 1  # Parallel peer verifications (1 = sequential)
    # channels to these peers add adversary_offset to every block copy
    adversary_peers: list[str] = field(default_factory=list)
    adversary_offset: float = math.pi


@dataclass_json
@dataclass
class NoiseSettings:
    p: Optional[float] = None  # Per-gate depolarizing probability, None for noiseless


@dataclass_json
@dataclass
class TomographySettings:
    shots: int = 8192  # Shots per measurement setting
    seeds: int = 5  # Independent repetitions averaged in reports
    workers: int = 1  # Parallel setting sampling
    calibration_target: float = 0.80
    calibration_tolerance: float = 0.02


@dataclass_json
@dataclass
class AttackSettings:
    rounds: int = 10000
    peers: int = 1  # Copies attacked per round
    intercept_strategy: str = InterceptStrategy.UNIFORM.value
    intercept_offset: float = math.pi
    # a, b, c, d as [re, im]; a = b = 1 leaves the ancilla untouched
    entangle_amplitudes: list[list[float]] = field(
        default_factory=lambda: [[0.8, 0.0], [0.6, 0.0], [0.6, 0.0], [-0.8, 0.0]]
    )
    thetas: list[float] = field(
        default_factory=lambda: [math.pi / 16, math.pi / 4, 3 * math.pi / 4]
    )
    shots: int = 10000
    mitm_mode: str = MitmMode.NO_SECRET.value


@dataclass_json
@dataclass
class GenesisConfig:
    """
    Complete configuration of a simulated network.

    This is the document passed to the command-line driver; every run is a
    pure function of it and the seed.
    """
    peers: list[PeerSettings]
    setup_settings: SetupSettings = field(default_factory=SetupSettings)
    encoding: PhaseEncoding = field(default_factory=PhaseEncoding)
    policy: StakePolicy = field(default_factory=StakePolicy)
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    rounds: RoundSettings = field(default_factory=RoundSettings)
    tomography: TomographySettings = field(default_factory=TomographySettings)
    attack: AttackSettings = field(default_factory=AttackSettings)
    genesis_secret: str = "genesis"
    hyperedge_mode: str = HyperedgeMode.BOTH.value
    enforce_budget: bool = True
    seed: Optional[int] = None

    def validate(self) -> None:
        """
        Checks every field against the range its owning module accepts.

        Raises:
            ConfigError: Naming the dotted path of the first offending field
        """
        if self.setup_settings.log_level not in {level.value for level in LogLevel}:
            raise ConfigError("setup_settings.log_level", f"unknown level '{self.setup_settings.log_level}'")
        if not self.peers:
            raise ConfigError("peers", "at least one peer is required")
        ids = [peer.id for peer in self.peers]
        if len(set(ids)) != len(ids):
            raise ConfigError("peers", "peer ids must be unique")
        for i, peer in enumerate(self.peers):
            if peer.coins < 0:
                raise ConfigError(f"peers[{i}].coins", "must be non-negative")
            if peer.holding_time < 0:
                raise ConfigError(f"peers[{i}].holding_time", "must be non-negative")
        try:
            self.encoding.validate()
        except CodecError as exc:
            field_name = str(exc).split(" ", 1)[0]
            raise ConfigError(f"encoding.{field_name}", str(exc)) from None

        policy = self.policy
        if policy.min_stake <= 0:
            raise ConfigError("policy.min_stake", "must be positive")
        if not 0 <= policy.reward < policy.min_stake:
            raise ConfigError("policy.reward", "must be in [0, min_stake)")
        if not 0 < policy.slash_fraction <= 1:
            raise ConfigError("policy.slash_fraction", "must be in (0, 1]")
        if not 0 < policy.quorum <= 1:
            raise ConfigError("policy.quorum", "must be in (0, 1]")

        if self.noise.p is not None and not 0 <= self.noise.p <= 1:
            raise ConfigError("noise.p", "must be in [0, 1]")
        if self.rounds.count < 0:
            raise ConfigError("rounds.count", "must be non-negative")
        if self.rounds.workers < 1:
            raise ConfigError("rounds.workers", "must be at least 1")
        for i, peer_id in enumerate(self.rounds.adversary_peers):
            if peer_id not in ids:
                raise ConfigError(f"rounds.adversary_peers[{i}]", f"unknown peer '{peer_id}'")
        for i, script in enumerate(self.rounds.scripted):
            if len(script.owner_bits) != self.encoding.info_length or set(script.owner_bits) - {"0", "1"}:
                raise ConfigError(
                    f"rounds.scripted[{i}].owner_bits",
                    f"must be {self.encoding.info_length} binary digits",
                )
            if script.token_bits is not None and (not script.token_bits or set(script.token_bits) - {"0", "1"}):
                raise ConfigError(f"rounds.scripted[{i}].token_bits", "must be binary digits")
            if script.token_peer_index is not None and script.token_peer_index < 0:
                raise ConfigError(f"rounds.scripted[{i}].token_peer_index", "must be non-negative")

        if self.tomography.shots < 1:
            raise ConfigError("tomography.shots", "must be positive")
        if self.tomography.seeds < 1:
            raise ConfigError("tomography.seeds", "must be positive")
        if self.tomography.workers < 1:
            raise ConfigError("tomography.workers", "must be at least 1")
        if not 0 < self.tomography.calibration_target <= 1:
            raise ConfigError("tomography.calibration_target", "must be in (0, 1]")

        attack = self.attack
        if attack.rounds < 1:
            raise ConfigError("attack.rounds", "must be at least 1")
        if attack.peers < 1:
            raise ConfigError("attack.peers", "must be at least 1")
        if attack.intercept_strategy not in {s.value for s in InterceptStrategy}:
            raise ConfigError("attack.intercept_strategy", f"unknown strategy '{attack.intercept_strategy}'")
        if attack.mitm_mode not in {m.value for m in MitmMode}:
            raise ConfigError("attack.mitm_mode", f"unknown mode '{attack.mitm_mode}'")
        if len(attack.entangle_amplitudes) != 4 or any(len(a) != 2 for a in attack.entangle_amplitudes):
            raise ConfigError("attack.entangle_amplitudes", "expected four [re, im] pairs")
        if not attack.thetas:
            raise ConfigError("attack.thetas", "at least one phase is required")

        if self.hyperedge_mode not in {m.value for m in HyperedgeMode}:
            raise ConfigError("hyperedge_mode", f"unknown mode '{self.hyperedge_mode}'")
        if self.seed is not None and self.seed < 0:
            raise ConfigError("seed", "must be non-negative")

    def entangle_amplitudes(self) -> tuple[complex, complex, complex, complex]:
        a, b, c, d = (complex(re, im) for re, im in self.attack.entangle_amplitudes)
        return a, b, c, d


# --- Reports ---

@dataclass_json
@dataclass
class PeerVerdict:
    peer: str
    passed: bool
    outcome: str  # plus | minus | leak01 | leak10 | auth_failed
    trusted: bool = True


@dataclass_json
@dataclass
class RoundReport:
    """Outcome of one mint round, as written to round_reports.json."""
    round_id: int
    winner: str
    status: str
    block_index: int
    owner_bits: str
    token_bits: str
    theta_a: float
    theta_b: float
    verdicts: list[PeerVerdict] = field(default_factory=list)
    abort_reason: Optional[str] = None
    flagged_channels: list[str] = field(default_factory=list)
    preparations: int = 0

    @property
    def committed(self) -> bool:
        return self.status == RoundStatus.COMMITTED.value


@dataclass_json
@dataclass
class DetectionStats:
    """Detection counts of an attack against the verification rule."""
    attack: str
    strategy: str
    rounds: int
    trials: int  # rounds x attacked copies
    detections: int
    detection_frequency: float
    expected_detection: float
    sigma: float
    within_3sigma: bool
    adversary_measurements: int = 0  # copies the adversary measured or discarded


@dataclass_json
@dataclass
class SwapTestReport:
    shots: int
    p0_sampled: float
    p0_analytic: float
    overlap_sq: float


@dataclass_json
@dataclass
class LeakReport:
    """What an entangle-and-measure adversary learns from its ancilla."""
    amplitudes: list[list[float]]
    thetas: list[float]
    shots: int
    z_distributions: list[list[float]]
    x_distributions: list[list[float]]
    sampled_z: list[list[float]]
    sampled_x: list[list[float]]
    max_tv_analytic: float
    max_tv_sampled: float
    tv_noise_bound: float
    information_gained: float
    swap_test_p0: float


@dataclass_json
@dataclass
class TomographyReport:
    block_count: int
    shots_per_setting: int
    seeds: list[int]
    noise: Optional[dict]
    fidelities: list[float]
    mean_fidelity: float
    fidelity_vs_noisy_simulation: float
    clipped_mass: float


@dataclass_json
@dataclass
class CalibrationPoint:
    p: float
    mean_fidelity: float


@dataclass_json
@dataclass
class CalibrationReport:
    target: float
    tolerance: float
    p: float
    mean_fidelity: float
    shots_per_setting: int
    seeds: list[int]
    monotone: bool
    trace: list[CalibrationPoint] = field(default_factory=list)


@dataclass_json
@dataclass
class RunSummary:
    """Key results of a driver run, written to summary.json."""
    command: str
    seed: Optional[int]
    rounds: int = 0
    committed: int = 0
    aborted: int = 0
    final_height: int = 0
    logs_identical: bool = True
    fidelity: Optional[float] = None
    calibrated_p: Optional[float] = None
    detection_frequency: Optional[float] = None
