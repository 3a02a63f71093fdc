import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from quantum_nft.controller import attacks, protocol
from quantum_nft.errors import InvariantError, ParameterError
from quantum_nft.model import density_plots, ledger
from quantum_nft.model.consensus import StakeLedger
from quantum_nft.model.hypergraph import HyperedgeMode
from quantum_nft.solver import simcore, tomography
from quantum_nft.solver.driver.api_models import (
    CalibrationPoint,
    CalibrationReport,
    GenesisConfig,
    InterceptStrategy,
    MitmMode,
    RoundReport,
    RunSummary,
    TomographyReport,
)

logger = logging.getLogger(__name__)

# Stable output file names
CHAIN_LOG_FILE = "chain_log.jsonl"
ROUND_REPORTS_FILE = "round_reports.json"
TOMOGRAPHY_REPORT_FILE = "tomography_report.json"
CITY_FILE = "city.json"
HINTON_FILE = "hinton.json"
ATTACK_REPORT_FILE = "attack_report.json"
CALIBRATION_REPORT_FILE = "calibration_report.json"
SUMMARY_FILE = "summary.json"

EXIT_OK = 0
EXIT_ABORTED = 3

ATTACK_KINDS = ("intercept_resend", "entangle_measure", "mitm")

# rng stream ids under the run seed
_ROUNDS_STREAM = 0
_ATTACK_STREAM = 1


@dataclass
class RunContext:
    """Everything a command needs: validated config, output folder and flags."""
    config: GenesisConfig
    out_dir: Path
    strict: bool = False
    attack: Optional[str] = None
    target: Optional[float] = None


@dataclass
class Network:
    """Peers and their shared stake ledger, built from the genesis configuration."""
    peers: list[protocol.Peer]
    stakes: StakeLedger
    secret: str

    @classmethod
    def from_config(cls, config: GenesisConfig) -> "Network":
        peers = protocol.build_peers(
            [p.id for p in config.peers],
            config.encoding,
            [p.trusted for p in config.peers],
            HyperedgeMode(config.hyperedge_mode),
            config.enforce_budget,
        )
        stakes = StakeLedger(policy=config.policy)
        for settings in config.peers:
            stakes.add_peer(settings.id, settings.coins, settings.holding_time)
        return cls(peers=peers, stakes=stakes, secret=config.genesis_secret)

    def reference_peer(self) -> protocol.Peer:
        return next((p for p in self.peers if p.trusted), self.peers[0])

    def honest_logs_identical(self) -> bool:
        texts = {peer.log.text() for peer in self.peers if peer.trusted}
        return len(texts) <= 1


def write_json(path: Path, document: Any) -> None:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    logger.debug(f"Wrote {path}")


def _round_inputs(config: GenesisConfig, round_number: int, rng: np.random.Generator) -> tuple[str, Optional[str], Optional[int]]:
    scripted = config.rounds.scripted
    if round_number <= len(scripted):
        script = scripted[round_number - 1]
        return script.owner_bits, script.token_bits, script.token_peer_index
    owner = "".join(str(bit) for bit in rng.integers(0, 2, size=config.encoding.info_length))
    return owner, None, None


def run_rounds(config: GenesisConfig, rng: np.random.Generator) -> tuple[Network, list[RoundReport]]:
    """
    Runs the configured number of mint rounds on a fresh network.

    Raises:
        InvariantError: If a peer's register drifts from its block records
    """
    network = Network.from_config(config)
    channels = {
        peer_id: protocol.Channel(peer_id, attacks.PhaseShiftAdversary(config.rounds.adversary_offset))
        for peer_id in config.rounds.adversary_peers
    }
    reports = []
    for round_number in range(1, config.rounds.count + 1):
        owner, token_bits, token_peer_index = _round_inputs(config, round_number, rng)
        report = protocol.mint_round(
            network.peers,
            network.stakes,
            owner,
            rng,
            secret=network.secret,
            round_id=round_number,
            token_bits=token_bits,
            token_peer_index=token_peer_index,
            channels=channels,
            workers=config.rounds.workers,
        )
        network.stakes.advance_time(config.rounds.ticks_per_round)
        reports.append(report)
        for peer in network.peers:
            ledger.check_register(peer.chain)
    if not network.honest_logs_identical():
        raise InvariantError("Honest peers disagree on the chain log")
    return network, reports


def _write_rounds(ctx: RunContext, network: Network, reports: list[RoundReport]) -> RunSummary:
    (ctx.out_dir / CHAIN_LOG_FILE).write_text(network.reference_peer().log.text())
    write_json(ctx.out_dir / ROUND_REPORTS_FILE, [report.to_dict() for report in reports])
    committed = sum(report.committed for report in reports)
    return RunSummary(
        command="",
        seed=ctx.config.seed,
        rounds=len(reports),
        committed=committed,
        aborted=len(reports) - committed,
        final_height=network.reference_peer().chain.height,
        logs_identical=network.honest_logs_identical(),
    )


def _finish(ctx: RunContext, summary: RunSummary) -> int:
    write_json(ctx.out_dir / SUMMARY_FILE, summary.to_dict())
    logger.info("=== Run Summary ===")
    for key, value in summary.to_dict().items():
        logger.info(f"{key}: {value}")
    logger.info("===================")
    if ctx.strict and summary.aborted:
        logger.error(f"{summary.aborted} round(s) aborted in strict mode")
        return EXIT_ABORTED
    return EXIT_OK


def _export_plots(ctx: RunContext, rho: simcore.DensityMatrix) -> None:
    write_json(ctx.out_dir / CITY_FILE, density_plots.export_city(rho))
    write_json(ctx.out_dir / HINTON_FILE, density_plots.export_hinton(rho))


def _tomography_report(ctx: RunContext, chain: ledger.ChainState) -> TomographyReport:
    """Repeats chain tomography over the configured seeds and exports plots of the first estimate."""
    config = ctx.config
    seeds = tomography.repetition_seeds(config.seed, config.tomography.seeds)
    results = [
        tomography.tomography_of_chain(chain, config.tomography.shots, seed, config.noise.p, config.tomography.workers)
        for seed in seeds
    ]
    fidelities = [r.fidelity_vs_ideal for r in results]
    simulated = ledger.build_density(chain, tomography.chain_noise(config.noise.p))
    report = TomographyReport(
        block_count=chain.height,
        shots_per_setting=config.tomography.shots,
        seeds=seeds,
        noise=results[0].noise_config,
        fidelities=fidelities,
        mean_fidelity=math.fsum(fidelities) / len(fidelities),
        fidelity_vs_noisy_simulation=simcore.fidelity_mixed(results[0].rho_est, simulated),
        clipped_mass=max(r.clipped_mass for r in results),
    )
    write_json(ctx.out_dir / TOMOGRAPHY_REPORT_FILE, report.to_dict())
    _export_plots(ctx, results[0].rho_est)
    logger.info(f"Tomography mean fidelity over {len(seeds)} seeds: {report.mean_fidelity:.4f}")
    return report


# --- Commands ---

def cmd_mint(ctx: RunContext) -> int:
    """Runs the configured mint rounds and writes the chain log and round reports."""
    rng = simcore.derive_rng(ctx.config.seed, _ROUNDS_STREAM)
    network, reports = run_rounds(ctx.config, rng)
    summary = _write_rounds(ctx, network, reports)
    summary.command = "mint"
    return _finish(ctx, summary)


def cmd_demo(ctx: RunContext) -> int:
    """
    Honest rounds followed by tomography and plot export of the final chain.

    Chains wider than the tomography limit export the simulated density
    matrix instead of a reconstruction.
    """
    rng = simcore.derive_rng(ctx.config.seed, _ROUNDS_STREAM)
    network, reports = run_rounds(ctx.config, rng)
    summary = _write_rounds(ctx, network, reports)
    summary.command = "demo"
    chain = network.reference_peer().chain
    if 0 < chain.n_qubits <= tomography.MAX_TOMOGRAPHY_QUBITS:
        summary.fidelity = _tomography_report(ctx, chain).mean_fidelity
    elif 0 < chain.n_qubits <= simcore.MAX_DENSITY_QUBITS:
        logger.info(f"Chain has {chain.n_qubits} qubits, exporting the simulated density matrix")
        _export_plots(ctx, ledger.build_density(chain, tomography.chain_noise(ctx.config.noise.p)))
    return _finish(ctx, summary)


def cmd_tomo(ctx: RunContext) -> int:
    """Builds the configured chain and reconstructs it by tomography."""
    rng = simcore.derive_rng(ctx.config.seed, _ROUNDS_STREAM)
    network, reports = run_rounds(ctx.config, rng)
    summary = _write_rounds(ctx, network, reports)
    summary.command = "tomo"
    summary.fidelity = _tomography_report(ctx, network.reference_peer().chain).mean_fidelity
    return _finish(ctx, summary)


def cmd_calibrate(ctx: RunContext) -> int:
    """Finds the per-gate depolarizing strength reproducing the target fidelity."""
    config = ctx.config
    rng = simcore.derive_rng(config.seed, _ROUNDS_STREAM)
    network, reports = run_rounds(config, rng)
    summary = _write_rounds(ctx, network, reports)
    summary.command = "calibrate"
    target = ctx.target if ctx.target is not None else config.tomography.calibration_target
    result = tomography.calibrate_noise_to_fidelity(
        target,
        network.reference_peer().chain,
        config.tomography.shots,
        config.seed,
        seeds=config.tomography.seeds,
        tolerance=config.tomography.calibration_tolerance,
        workers=config.tomography.workers,
    )
    report = CalibrationReport(
        target=target,
        tolerance=config.tomography.calibration_tolerance,
        p=result.p,
        mean_fidelity=result.mean_fidelity,
        shots_per_setting=config.tomography.shots,
        seeds=result.seeds,
        monotone=result.monotone,
        trace=[CalibrationPoint(p, f) for p, f in result.trace],
    )
    write_json(ctx.out_dir / CALIBRATION_REPORT_FILE, report.to_dict())
    summary.calibrated_p = result.p
    summary.fidelity = result.mean_fidelity
    return _finish(ctx, summary)


def cmd_attack(ctx: RunContext) -> int:
    """Runs one attack scenario against the verification rule."""
    config = ctx.config
    settings = config.attack
    kind = ctx.attack or ATTACK_KINDS[0]
    rng = simcore.derive_rng(config.seed, _ATTACK_STREAM)
    summary = RunSummary(command="attack", seed=config.seed, rounds=settings.rounds)
    if kind == "intercept_resend":
        stats = attacks.attack_intercept_resend(
            settings.rounds,
            InterceptStrategy(settings.intercept_strategy),
            rng,
            settings.intercept_offset,
            settings.peers,
        )
        document = stats.to_dict()
        summary.detection_frequency = stats.detection_frequency
    elif kind == "mitm":
        stats = attacks.attack_mitm(
            settings.rounds, rng, MitmMode(settings.mitm_mode), config.genesis_secret, settings.peers
        )
        document = stats.to_dict()
        summary.detection_frequency = stats.detection_frequency
    elif kind == "entangle_measure":
        a, b, c, d = config.entangle_amplitudes()
        document = attacks.attack_entangle_measure(a, b, c, d, settings.thetas, rng, settings.shots).to_dict()
    else:
        raise ParameterError(f"Unknown attack '{kind}', expected one of {', '.join(ATTACK_KINDS)}")
    write_json(ctx.out_dir / ATTACK_REPORT_FILE, {"attack": kind, "report": document})
    return _finish(ctx, summary)
