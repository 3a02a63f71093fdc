# Quantum NFT Network Simulator
# -----------------------------
# Flow of every run:
#     1. load the genesis configuration (or the built-in two-block preset)
#     2. apply flag overrides; flags win over file values
#     3. validate, log the configuration summary
#     4. dispatch to the registered subcommand, which writes its reports
#
# Exit codes:
#     0 success
#     2 configuration, constraint or other simulator error
#     3 aborted round(s) under --strict
#     4 internal invariant breach
#
# Reports never carry timestamps, so a fixed seed reproduces them byte for byte.

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from quantum_nft.controller.commands import ATTACK_KINDS, RunContext
from quantum_nft.errors import ConfigError, InvariantError, QuantumNftError
from quantum_nft.model.codec import PhaseEncoding
from quantum_nft.register import CommandRegistry, register
from quantum_nft.solver.driver.api_models import (
    GenesisConfig,
    LogLevel,
    PeerSettings,
    RoundScript,
    RoundSettings,
)

EXIT_CONFIG = 2
EXIT_INVARIANT = 4

LOG_FILE = "simulation.log"
_LEVELS = {
    LogLevel.INFO.value: logging.INFO,
    LogLevel.DEBUG.value: logging.DEBUG,
    LogLevel.ERROR.value: logging.ERROR,
}

logger = logging.getLogger(__name__)


# --- CLI Argument Parsing ---

def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-i",
        "--config",
        type=str,
        default=None,
        help="Path to the genesis configuration JSON file (default: built-in two-block preset)",
    )
    common.add_argument(
        "-o",
        "--out",
        type=str,
        default="out",
        help="Path to the output folder for reports, plot data and the log file",
    )
    common.add_argument("--seed", type=int, default=None, help="Run seed; overrides the config")
    common.add_argument("--shots", type=int, default=None, help="Tomography shots per setting")
    common.add_argument("--noise", type=float, default=None, help="Per-gate depolarizing probability")
    common.add_argument("--rounds", type=int, default=None, help="Mint rounds, or attack rounds for 'attack'")
    common.add_argument("--strict", action="store_true", help="Exit with code 3 when a round aborts")
    common.add_argument("--ci", action="store_true", help="CI mode: --seed (or a config seed) is mandatory")

    parser = argparse.ArgumentParser(description="Quantum NFT Network Simulator")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in registry.names():
        sub = subparsers.add_parser(name, parents=[common], help=registry.help_text(name))
        if name == "attack":
            sub.add_argument("--attack", choices=ATTACK_KINDS, default=ATTACK_KINDS[0], help="Attack scenario")
        if name == "calibrate":
            sub.add_argument("--target", type=float, default=None, help="Target mean fidelity")
    return parser


# --- Setup Logging ---

def setup_logging(output_dir: Path, level: int = logging.INFO) -> None:
    """Console and file logging, replacing handlers left by an earlier run in this process."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_quantum_nft", False):
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)
    formatter = logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")

    file_handler = logging.FileHandler(output_dir / LOG_FILE)
    file_handler.setFormatter(formatter)
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    for handler in (file_handler, console_handler):
        handler._quantum_nft = True  # type: ignore[attr-defined]
        root.addHandler(handler)


# --- Load and Validate Configuration ---

def default_config() -> GenesisConfig:
    """
    Two-block preset: block phases (pi/16, pi/16) and (pi/32, pi/32) on three peers.

    Owner bits "001" give pi/16 on block 1 and pi/32 on block 2 in scaled
    mode; token bits "001" and "010" with k = 3 give the same token phases.
    """
    return GenesisConfig(
        peers=[PeerSettings(id=f"peer{i}") for i in range(1, 4)],
        encoding=PhaseEncoding(theta1=math.pi / 4, token_theta1=math.pi, info_length=3, token_qubits=3),
        rounds=RoundSettings(
            count=2,
            scripted=[
                RoundScript(owner_bits="001", token_bits="001", token_peer_index=3),
                RoundScript(owner_bits="001", token_bits="010", token_peer_index=3),
            ],
        ),
    )


def load_config(path: Optional[str]) -> GenesisConfig:
    if path is None:
        return default_config()
    try:
        with open(path, "r") as f:
            return GenesisConfig.from_json(f.read())  # pyright: ignore[reportGeneralTypeIssues]
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError("config", f"malformed configuration {path}: {exc}") from None


def apply_overrides(config: GenesisConfig, args: argparse.Namespace) -> GenesisConfig:
    if args.seed is not None:
        config.seed = args.seed
    if args.shots is not None:
        config.tomography.shots = args.shots
    if args.noise is not None:
        config.noise.p = args.noise
    if args.rounds is not None:
        if args.command == "attack":
            config.attack.rounds = args.rounds
        else:
            config.rounds.count = args.rounds
    if args.ci and config.seed is None:
        raise ConfigError("seed", "a seed is mandatory in CI mode")
    config.validate()
    return config


def log_config_summary(config: GenesisConfig, command: str) -> None:
    enc = config.encoding
    logger.info("=== Genesis Configuration Summary ===")
    logger.info(f"Command: {command}")
    logger.info(f"Log level: {config.setup_settings.log_level.upper()}")
    logger.info(f"Seed: {config.seed}")
    logger.info(
        f"Encoding: theta1={enc.theta1:.6f}, token_theta1={enc.token_theta1:.6f}, n={enc.scaling_base}, "
        f"L={enc.info_length}, q={enc.token_qubits}, scaled={enc.scaled}"
    )
    logger.info(
        f"Policy: min_stake={config.policy.min_stake}, reward={config.policy.reward}, "
        f"slash_fraction={config.policy.slash_fraction}, quorum={config.policy.quorum}"
    )
    for peer in config.peers:
        logger.info(f"  Peer {peer.id}: coins={peer.coins}, holding_time={peer.holding_time}, trusted={peer.trusted}")
    logger.info(f"Rounds: {config.rounds.count} ({len(config.rounds.scripted)} scripted)")
    logger.info(f"Noise: p={config.noise.p}")
    logger.info(f"Tomography: shots={config.tomography.shots}, seeds={config.tomography.seeds}")
    logger.info(f"Hyperedge mode: {config.hyperedge_mode}, enforce_budget={config.enforce_budget}")
    logger.info("=====================================")


def main(argv: Optional[Sequence[str]] = None) -> int:
    registry = register()
    args = build_parser(registry).parse_args(argv)

    output_dir = Path(os.path.abspath(args.out))
    output_dir.mkdir(parents=True, exist_ok=True)
    setup_logging(output_dir)

    try:
        config = apply_overrides(load_config(args.config), args)
        logging.getLogger().setLevel(_LEVELS[config.setup_settings.log_level])
        log_config_summary(config, args.command)
        ctx = RunContext(
            config=config,
            out_dir=output_dir,
            strict=args.strict,
            attack=getattr(args, "attack", None),
            target=getattr(args, "target", None),
        )
        status = registry.handler(args.command)(ctx)
    except InvariantError as exc:
        logger.error(f"Invariant breach: {exc}")
        return EXIT_INVARIANT
    except QuantumNftError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG

    print(f"Files are stored in {output_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
