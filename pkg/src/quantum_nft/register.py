import logging
from typing import Callable

from quantum_nft.controller import commands
from quantum_nft.errors import ParameterError

logger = logging.getLogger(__name__)

CommandHandler = Callable[[commands.RunContext], int]


class CommandRegistry:
    """Maps subcommand names to their handlers and help texts, in registration order."""

    def __init__(self) -> None:
        self._handlers: dict[str, tuple[CommandHandler, str]] = {}

    def register_command(self, name: str, handler: CommandHandler, help_text: str) -> None:
        if name in self._handlers:
            raise ParameterError(f"Command '{name}' is already registered")
        self._handlers[name] = (handler, help_text)

    def names(self) -> list[str]:
        return list(self._handlers)

    def help_text(self, name: str) -> str:
        return self._handlers[name][1]

    def handler(self, name: str) -> CommandHandler:
        try:
            return self._handlers[name][0]
        except KeyError:
            raise ParameterError(f"Unknown command '{name}'") from None


def register(registry: CommandRegistry | None = None) -> CommandRegistry:
    """
    Registers all simulator subcommands.

    This is the entry point the command-line driver calls at startup; every
    subcommand it exposes comes from this registry.

    Args:
        registry: Registry to extend; a new one is created when omitted

    Returns:
        The populated registry
    """
    logger.debug("Registering quantum NFT commands...")
    registry = registry or CommandRegistry()

    registry.register_command(
        "demo", commands.cmd_demo, "honest mint rounds, tomography and plot export of the final chain"
    )
    registry.register_command("mint", commands.cmd_mint, "run the configured mint rounds only")
    registry.register_command("attack", commands.cmd_attack, "run one attack scenario against verification")
    registry.register_command("tomo", commands.cmd_tomo, "reconstruct the configured chain by Pauli tomography")
    registry.register_command(
        "calibrate", commands.cmd_calibrate, "find the depolarizing strength that gives a target fidelity"
    )

    logger.debug(f"Registered commands: {', '.join(registry.names())}")
    return registry
