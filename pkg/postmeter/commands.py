"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from abc import ABC, abstractmethod
import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, final

from .const import EXIT_CONFIG_ERROR, EXIT_FAILURE, LOGGER
from .config import ESTIMATOR_NAMES, FORMATS, MODE_NAMES, VARIANT_NAMES, load_config
from .exceptions import ConfigError, EmitError
from .util import load_plugin_modules

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .config import ExperimentConfig


class AbstractPostmeterCommand(ABC):
    """Abstract base class to hold a Postmeter subcommand."""

    command: str
    description: str
    hidden: bool = False

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Add the arguments of the subcommand."""

    @final
    def register(self, subparsers: Any) -> None:
        """Register the subcommand with the argument parser."""
        LOGGER.debug("Registering Postmeter command: %s", self.command)
        kwargs: dict[str, Any] = {"description": self.description}
        if not self.hidden:
            kwargs["help"] = self.description
        parser = subparsers.add_parser(self.command, **kwargs)
        self.add_arguments(parser)
        parser.set_defaults(command=self)

    @abstractmethod
    async def async_handle(self, args: argparse.Namespace) -> int:
        """Handle the subcommand and return the exit code."""
        raise NotImplementedError


class AbstractPostmeterExperimentCommand(AbstractPostmeterCommand):
    """Abstract class to hold a subcommand driven by an experiment config."""

    sweeps_estimators: bool = False

    @final
    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Add the configuration and override flags."""
        parser.add_argument("--config", type=Path, help="YAML configuration file")
        parser.add_argument("--seed", type=int, help="master seed (unsigned 64 bit)")
        parser.add_argument("--out", type=Path, help="output directory")
        parser.add_argument("--format", choices=FORMATS, help="output format")
        parser.add_argument(
            "--mode",
            choices=(*MODE_NAMES, "both"),
            help="post-selection strategy",
        )
        if self.sweeps_estimators:
            parser.add_argument(
                "--estimator",
                choices=(*ESTIMATOR_NAMES, "all"),
                help="estimators to run",
            )
            parser.add_argument(
                "--variant",
                choices=VARIANT_NAMES,
                help="half-plane model of the likelihood",
            )

    @staticmethod
    def overrides(args: argparse.Namespace) -> dict[str, Any]:
        """Map command line flags onto configuration keys."""
        return {
            "master_seed": args.seed,
            "output_dir": str(args.out) if args.out is not None else None,
            "format": args.format,
            "modes": args.mode,
            "estimators": getattr(args, "estimator", None),
            "variant": getattr(args, "variant", None),
        }

    @final
    async def async_handle(self, args: argparse.Namespace) -> int:
        """Load the configuration and run the subcommand."""
        config = load_config(args.config, self.overrides(args))
        return await self.async_run(config)

    @abstractmethod
    async def async_run(self, config: ExperimentConfig) -> int:
        """Run the subcommand on a validated configuration."""
        raise NotImplementedError


@dataclass
class PostmeterCommandManager:
    """Class to manage Postmeter subcommands."""

    _commands: dict[str, AbstractPostmeterCommand] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Post initialization."""
        LOGGER.debug("Postmeter command manager initialized")

    def setup(self) -> None:
        """Load every subcommand module."""
        LOGGER.debug("Setting up Postmeter commands")
        for module in load_plugin_modules(
            __package__, Path(__file__).parent, "subcommands/*.py"
        ):
            self.register_command(module.PostmeterCommand())

    def register_command(self, command: AbstractPostmeterCommand) -> None:
        """Register a Postmeter subcommand."""
        if command.command in self._commands:
            msg = f"Duplicate Postmeter command: {command.command}"
            raise RuntimeError(msg)
        self._commands[command.command] = command

    @property
    def commands(self) -> dict[str, AbstractPostmeterCommand]:
        """Return the registered subcommands by name."""
        return dict(self._commands)

    def build_parser(self) -> argparse.ArgumentParser:
        """Return the parser of every registered subcommand."""
        parser = argparse.ArgumentParser(
            prog="postmeter",
            description="Post-selected weak-value metrology simulations.",
        )
        parser.add_argument(
            "-v",
            "--verbose",
            action="count",
            default=0,
            help="log more (-v info, -vv debug)",
        )
        subparsers = parser.add_subparsers(dest="command_name", metavar="command")
        subparsers.required = True
        for name in sorted(self._commands):
            self._commands[name].register(subparsers)
        return parser

    async def async_run(self, args: argparse.Namespace) -> int:
        """Dispatch parsed arguments to their subcommand."""
        command: AbstractPostmeterCommand = args.command
        LOGGER.debug("Running Postmeter command: %s", command.command)
        try:
            return await command.async_handle(args)
        except ConfigError as err:
            LOGGER.error("%s", err)  # noqa: TRY400
            return EXIT_CONFIG_ERROR
        except EmitError as err:
            LOGGER.error("%s", err)  # noqa: TRY400
            return EXIT_FAILURE

    def parse(self, argv: Sequence[str] | None = None) -> argparse.Namespace:
        """Parse a command line."""
        return self.build_parser().parse_args(argv)
