import argparse
import sys
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from heatmapping import __version__
from heatmapping.commands import discover_commands
from heatmapping.errors import HeatmappingError
from heatmapping.logger import get_logger

logger = get_logger(__name__)


def build_parser(commands: List[Dict[str, Any]]) -> argparse.ArgumentParser:
    """
    Build the top-level parser with one subparser per discovered command.

    Args:
        commands: Command dictionaries returned by ``discover_commands``

    Returns:
        The configured parser; each subcommand sets ``command`` and ``handler``
    """
    parser = argparse.ArgumentParser(
        prog="heatmapping",
        description="Relevance heatmaps, transfer retraining and occlusion checks",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    for command in commands:
        sub = subparsers.add_parser(
            command["name"],
            help=command["description"],
            description=command["description"],
        )
        for flags, kwargs in command["arguments"]:
            sub.add_argument(*flags, **kwargs)
        sub.set_defaults(handler=command["function"])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on any library, validation or I/O error
    """
    commands = discover_commands()
    parser = build_parser(commands)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1

    logger.info(f"🚀 heatmapping {args.command}")
    try:
        return args.handler(args) or 0
    except (HeatmappingError, ValidationError, OSError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
