import importlib
import os
from typing import Any, Callable, Dict, List, Sequence, Tuple

from heatmapping.logger import get_logger

logger = get_logger(__name__)

# (flags, argparse keyword arguments) for one add_argument call
Argument = Tuple[Tuple[str, ...], Dict[str, Any]]

# Global registry of subcommands, keyed by command name
_commands: Dict[str, Dict[str, Any]] = {}


def arg(*flags: str, **kwargs) -> Argument:
    """Describe one command-line argument, as passed to ``add_argument``."""
    return flags, kwargs


def cli_command(
    func: Callable = None,
    *,
    name: str = None,
    description: str = None,
    arguments: Sequence[Argument] = (),
):
    """
    Decorator to mark a function as a ``heatmapping`` subcommand.
    Auto-registers the function for discovery by the argument parser.

    Args:
        func: The function to decorate; it receives the parsed
            ``argparse.Namespace`` and returns an exit code
        name: Optional command name (defaults to the function name with
            underscores turned into dashes)
        description: Optional help text (defaults to the function docstring)
        arguments: Arguments built with ``arg``

    Usage:
        @cli_command(name="explain", arguments=[arg("--image", required=True)])
        def run(args) -> int:
            ...
    """

    def decorator(f: Callable) -> Callable:
        command_name = name or f.__name__.replace("_", "-")
        _commands[command_name] = {
            "function": f,
            "name": command_name,
            "description": description or (f.__doc__ or "").strip(),
            "arguments": list(arguments),
            "module": f.__module__,
        }
        return f

    # Handle both @cli_command and @cli_command(...) usage
    if func is None:
        return decorator
    return decorator(func)


def discover_commands() -> List[Dict[str, Any]]:
    """
    Import every module in this folder so their @cli_command decorators run.

    Returns:
        Command dictionaries sorted by name
    """
    commands_dir = os.path.dirname(__file__)

    for filename in sorted(os.listdir(commands_dir)):
        if filename.endswith(".py") and filename != "__init__.py":
            module_name = f"heatmapping.commands.{filename[:-3]}"
            try:
                importlib.import_module(module_name)
                logger.debug(f"✓ Discovered commands from {module_name}")
            except Exception as e:
                logger.error(f"✗ Failed to import {module_name}: {e}")

    return [_commands[key] for key in sorted(_commands)]
