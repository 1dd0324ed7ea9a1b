import logging
import sys

from heatmapping.config import settings

PACKAGE_LOGGER = "heatmapping"


def _configure(logger):
    logger.setLevel(settings.LOG_LEVEL)

    # Only add handler if logger doesn't already have handlers
    if not logger.handlers:
        formatter = logging.Formatter(
            "HEATMAPPING %(levelname)s: %(asctime)s - %(name)s:%(funcName)s:%(lineno)d - %(message)s"
        )
        handler = logging.StreamHandler(stream=sys.stdout)
        handler.setFormatter(formatter)
        logger.addHandler(handler)


def get_logger(name):
    """
    Logger for ``name``, usually a module's ``__name__``.

    The level and the stdout handler live on the package logger; module
    loggers below it propagate their records there.
    """
    package = logging.getLogger(PACKAGE_LOGGER)
    if not package.handlers:
        _configure(package)
    if name == PACKAGE_LOGGER or name.startswith(PACKAGE_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{PACKAGE_LOGGER}.{name}")
