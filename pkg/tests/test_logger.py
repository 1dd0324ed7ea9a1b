import logging

from heatmapping.logger import PACKAGE_LOGGER, get_logger


def test_module_loggers_share_the_package_handler():
    module_logger = get_logger("heatmapping.lrp.engine")
    package = logging.getLogger(PACKAGE_LOGGER)
    assert module_logger.name == "heatmapping.lrp.engine"
    assert module_logger.propagate
    assert module_logger.handlers == []
    assert len(package.handlers) == 1
    get_logger("heatmapping.render")
    assert len(package.handlers) == 1


def test_foreign_names_are_placed_under_the_package():
    assert get_logger("__main__").name == "heatmapping.__main__"
    assert get_logger(PACKAGE_LOGGER).name == PACKAGE_LOGGER


def test_module_records_reach_package_level_capture(caplog):
    with caplog.at_level(logging.WARNING, logger=PACKAGE_LOGGER):
        get_logger("heatmapping.commands.options").warning("alpha + beta = 1.5")
    assert [r.name for r in caplog.records] == ["heatmapping.commands.options"]
