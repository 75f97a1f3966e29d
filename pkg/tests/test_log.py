import io
import logging

from keymesh.log import get_logger, setup_logging


def test_loggers_live_under_the_package():
    assert get_logger('keymesh.analysis').name == 'keymesh.analysis'
    assert get_logger('tools').name == 'keymesh.tools'


def test_setup_logging_replaces_its_handler():
    stream = io.StringIO()
    setup_logging(logging.INFO, stream)
    logger = setup_logging(logging.INFO, stream)
    assert sum(getattr(handler, '_keymesh_handler', False) for handler in logger.handlers) == 1

    get_logger('keymesh.harness').debug("hidden")
    get_logger('keymesh.harness').warning("shown %d", 3)
    text = stream.getvalue()
    assert "hidden" not in text
    assert "WARNING [keymesh.harness] shown 3" in text
