'''----------------------------------------------------------------------------------------------------------------------------------
# Copyright (C) 2026
#
# This file is part of keymesh.
#
# keymesh is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# keymesh is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License. If not, see http://www.gnu.org/licenses/
---------------------------------------------------------------------------------------------------------------------------------'''


import logging
import sys

from termcolor import colored

_ROOT_LOGGER = 'keymesh'

# warnings in yellow, errors in red
_LEVEL_COLORS = {
    logging.DEBUG: 'cyan',
    logging.WARNING: 'yellow',
    logging.ERROR: 'red',
    logging.CRITICAL: 'red',
}


class ColoredFormatter(logging.Formatter):

    def __init__(self, fmt="%(levelname)s [%(name)s] %(message)s", use_color=True):
        logging.Formatter.__init__(self, fmt)
        self.use_color = use_color

    def format(self, record):
        message = logging.Formatter.format(self, record)
        color = _LEVEL_COLORS.get(record.levelno)
        if self.use_color and color is not None:
            return colored(message, color)
        return message


def get_logger(name):
    '''
    :param name: module name (usually __name__)

    :return: a logger living under the keymesh hierarchy
    '''
    if name == _ROOT_LOGGER or name.startswith(_ROOT_LOGGER + '.'):
        return logging.getLogger(name)
    return logging.getLogger("%s.%s" % (_ROOT_LOGGER, name))


def setup_logging(level=logging.INFO, stream=None):
    '''
    Install a single colored stderr handler on the keymesh logger. Calling it again only replaces the handler.

    :param level: logging level for the whole package
    :param stream: output stream, defaults to sys.stderr

    :return: the configured package logger
    '''
    stream = sys.stderr if stream is None else stream
    logger = logging.getLogger(_ROOT_LOGGER)

    for handler in list(logger.handlers):
        if getattr(handler, '_keymesh_handler', False):
            logger.removeHandler(handler)

    handler = logging.StreamHandler(stream)
    handler._keymesh_handler = True
    handler.setFormatter(ColoredFormatter(use_color=hasattr(stream, 'isatty') and stream.isatty()))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
