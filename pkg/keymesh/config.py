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


import numpy as np

from keymesh.errors import InvalidParameterError


def parse_config_file(path):
    '''
    Read a key=value configuration file: one pair per line, '#' starts a comment, blank lines are skipped.
    Keys are command-line flag names without the leading dashes, '-' and '_' are interchangeable.

    :param path: file path

    :return: dict {key: raw string value} in file order
    '''
    values = {}
    try:
        with open(path, 'r') as file:
            lines = file.readlines()
    except OSError as error:
        raise InvalidParameterError("cannot read config file '%s': %s" % (path, error))

    for number, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise InvalidParameterError("%s:%d: expected key = value, got '%s'" % (path, number, line))
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise InvalidParameterError("%s:%d: missing key" % (path, number))
        values[key.replace('-', '_')] = value
    return values


def parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise InvalidParameterError("expected a boolean, got '%s'" % text)


def parse_range(text, kind=int):
    '''
    :param text: 'lo:hi:step' (hi included) or a comma separated list
    :param kind: int or float

    :return: list of values in the given order
    '''
    text = str(text).strip()
    try:
        if ':' in text:
            parts = text.split(':')
            if len(parts) not in (2, 3):
                raise InvalidParameterError("range must look like lo:hi[:step], got '%s'" % text)
            low, high = kind(parts[0]), kind(parts[1])
            step = kind(parts[2]) if len(parts) == 3 else kind(1)
            if step <= 0:
                raise InvalidParameterError("range step must be positive, got '%s'" % text)
            if high < low:
                raise InvalidParameterError("range upper bound below lower bound in '%s'" % text)
            if kind is int:
                return list(range(low, high + 1, step))
            count = int(np.floor((high - low) / step + 1e-9)) + 1
            return [float(value) for value in np.round(low + step * np.arange(count), 12)]
        values = [kind(part) for part in text.split(',') if part.strip()]
    except InvalidParameterError:
        raise
    except ValueError:
        raise InvalidParameterError("cannot read '%s' as a %s range" % (text, kind.__name__))
    if not values:
        raise InvalidParameterError("empty range '%s'" % text)
    return values
