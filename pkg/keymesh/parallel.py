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


from concurrent.futures import ProcessPoolExecutor
import os

from keymesh.errors import InvalidParameterError
from keymesh.log import get_logger

logger = get_logger(__name__)

THREADS_ENV = 'KEYMESH_THREADS'


def worker_count():
    '''
    :return: worker cap from KEYMESH_THREADS, machine parallelism when unset
    '''
    value = os.environ.get(THREADS_ENV, '').strip()
    if not value:
        return os.cpu_count() or 1
    try:
        workers = int(value)
    except ValueError:
        raise InvalidParameterError("%s must be a positive integer, got '%s'" % (THREADS_ENV, value))
    if workers < 1:
        raise InvalidParameterError("%s must be a positive integer, got %d" % (THREADS_ENV, workers))
    return workers


class TrialPool:
    '''
    Ordered map over trials. Results come back in submission order, so every aggregate is
    independent of the number of workers. One worker runs inline without spawning processes.
    '''

    def __init__(self, workers=None):
        self.workers = worker_count() if workers is None else int(workers)
        if self.workers < 1:
            raise InvalidParameterError("worker count must be positive, got %d" % self.workers)
        self.executor = None

    def __enter__(self):
        if self.workers > 1:
            self.executor = ProcessPoolExecutor(max_workers=self.workers)
            logger.debug("started %d trial workers", self.workers)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.close()
        return False

    def close(self):
        if self.executor is not None:
            self.executor.shutdown()
            self.executor = None

    def map(self, fn, items):
        '''
        :param fn: picklable callable (module-level function or functools.partial of one)
        :param items: iterable of arguments

        :return: list of fn(item) in the order of items
        '''
        items = list(items)
        if self.executor is None or len(items) < 2:
            return [fn(item) for item in items]
        chunksize = max(1, len(items) // (4 * self.workers))
        return list(self.executor.map(fn, items, chunksize=chunksize))


def map_trials(fn, items, pool=None):
    '''
    :return: [fn(item) for item in items], through pool when one is given
    '''
    if pool is None:
        return [fn(item) for item in items]
    return pool.map(fn, items)
