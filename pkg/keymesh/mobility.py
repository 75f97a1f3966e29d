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


from dataclasses import dataclass
from functools import partial
import math

from keymesh.analysis import check_setting, components, network_instance
from keymesh.core import RngStream, STREAM_KEYS, assign_keys
from keymesh.errors import InvalidParameterError, FormulaDomainError
from keymesh.log import get_logger
from keymesh.parallel import map_trials
from keymesh.stats import Estimate

logger = get_logger(__name__)


@dataclass(frozen=True)
class MobilityRun:
    '''
    Connectivity of T consecutive time slots. prefix_run is the number of slots connected from the beginning.
    '''
    slots: int
    per_slot_connected: tuple
    prefix_run: int

    @classmethod
    def from_slots(cls, connected):
        connected = tuple(bool(flag) for flag in connected)
        prefix = 0
        for flag in connected:
            if not flag:
                break
            prefix += 1
        return cls(slots=len(connected), per_slot_connected=connected, prefix_run=prefix)


@dataclass(frozen=True)
class MobilityEstimate:
    T: int
    estimate: Estimate
    slot_rate: float


def _check_mobile(setting, T):
    if not setting.mobile:
        raise InvalidParameterError("multi-slot simulation needs a mobile setting")
    if not setting.disk_model:
        raise InvalidParameterError("mobility is degenerate under full visibility")
    if T < 1:
        raise InvalidParameterError("need at least one time slot, got %d" % T)


def simulate_slots(scheme, geo, chan, setting, T, rng):
    '''
    i.i.d. mobility: key rings are drawn once, every slot redraws all positions and the link coins.
    Slot 0 uses the sub-streams of a static trial, so it reproduces the static instance of the same stream.

    :param rng: RngStream of the trial

    :return: MobilityRun
    '''
    _check_mobile(setting, T)
    check_setting(setting, geo, chan)
    assignment = assign_keys(scheme, rng.substream(STREAM_KEYS))
    connected = []
    for slot in range(T):
        _, _, graph = network_instance(setting, scheme, geo, chan, rng, slot=slot, assignment=assignment)
        connected.append(components(graph).connected)
    return MobilityRun.from_slots(connected)


def _mobility_trial(scheme, geo, chan, setting, T, master_seed, stream_index):
    return simulate_slots(scheme, geo, chan, setting, T, RngStream(master_seed, stream_index)).per_slot_connected


def t_slot_curve(scheme, geo, chan, setting, T_max, trials=500, master_seed=0, first_stream=0, pool=None):
    '''
    P[slots 1..T all connected] for T = 1..T_max, read off the same T_max-slot runs.

    :return: list of MobilityEstimate, one per T
    '''
    if trials < 1:
        raise InvalidParameterError("need at least one trial, got %d" % trials)
    _check_mobile(setting, T_max)
    run = partial(_mobility_trial, scheme, geo, chan, setting, T_max, master_seed)
    runs = [MobilityRun.from_slots(slots) for slots in map_trials(run, range(first_stream, first_stream + trials), pool)]

    slot_rate = sum(sum(run.per_slot_connected) for run in runs) / (trials * T_max)
    curve = []
    for T in range(1, T_max + 1):
        hits = sum(1 for run in runs if run.prefix_run >= T)
        curve.append(MobilityEstimate(T=T, estimate=Estimate.from_counts(hits, trials), slot_rate=slot_rate))
    logger.debug("per-slot connectivity rate %.4g over %d slots", slot_rate, trials * T_max)
    return curve


def estimate_T_slot_prob(scheme, geo, chan, setting, T, trials=500, master_seed=0, first_stream=0, pool=None):
    '''
    :return: MobilityEstimate of the probability that the first T slots are all connected
    '''
    return t_slot_curve(scheme, geo, chan, setting, T, trials, master_seed, first_stream, pool)[-1]


def t_slot_bound(n, c, epsilon, threshold=1.0):
    '''
    :param threshold: 1 on the torus, c_n* or c_n# on the square

    :return: floor(n^(c - threshold - epsilon)), the guaranteed number of consecutive connected slots
    '''
    if not c > threshold:
        raise FormulaDomainError("slot bound is vacuous for c=%g <= threshold=%g" % (c, threshold))
    if not epsilon > 0:
        raise InvalidParameterError("epsilon must be positive, got %r" % (epsilon,))
    return int(math.floor(n ** (c - threshold - epsilon) + 1e-9))
