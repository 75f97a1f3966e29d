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
import math

from keymesh.errors import InvalidParameterError

Z_95 = 1.959963984540054


def wilson_interval(successes, trials, z=Z_95):
    '''
    Wilson score interval for a binomial proportion, well behaved near 0 and 1

    :param successes: number of successes
    :param trials: number of trials

    :return: (low, high)
    '''
    if trials <= 0:
        raise InvalidParameterError("a confidence interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise InvalidParameterError("successes must lie in [0, %d], got %d" % (trials, successes))
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    margin = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    # clamp keeps low <= p <= high against rounding at p = 0 or 1
    return max(0.0, min(p, center - margin)), min(1.0, max(p, center + margin))


@dataclass(frozen=True)
class Estimate:
    '''
    A Monte Carlo proportion with its 95% Wilson interval
    '''
    value: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int

    @classmethod
    def from_counts(cls, successes, trials):
        low, high = wilson_interval(successes, trials)
        return cls(value=successes / trials, ci_low=low, ci_high=high, successes=int(successes), trials=int(trials))

    def standard_error(self):
        return math.sqrt(self.value * (1.0 - self.value) / self.trials)
