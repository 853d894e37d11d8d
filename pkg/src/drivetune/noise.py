"""Counter-based deterministic noise.

Every random quantity in the workbench is a pure function of
(seed, scenario, repetition, tick, channel, slot).  There is no stateful
generator anywhere, so parallel workers need no sequencing and replaying
any run reproduces its noise bit for bit.
"""
from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1

# Channel ids.  New channels get new numbers; renumbering breaks replay.
CH_SPEED_MEAS = 1
CH_LATERAL_MEAS = 2
CH_HEADING_MEAS = 3
CH_WAYPOINT = 4
CH_ACTOR_LAYOUT = 5


def _mix(z: int) -> int:
    """splitmix64 finalizer: avalanches a 64-bit word."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _hash_key(*parts: int) -> int:
    h = 0x6A09E667F3BCC909
    for p in parts:
        h = _mix(h ^ (p & _MASK64))
    return h


class NoiseStream:
    """Noise source keyed on (seed, scenario index, repetition).

    All draws are addressed by (tick, channel, slot); drawing the same
    address twice returns the same value.
    """

    __slots__ = ("_base",)

    def __init__(self, seed: int, scenario_index: int = 0, repetition: int = 0):
        self._base = _hash_key(seed, scenario_index, repetition)

    def uniform(self, tick: int, channel: int, slot: int = 0) -> float:
        """Uniform draw in [0, 1)."""
        bits = _hash_key(self._base, tick, channel, slot)
        return (bits >> 11) * 2.0**-53

    def normal(self, tick: int, channel: int, slot: int = 0) -> float:
        """Standard normal via Box-Muller; consumes slots (2*slot, 2*slot+1)."""
        bits1 = _hash_key(self._base, tick, channel, 2 * slot)
        bits2 = _hash_key(self._base, tick, channel, 2 * slot + 1)
        # u1 in (0, 1] so the log is finite.
        u1 = ((bits1 >> 11) + 1) * 2.0**-53
        u2 = (bits2 >> 11) * 2.0**-53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
