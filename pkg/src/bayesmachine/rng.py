"""8-bit LFSR and the comparator-style proportional bit generator.

The register is a Fibonacci LFSR with feedback polynomial
x^8 + x^6 + x^5 + x^4 + 1. It visits every nonzero byte exactly once per
period of 255 steps, so a comparator fed by it emits an exact number of
ones over a full period.

Note on the top of the range: a byte ``v`` nominally encodes ``(v+1)/256``,
but over one period the generator realizes ``min(v+1, 255)/255``. Bytes 254
and 255 therefore both produce an all-ones stream.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InvalidStateError

WIDTH = 8
PERIOD = 255
# exponents of the feedback polynomial, excluding the constant term
TAPS = (8, 6, 5, 4)


def lfsr_step(state: int) -> int:
    """Advance the register by one clock and return the new state."""
    if not 0 < state <= 0xFF:
        raise InvalidStateError(f"LFSR state must be in [1, 255], got {state}")
    feedback = 0
    for tap in TAPS:
        feedback ^= (state >> (tap - 1)) & 1
    return ((state << 1) | feedback) & 0xFF


@lru_cache(maxsize=None)
def _orbit() -> tuple[np.ndarray, np.ndarray]:
    states = np.empty(PERIOD, dtype=np.int64)
    s = 1
    for i in range(PERIOD):
        states[i] = s
        s = lfsr_step(s)
    if s != 1 or len(set(states.tolist())) != PERIOD:
        raise RuntimeError("feedback polynomial is not maximal")
    position = np.full(256, -1, dtype=np.int64)
    position[states] = np.arange(PERIOD)
    states.setflags(write=False)
    position.setflags(write=False)
    return states, position


def orbit() -> np.ndarray:
    """The 255 register states in clock order, starting from state 1."""
    return _orbit()[0]


def orbit_position(state: int) -> int:
    if not 0 < state <= 0xFF:
        raise InvalidStateError(f"LFSR state must be in [1, 255], got {state}")
    return int(_orbit()[1][state])


def lfsr_sequence(seed: int, n_cycles: int) -> np.ndarray:
    """States seen at cycles 1..n_cycles: the register is clocked, then read.

    Equivalent to repeatedly applying :func:`lfsr_step` to ``seed``.
    """
    states = orbit()
    start = orbit_position(seed) + 1
    idx = (start + np.arange(n_cycles)) % PERIOD
    return states[idx]


def gupta_bit(v: int, r: int) -> int:
    """Proportional bit: 1 iff the random byte ``r`` is at most ``v + 1``."""
    if not 0 < r <= 0xFF:
        raise InvalidStateError(f"random byte must be in [1, 255], got {r}")
    return int(r <= v + 1)


def gupta_bits(v, r) -> np.ndarray:
    """Vectorized :func:`gupta_bit` over broadcastable arrays."""
    return np.asarray(r) <= np.asarray(v, dtype=np.int64) + 1


def full_period_count(v: int) -> int:
    """Ones emitted for byte ``v`` over one full period, for any seed."""
    return min(int(v) + 1, PERIOD)


def seed_load(seeds: Sequence[int], n_columns: int) -> list[int]:
    """Validate one nonzero seed per column."""
    seeds = [int(s) for s in seeds]
    if len(seeds) != n_columns:
        raise ConfigurationError(f"expected {n_columns} seeds, got {len(seeds)}")
    for i, s in enumerate(seeds):
        if not 0 < s <= 0xFF:
            raise ConfigurationError(f"seed {i} must be in [1, 255], got {s}")
    return seeds
