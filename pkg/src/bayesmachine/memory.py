"""Likelihood memory arrays built from complementary 2T2R memristor cells.

Each stored bit occupies two devices. A one is (left=LRS, right=HRS), a zero
is (left=HRS, right=LRS). Reading compares the two resistances, so a bit is
only misread when the two device distributions overlap for that particular
pair. Bits are ordered MSB first: cell 0 holds bit 7 of the byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import BoundsError, ConfigurationError, InvalidStateError
from .trace import InferenceTrace

BITS = 8
_BIT_WEIGHTS = 1 << np.arange(BITS - 1, -1, -1)


class Level(Enum):
    LRS = "LRS"
    HRS = "HRS"


@dataclass(frozen=True)
class DeviceState:
    level: Level
    resistance: float


@dataclass(frozen=True)
class ComplementaryCell:
    left: DeviceState
    right: DeviceState

    @property
    def bit(self) -> int:
        return int(self.left.resistance < self.right.resistance)


@dataclass(frozen=True)
class FaultModel:
    """Lognormal device variability plus transient read flips.

    Defaults are representative HfOx values, not fitted to measurements.
    """

    lrs_median: float = 5e3
    hrs_median: float = 100e3
    lrs_sigma: float = 0.3
    hrs_sigma: float = 0.3
    transient_flip_prob: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.lrs_sigma < 0 or self.hrs_sigma < 0:
            raise ConfigurationError("lognormal spreads must be nonnegative")
        if self.lrs_median <= 0 or self.hrs_median <= 0:
            raise ConfigurationError("resistance medians must be positive")
        if not 0.0 <= self.transient_flip_prob <= 1.0:
            raise ConfigurationError("transient_flip_prob must lie in [0, 1]")

    @classmethod
    def noiseless(cls, rng_seed: int = 0) -> "FaultModel":
        return cls(lrs_sigma=0.0, hrs_sigma=0.0, transient_flip_prob=0.0, rng_seed=rng_seed)

    @property
    def is_noiseless(self) -> bool:
        return (
            self.lrs_sigma == 0.0
            and self.hrs_sigma == 0.0
            and self.transient_flip_prob == 0.0
            and self.lrs_median < self.hrs_median
        )

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)

    def sample(self, level_is_lrs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one resistance per device; ``level_is_lrs`` selects the distribution."""
        level_is_lrs = np.asarray(level_is_lrs, dtype=bool)
        median = np.where(level_is_lrs, self.lrs_median, self.hrs_median)
        sigma = np.where(level_is_lrs, self.lrs_sigma, self.hrs_sigma)
        return median * np.exp(sigma * rng.standard_normal(level_is_lrs.shape))


@dataclass(frozen=True)
class LikelihoodArray:
    """``n_entries`` bytes stored as ``n_entries x 8`` complementary cells.

    ``left_lrs[k, b]`` is True when the left device of cell ``b`` in entry
    ``k`` is in LRS (so the cell stores a one); the right device always holds
    the opposite level once programmed. Instances are immutable: programming
    returns a new array.
    """

    n_entries: int
    left_lrs: np.ndarray = field(repr=False)
    formed: bool = True

    def __post_init__(self):
        if self.n_entries < 1:
            raise ConfigurationError("an array needs at least one entry")
        arr = np.array(self.left_lrs, dtype=bool)
        if arr.shape != (self.n_entries, BITS):
            raise ConfigurationError(f"cell matrix must be ({self.n_entries}, {BITS})")
        arr.setflags(write=False)
        object.__setattr__(self, "left_lrs", arr)

    @classmethod
    def blank(cls, n_entries: int, formed: bool = True) -> "LikelihoodArray":
        return cls(n_entries, np.zeros((n_entries, BITS), dtype=bool), formed)

    @classmethod
    def from_bytes(cls, values) -> "LikelihoodArray":
        values = _check_bytes(values)
        return cls(len(values), _unpack(values), True)

    @property
    def programmed(self) -> np.ndarray:
        """Stored bytes as written, bypassing any read model."""
        return (self.left_lrs.astype(np.int64) @ _BIT_WEIGHTS).astype(np.uint8)

    def cell(self, entry: int, bit: int, fm: FaultModel | None = None) -> ComplementaryCell:
        """Device-level view of one cell (nominal medians unless a model is given)."""
        self._check_entry(entry)
        fm = fm or FaultModel.noiseless()
        one = bool(self.left_lrs[entry, bit])
        lrs = DeviceState(Level.LRS, fm.lrs_median)
        hrs = DeviceState(Level.HRS, fm.hrs_median)
        return ComplementaryCell(lrs, hrs) if one else ComplementaryCell(hrs, lrs)

    def _check_entry(self, entry: int) -> None:
        if not 0 <= entry < self.n_entries:
            raise BoundsError(f"entry {entry} outside [0, {self.n_entries})")


def _check_bytes(values) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 1 or np.any(values < 0) or np.any(values > 255):
        raise ConfigurationError("byte values must be a 1-D sequence in [0, 255]")
    return values.astype(np.uint8)


def _unpack(values: np.ndarray) -> np.ndarray:
    return ((values.astype(np.int64)[:, None] & _BIT_WEIGHTS) != 0)


def form(array: LikelihoodArray) -> LikelihoodArray:
    return replace(array, formed=True)


def program_byte(array: LikelihoodArray, entry: int, value: int) -> LikelihoodArray:
    """Write one byte with a single programming pass (no verify)."""
    if not array.formed:
        raise InvalidStateError("cannot program an unformed array")
    array._check_entry(entry)
    if not 0 <= value <= 255:
        raise ConfigurationError(f"byte value {value} outside [0, 255]")
    cells = array.left_lrs.copy()
    cells[entry] = _unpack(np.array([value]))[0]
    return replace(array, left_lrs=cells)


def program_bytes(array: LikelihoodArray, values) -> LikelihoodArray:
    """Write every entry at once."""
    if not array.formed:
        raise InvalidStateError("cannot program an unformed array")
    values = _check_bytes(values)
    if len(values) != array.n_entries:
        raise BoundsError(f"expected {array.n_entries} bytes, got {len(values)}")
    return replace(array, left_lrs=_unpack(values))


def read_bits(
    array: LikelihoodArray,
    entry: int,
    fm: FaultModel,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    array._check_entry(entry)
    if rng is None:
        rng = np.random.default_rng([fm.rng_seed, entry])
    if not array.formed:
        # filament-free devices: the sensed value carries no programmed information
        return rng.integers(0, 2, BITS).astype(bool)
    one = array.left_lrs[entry]
    left = fm.sample(one, rng)
    right = fm.sample(~one, rng)
    bits = left < right
    if fm.transient_flip_prob > 0:
        bits ^= rng.random(BITS) < fm.transient_flip_prob
    return bits


def read_byte(
    array: LikelihoodArray,
    entry: int,
    fm: FaultModel | None = None,
    rng: np.random.Generator | None = None,
) -> int:
    """Differential read of one entry.

    With no fault model, or a zero-width one, this returns the programmed
    byte. ``rng`` lets callers thread one generator through many reads;
    otherwise a fresh generator is seeded from ``(fm.rng_seed, entry)``.
    """
    if fm is None:
        fm = FaultModel.noiseless()
    bits = read_bits(array, entry, fm, rng)
    return int(bits.astype(np.int64) @ _BIT_WEIGHTS)


def differential_error_rate(fm: FaultModel, n_samples: int = 100_000, rng_seed: int = 0) -> float:
    """Monte-Carlo bit-error rate of the two-device comparison."""
    rng = np.random.default_rng(rng_seed)
    ones = np.ones(n_samples, dtype=bool)
    lrs = fm.sample(ones, rng)
    hrs = fm.sample(~ones, rng)
    # symmetric in the stored bit: an error is an HRS device reading below its LRS partner
    return float(np.mean(hrs <= lrs))


def single_device_error_rate(fm: FaultModel, n_samples: int = 100_000, rng_seed: int = 0) -> float:
    """Monte-Carlo error rate of reading one device against the best fixed threshold.

    Equal priors on the stored bit. The threshold is optimized on the samples
    themselves, which can only flatter the single-ended scheme.
    """
    rng = np.random.default_rng(rng_seed)
    ones = np.ones(n_samples, dtype=bool)
    lrs = np.sort(fm.sample(ones, rng))
    hrs = np.sort(fm.sample(~ones, rng))
    candidates = np.unique(np.concatenate([lrs, hrs, [0.0, np.inf]]))
    # misread LRS: resistance >= threshold; misread HRS: resistance < threshold
    lrs_err = 1.0 - np.searchsorted(lrs, candidates, side="left") / n_samples
    hrs_err = np.searchsorted(hrs, candidates, side="left") / n_samples
    return float(np.min(0.5 * (lrs_err + hrs_err)))


def inject_faults(trace: InferenceTrace, k: int, rng_seed: int = 0) -> InferenceTrace:
    """Flip exactly ``k`` distinct (row, cycle) output bits chosen uniformly."""
    total = trace.bits.size
    if not 0 <= k <= total:
        raise BoundsError(f"cannot flip {k} of {total} output bits")
    if k == 0:
        return trace
    rng = np.random.default_rng(rng_seed)
    flat = trace.bits.reshape(-1).copy()
    flat[rng.choice(total, size=k, replace=False)] ^= 1
    return InferenceTrace(flat.reshape(trace.bits.shape))
