"""Cycle-accurate simulation of the stochastic Bayesian machine grid.

One row per hypothesis value, one column per observation group. Each column
shares one LFSR across its rows; every block compares its latched likelihood
byte with the column's random byte and the row ANDs its block bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import NamedTuple, Sequence

import numpy as np

from . import rng as lfsr
from .errors import BoundsError, ConfigurationError
from .memory import FaultModel, LikelihoodArray, read_byte
from .trace import InferenceTrace

__all__ = [
    "MachineConfig",
    "MachineImage",
    "Observation",
    "Decision",
    "InferenceTrace",
    "run_inference",
    "run_inference_ideal",
    "decide_max_count",
    "decide_first_one",
    "pool_columns",
    "pooled_index",
]


@dataclass(frozen=True)
class MachineConfig:
    n_rows: int
    n_columns: int
    entries_per_array: int
    has_prior_column: bool = False

    def __post_init__(self):
        if self.n_rows < 1 or self.n_columns < 1:
            raise ConfigurationError("a machine needs at least one row and one column")
        e = self.entries_per_array
        if e < 1 or e & (e - 1):
            raise ConfigurationError(f"entries_per_array must be a power of two, got {e}")

    @property
    def n_lfsrs(self) -> int:
        return self.n_columns + int(self.has_prior_column)

    @classmethod
    def test_chip(cls) -> "MachineConfig":
        return cls(n_rows=4, n_columns=4, entries_per_array=8)

    @classmethod
    def scaled(cls) -> "MachineConfig":
        return cls(n_rows=4, n_columns=6, entries_per_array=512)


@dataclass(frozen=True)
class MachineImage:
    """A programmed chip: ``arrays[row][col]`` plus an optional per-row prior byte."""

    config: MachineConfig
    arrays: tuple[tuple[LikelihoodArray, ...], ...]
    prior: tuple[int, ...] | None = None

    def __post_init__(self):
        cfg = self.config
        arrays = tuple(tuple(r) for r in self.arrays)
        if len(arrays) != cfg.n_rows or any(len(r) != cfg.n_columns for r in arrays):
            raise ConfigurationError(f"image must hold {cfg.n_rows}x{cfg.n_columns} arrays")
        for r in arrays:
            for a in r:
                if a.n_entries != cfg.entries_per_array:
                    raise ConfigurationError("array size does not match entries_per_array")
        object.__setattr__(self, "arrays", arrays)
        if cfg.has_prior_column != (self.prior is not None):
            raise ConfigurationError("prior bytes must be given iff has_prior_column")
        if self.prior is not None:
            prior = tuple(int(p) for p in self.prior)
            if len(prior) != cfg.n_rows or not all(0 <= p <= 255 for p in prior):
                raise ConfigurationError("prior needs one byte in [0, 255] per row")
            object.__setattr__(self, "prior", prior)

    @classmethod
    def from_bytes(cls, values, prior=None) -> "MachineImage":
        """Build an image from a ``(rows, columns, entries)`` byte tensor."""
        values = np.asarray(values)
        if values.ndim != 3:
            raise ConfigurationError("byte tensor must be (rows, columns, entries)")
        n_rows, n_cols, n_entries = values.shape
        cfg = MachineConfig(n_rows, n_cols, n_entries, prior is not None)
        arrays = tuple(
            tuple(LikelihoodArray.from_bytes(values[r, c]) for c in range(n_cols))
            for r in range(n_rows)
        )
        return cls(cfg, arrays, None if prior is None else tuple(prior))

    def byte_tensor(self) -> np.ndarray:
        """Programmed bytes as a ``(rows, columns, entries)`` uint8 tensor."""
        return np.stack([np.stack([a.programmed for a in row]) for row in self.arrays])


@dataclass(frozen=True)
class Observation:
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    def validate(self, config: MachineConfig) -> None:
        if len(self.indices) != config.n_columns:
            raise BoundsError(f"observation needs {config.n_columns} indices")
        for c, i in enumerate(self.indices):
            if not 0 <= i < config.entries_per_array:
                raise BoundsError(
                    f"observation index {i} in column {c} outside [0, {config.entries_per_array})"
                )


def _as_observation(obs) -> Observation:
    return obs if isinstance(obs, Observation) else Observation(tuple(obs))


def latch_bytes(
    image: MachineImage, obs, fm: FaultModel | None = None
) -> np.ndarray:
    """Read the addressed byte of every block once: ``(rows, lfsr_columns)`` ints.

    The prior column, when present, is appended as the last column.
    """
    obs = _as_observation(obs)
    cfg = image.config
    obs.validate(cfg)
    if fm is None or fm.is_noiseless:
        v = np.array(
            [[image.arrays[r][c].programmed[obs.indices[c]] for c in range(cfg.n_columns)]
             for r in range(cfg.n_rows)],
            dtype=np.int64,
        )
    else:
        gen = fm.rng()
        v = np.array(
            [[read_byte(image.arrays[r][c], obs.indices[c], fm, gen) for c in range(cfg.n_columns)]
             for r in range(cfg.n_rows)],
            dtype=np.int64,
        )
    if image.prior is not None:
        v = np.column_stack([v, np.array(image.prior, dtype=np.int64)])
    return v


def _and_chain(latched: np.ndarray, random_bytes: np.ndarray) -> InferenceTrace:
    # latched: (rows, cols); random_bytes: (cols, cycles)
    block_bits = random_bytes[None, :, :] <= latched[:, :, None] + 1
    return InferenceTrace(block_bits.all(axis=1))


def run_inference(
    image: MachineImage,
    obs,
    seeds: Sequence[int],
    n_cycles: int = lfsr.PERIOD,
    fm: FaultModel | None = None,
) -> InferenceTrace:
    """Simulate ``n_cycles`` clock cycles for one observation.

    ``seeds`` holds one LFSR seed per column, plus a trailing seed for the
    prior column's LFSR when the image has one. Each cycle clocks every LFSR
    once, then every block emits its proportional bit.
    """
    if n_cycles < 1:
        raise ConfigurationError("n_cycles must be at least 1")
    seeds = lfsr.seed_load(seeds, image.config.n_lfsrs)
    latched = latch_bytes(image, obs, fm)
    streams = np.stack([lfsr.lfsr_sequence(s, n_cycles) for s in seeds])
    return _and_chain(latched, streams)


def run_inference_ideal(
    image: MachineImage,
    obs,
    n_cycles: int,
    rng_seed: int = 0,
    fm: FaultModel | None = None,
) -> InferenceTrace:
    """Same grid driven by ideal i.i.d. random bytes uniform on 1..256.

    Under this source a byte ``v`` yields ones with probability exactly
    ``(v+1)/256``, the nominal encoding.
    """
    if n_cycles < 1:
        raise ConfigurationError("n_cycles must be at least 1")
    latched = latch_bytes(image, obs, fm)
    gen = np.random.default_rng(rng_seed)
    streams = gen.integers(1, 257, size=(latched.shape[1], n_cycles))
    return _and_chain(latched, streams)


class Decision(NamedTuple):
    row: int
    cycles_used: int
    low_confidence: bool = False


def decide_max_count(trace: InferenceTrace) -> Decision:
    """Row with the most ones; ties go to the lowest row index."""
    counts = trace.counts
    row = int(np.argmax(counts))
    return Decision(row, trace.cycles_run, bool(counts[row] == 0))


def first_one(trace: InferenceTrace) -> Decision:
    """Decide from the first cycle in which any row outputs a one."""
    fired = trace.bits.any(axis=0)
    if not fired.any():
        fallback = decide_max_count(trace)
        return Decision(fallback.row, trace.cycles_run, True)
    cycle = int(np.argmax(fired))
    row = int(np.argmax(trace.bits[:, cycle]))
    return Decision(row, cycle + 1, False)


def decide_first_one(
    image: MachineImage,
    obs,
    seeds: Sequence[int],
    max_cycles: int = lfsr.PERIOD,
    fm: FaultModel | None = None,
) -> Decision:
    """Power-conscious decision: stop at the first one emitted by any row.

    Simultaneous firing goes to the lowest row. If nothing fires within
    ``max_cycles``, falls back to max-count over the run, flagged low-confidence.
    """
    if max_cycles < 1:
        raise ConfigurationError("max_cycles must be at least 1")
    return first_one(run_inference(image, obs, seeds, max_cycles, fm))


def _normalize_cardinalities(cardinalities) -> list[tuple[int, ...]]:
    out = []
    for group in cardinalities:
        group = (group,) if isinstance(group, (int, np.integer)) else tuple(group)
        if not group or any(int(k) < 1 for k in group):
            raise ConfigurationError("each pooled group needs positive cardinalities")
        out.append(tuple(int(k) for k in group))
    if not out:
        raise ConfigurationError("at least one column is required")
    return out


def pool_columns(
    cardinalities,
    n_rows: int,
    entries_per_array: int | None = None,
    has_prior_column: bool = False,
) -> MachineConfig:
    """Machine geometry for observations pooled into joint-likelihood columns.

    ``cardinalities`` lists, per column, the value counts of the observations
    pooled into it (a bare int is an unpooled column). Without an explicit
    ``entries_per_array`` the smallest sufficient power of two is used.
    """
    groups = _normalize_cardinalities(cardinalities)
    needed = max(prod(g) for g in groups)
    if entries_per_array is None:
        entries_per_array = 1 << (needed - 1).bit_length()
    if needed > entries_per_array:
        raise ConfigurationError(
            f"pooled column needs {needed} entries, arrays hold {entries_per_array}"
        )
    return MachineConfig(n_rows, len(groups), entries_per_array, has_prior_column)


def pooled_index(cardinalities: Sequence[int], values: Sequence[int]) -> int:
    """Mixed-radix address of a pooled observation, first value most significant."""
    if len(cardinalities) != len(values):
        raise BoundsError("one value per pooled observation is required")
    index = 0
    for k, v in zip(cardinalities, values):
        if not 0 <= v < k:
            raise BoundsError(f"pooled value {v} outside [0, {k})")
        index = index * k + int(v)
    return index


def pool_observation(cardinalities, values_per_column) -> Observation:
    groups = _normalize_cardinalities(cardinalities)
    idx = []
    for g, vals in zip(groups, values_per_column, strict=True):
        vals = (vals,) if isinstance(vals, (int, np.integer)) else tuple(vals)
        idx.append(pooled_index(g, vals))
    return Observation(tuple(idx))
