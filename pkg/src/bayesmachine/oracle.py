"""Exact Bayes reference and the likelihood-table compiler."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ProbabilityRangeError
from .machine import MachineConfig, MachineImage, Observation
from .memory import LikelihoodArray, program_bytes

# smallest probability the byte encoding can hold is 1/256; flooring at half
# of that keeps every compiled byte >= 0 without creating hard zeros
PROB_FLOOR = 1.0 / 512


@dataclass(frozen=True)
class LikelihoodTable:
    """``values[row, column, entry]`` = p(O_column = entry | Y = row)."""

    values: np.ndarray = field(repr=False)
    prior: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3:
            raise ConfigurationError("likelihood values must be (rows, columns, entries)")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ConfigurationError("likelihoods must be finite and nonnegative")
        if np.any(values.max(axis=(0, 2)) <= 0):
            raise ConfigurationError("every column needs at least one positive likelihood")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.prior is not None:
            prior = np.array(self.prior, dtype=float)
            if prior.shape != (values.shape[0],) or np.any(prior < 0) or not prior.max() > 0:
                raise ConfigurationError("prior needs one nonnegative value per row, not all zero")
            prior.setflags(write=False)
            object.__setattr__(self, "prior", prior)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def select(self, obs) -> np.ndarray:
        """Selected likelihoods, ``(rows, columns)``."""
        idx = obs.indices if isinstance(obs, Observation) else tuple(obs)
        n_rows, n_cols, n_entries = self.shape
        if len(idx) != n_cols or any(not 0 <= i < n_entries for i in idx):
            raise ConfigurationError(f"observation {idx} invalid for table of shape {self.shape}")
        return self.values[:, np.arange(n_cols), list(idx)]

    def unnormalized(self, obs) -> np.ndarray:
        p = self.select(obs).prod(axis=1)
        if self.prior is not None:
            p = p * self.prior
        return p


@dataclass(frozen=True)
class Posterior:
    probs: np.ndarray
    degenerate: bool = False

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.probs))


def exact_posterior(table: LikelihoodTable, obs) -> Posterior:
    """Normalized product of the selected likelihoods and the prior.

    An all-zero product yields the uniform distribution flagged degenerate.
    """
    p = table.unnormalized(obs)
    total = p.sum()
    if total <= 0:
        return Posterior(np.full(len(p), 1.0 / len(p)), True)
    return Posterior(p / total)


def normalize_columns(table: LikelihoodTable) -> LikelihoodTable:
    """Divide each column by its maximum over all rows and entries.

    Every row's product for a given observation is scaled by the same
    constant, so posterior rankings are unchanged. The prior, if any, is
    scaled by its own maximum.
    """
    col_max = table.values.max(axis=(0, 2), keepdims=True)
    prior = None if table.prior is None else table.prior / table.prior.max()
    return LikelihoodTable(table.values / col_max, prior)


def quantize(p):
    """Encode probability ``p`` in (0, 1] as a byte; byte ``v`` stands for (v+1)/256."""
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > 1):
        raise ProbabilityRangeError("probabilities must lie in (0, 1]")
    v = np.clip(np.floor(arr * 256 + 0.5) - 1, 0, 255).astype(np.int64)
    return int(v) if v.ndim == 0 else v


def dequantize(v):
    return (np.asarray(v, dtype=float) + 1) / 256


def compile_table(table: LikelihoodTable, config: MachineConfig | None = None) -> MachineImage:
    """Normalize, quantize and program a likelihood table into a machine image."""
    n_rows, n_cols, n_entries = table.shape
    if config is None:
        config = MachineConfig(n_rows, n_cols, n_entries, table.prior is not None)
    expected = (config.n_rows, config.n_columns, config.entries_per_array)
    if table.shape != expected:
        raise ConfigurationError(f"table shape {table.shape} does not match config {expected}")
    if config.has_prior_column != (table.prior is not None):
        raise ConfigurationError("prior presence does not match has_prior_column")
    norm = normalize_columns(table)
    codes = quantize(np.maximum(norm.values, PROB_FLOOR))
    arrays = tuple(
        tuple(
            program_bytes(LikelihoodArray.blank(n_entries), codes[r, c]) for c in range(n_cols)
        )
        for r in range(n_rows)
    )
    prior = None
    if norm.prior is not None:
        prior = tuple(int(b) for b in quantize(np.maximum(norm.prior, PROB_FLOOR)))
    return MachineImage(config, arrays, prior)


def without_uniform_prior(table: LikelihoodTable) -> LikelihoodTable:
    """Drop a prior that is constant across rows; it cannot change any ranking."""
    if table.prior is not None and np.all(table.prior == table.prior[0]):
        return LikelihoodTable(table.values)
    return table
