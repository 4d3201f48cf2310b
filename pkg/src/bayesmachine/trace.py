from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class InferenceTrace:
    """Per-cycle row outputs of one inference run.

    ``bits[row, c]`` is the AND-chain output of ``row`` at cycle ``c + 1``.
    """

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] < 1:
            raise ValueError("trace bits must be a non-empty (rows, cycles) matrix")
        if np.any(bits > 1):
            raise ValueError("trace bits must be binary")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def n_rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cycles_run(self) -> int:
        return self.bits.shape[1]

    @property
    def counts(self) -> np.ndarray:
        return self.bits.sum(axis=1, dtype=np.int64)

    def cumulative_counts(self) -> np.ndarray:
        return np.cumsum(self.bits, axis=1, dtype=np.int64)

    def prefix(self, n_cycles: int) -> "InferenceTrace":
        """The same run observed for only the first ``n_cycles`` cycles."""
        if not 1 <= n_cycles <= self.cycles_run:
            raise ValueError(f"prefix length must be in [1, {self.cycles_run}]")
        return InferenceTrace(self.bits[:, :n_cycles])

    def probabilities(self) -> np.ndarray:
        return self.counts / self.cycles_run
