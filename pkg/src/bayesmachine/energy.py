"""Parametric energy model calibrated on one reference configuration.

Measured figures for a 4-row x 6-column machine: 0.38 nJ to load the LFSR
seeds, 0.3 nJ per memory read, 2.2 nJ for 255 inference cycles, the latter
split 11 % clock, 1 % AND gates and horizontal wires, 60 % random-number
generation, 28 % vertical distribution of random numbers.

Everything else is modelling: energy per cycle is constant, and relative to
the reference configuration random-number generation scales with the number
of columns, distribution and compute with columns x rows, the clock is
fixed, and the memory read scales with columns x rows.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError
from .machine import MachineConfig

MODEL_NOTE = (
    "linear per-cycle energy; rng_gen scales with columns, rng_dist and "
    "compute_and_hwires with columns*rows, clock constant, memory read with "
    "columns*rows; calibrated on a 4x6 reference machine"
)
COMPONENTS = ("clock", "compute_and_hwires", "rng_gen", "rng_dist")
NJ_PER_UJ = 1000.0


@dataclass(frozen=True)
class EnergyParams:
    e_seed_load: float = 0.38  # nJ, once per power-up
    e_mem_read: float = 0.3  # nJ, once per observation
    e_cycle_total: float = 2.2 / 255  # nJ per inference cycle
    fractions: dict = field(
        default_factory=lambda: {
            "clock": 0.11,
            "compute_and_hwires": 0.01,
            "rng_gen": 0.60,
            "rng_dist": 0.28,
        }
    )
    reference_config: MachineConfig = field(
        default_factory=lambda: MachineConfig(n_rows=4, n_columns=6, entries_per_array=512)
    )
    mcu_energy_per_inference: float = 10.0  # uJ

    def __post_init__(self):
        if min(self.e_seed_load, self.e_mem_read, self.e_cycle_total, self.mcu_energy_per_inference) < 0:
            raise ConfigurationError("energies must be nonnegative")
        if set(self.fractions) != set(COMPONENTS):
            raise ConfigurationError(f"fractions must cover exactly {COMPONENTS}")
        if any(f < 0 for f in self.fractions.values()):
            raise ConfigurationError("fractions must be nonnegative")
        if abs(sum(self.fractions.values()) - 1.0) > 1e-9:
            raise ConfigurationError("fractions must sum to 1")

    def override(self, **changes) -> "EnergyParams":
        return replace(self, **changes)


def default_params() -> EnergyParams:
    return EnergyParams()


@dataclass(frozen=True)
class EnergyReport:
    seed_load: float
    memory_read: float
    inference: float
    components: dict
    cycles_charged: float
    ratio_vs_mcu: float
    ratios: dict
    model: str = MODEL_NOTE

    @property
    def total(self) -> float:
        return self.seed_load + self.memory_read + self.inference

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        d["units"] = "nJ"
        return d


def _scales(params: EnergyParams, config: MachineConfig) -> dict:
    ref = params.reference_config
    cols = config.n_columns / ref.n_columns
    grid = (config.n_columns * config.n_rows) / (ref.n_columns * ref.n_rows)
    return {"clock": 1.0, "compute_and_hwires": grid, "rng_gen": cols, "rng_dist": grid, "read": grid}


def cycle_components(params: EnergyParams, config: MachineConfig) -> dict:
    """Per-cycle energy of each component for ``config`` (nJ)."""
    s = _scales(params, config)
    return {k: params.e_cycle_total * params.fractions[k] * s[k] for k in COMPONENTS}


def estimate(
    params: EnergyParams,
    config: MachineConfig,
    cycles: float,
    include_seed_load: bool = False,
) -> EnergyReport:
    """Energy of one inference run of ``cycles`` cycles.

    ``cycles`` may be fractional when it is an average over samples.
    """
    if cycles < 0:
        raise ConfigurationError("cycles must be nonnegative")
    per_cycle = cycle_components(params, config)
    components = {k: v * cycles for k, v in per_cycle.items()}
    inference = sum(components[k] for k in COMPONENTS)
    read = params.e_mem_read * _scales(params, config)["read"]
    seed = params.e_seed_load if include_seed_load else 0.0
    mcu = params.mcu_energy_per_inference * NJ_PER_UJ
    total = seed + read + inference

    def ratio(x):
        return mcu / x if x > 0 else float("inf")

    ratios = {
        "with_seed_load": ratio(params.e_seed_load + read + inference),
        "read_and_inference": ratio(read + inference),
        "inference_only": ratio(inference),
    }
    return EnergyReport(seed, read, inference, components, float(cycles), ratio(total), ratios)


def tradeoff_curve(
    accuracy_at: Callable[[int], float],
    cycle_grid: Sequence[int],
    params: EnergyParams,
    config: MachineConfig,
) -> list[tuple[int, float, float]]:
    """``(cycles, accuracy, inference energy nJ)`` for each fixed cycle budget."""
    out = []
    for c in cycle_grid:
        e = estimate(params, config, c).inference
        out.append((int(c), float(accuracy_at(int(c))), e))
    return out


def first_one_point(
    accuracy: float,
    cycles_used: Sequence[int],
    params: EnergyParams,
    config: MachineConfig,
) -> tuple[float, float, float]:
    """``(mean cycles, accuracy, mean inference energy nJ)`` for the first-one strategy.

    Each sample is charged for the cycles it actually ran.
    """
    mean_cycles = float(np.mean(cycles_used))
    return mean_cycles, float(accuracy), estimate(params, config, mean_cycles).inference


def reduction_at_accuracy_loss(
    curve: Sequence[tuple[int, float, float]],
    max_loss: float,
    baseline_cycles: int = 255,
) -> tuple[int, float]:
    """Smallest budget whose accuracy is within ``max_loss`` of the baseline.

    Returns ``(cycles, energy_ratio)`` where the ratio is baseline energy over
    the energy at that budget.
    """
    by_cycles = {c: (a, e) for c, a, e in curve}
    if baseline_cycles not in by_cycles:
        raise ConfigurationError(f"curve lacks the {baseline_cycles}-cycle baseline")
    base_acc, base_e = by_cycles[baseline_cycles]
    ok = [c for c, (a, _) in by_cycles.items() if a >= base_acc - max_loss]
    best = min(ok)
    return best, base_e / by_cycles[best][1]
