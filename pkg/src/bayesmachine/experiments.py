"""End-to-end scenarios shared by the CLI and the acceptance suite."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import energy, gesture, seedopt
from .machine import MachineImage, Observation
from .memory import FaultModel
from .oracle import LikelihoodTable, compile_table, dequantize, exact_posterior
from .rng import PERIOD

DEFAULT_CYCLE_GRID = (1, 2, 5, 10, 20, 30, 40, 50, 75, 100, 125, 150, 175, 200, 225, 255)


def random_table(n_rows=4, n_columns=4, entries=8, rng_seed: int = 0) -> LikelihoodTable:
    """Uniform random likelihoods, the artificial test patterns of the small chip."""
    gen = np.random.default_rng(rng_seed)
    return LikelihoodTable(gen.random((n_rows, n_columns, entries)))


def all_observations(image: MachineImage) -> list[Observation]:
    cfg = image.config
    return [Observation(o) for o in itertools.product(range(cfg.entries_per_array), repeat=cfg.n_columns)]


def scatter(image: MachineImage, seeds: Sequence[int], observations=None) -> tuple[np.ndarray, np.ndarray]:
    """Full-period machine output against the exact product of the encoded bytes.

    Returns ``(expected, measured)`` over every (observation, row) pair.
    Expected values use the nominal encoding (v+1)/256.
    """
    if observations is None:
        observations = all_observations(image)
    probes = _probes_for(image, observations)
    counts = seedopt.full_period_counts(seeds, probes)
    expected = np.prod(dequantize(probes), axis=1)
    return expected, counts / PERIOD


def _probes_for(image: MachineImage, observations) -> np.ndarray:
    obj = seedopt.decision_objective(image, observations, np.zeros(len(observations), dtype=int))
    # row-major over rows to match image_probes ordering
    return obj.row_probes.transpose(1, 0, 2).reshape(-1, obj.n_columns)


def optimize_test_chip_seeds(image: MachineImage, restarts: int = 8, rng_seed: int = 0,
                             metric: str = "max_abs_deviation") -> seedopt.SearchResult:
    obj = seedopt.default_objective(image, rng_seed=rng_seed, metric=metric, reference="nominal")
    return seedopt.search_seeds(obj, rng_seed=rng_seed, restarts=restarts)


@dataclass
class GestureRun:
    model: gesture.GaussianModel
    table: LikelihoodTable
    image: MachineImage
    seeds: tuple[int, ...]
    search: seedopt.SearchResult | None
    evaluation: gesture.Evaluation
    n_train: int
    n_test: int


def observations_for(model, traces, selected, n_bins) -> tuple[list[Observation], np.ndarray]:
    X, y = gesture.feature_matrix(traces)
    return [gesture.observe(model, x, selected, n_bins) for x in X], y


def build_gesture_machine(train, broadening=gesture.DEFAULT_BROADENING,
                          selected=gesture.DEFAULT_FEATURES, n_bins=512):
    model = gesture.train_traces(train, broadening)
    table = gesture.discretize(model, selected, n_bins)
    return model, table, compile_table(table)


def optimize_gesture_seeds(image, table, train_obs, restarts=8, rng_seed=0,
                           horizons=(25, 50, 100, 150, PERIOD)) -> seedopt.SearchResult:
    """Seeds whose max-count decisions track the exact-Bayes decisions on training data."""
    targets = [exact_posterior(table, o).argmax for o in train_obs]
    obj = seedopt.decision_objective(image, train_obs, targets, horizons)
    return seedopt.search_seeds(obj, rng_seed=rng_seed, restarts=restarts)


def run_gesture(
    traces,
    seeds: Sequence[int] | None = None,
    broadening: float = gesture.DEFAULT_BROADENING,
    selected=gesture.DEFAULT_FEATURES,
    n_bins: int = 512,
    restarts: int = 8,
    rng_seed: int = 0,
    cycles: int = PERIOD,
    fm: FaultModel | None = None,
) -> GestureRun:
    """Train on the first 20 repetitions per (subject, class), evaluate on the rest."""
    train, test = gesture.split_dataset(traces)
    model, table, image = build_gesture_machine(train, broadening, selected, n_bins)
    search = None
    if seeds is None:
        train_obs, _ = observations_for(model, train, selected, n_bins)
        search = optimize_gesture_seeds(image, table, train_obs, restarts, rng_seed)
        seeds = search.seeds
    test_obs, y = observations_for(model, test, selected, n_bins)
    ev = gesture.evaluate(image, table, test_obs, y, seeds, cycles, fm)
    return GestureRun(model, table, image, tuple(int(s) for s in seeds), search, ev, len(train), len(test))


def gesture_report(run: GestureRun, params: energy.EnergyParams | None = None,
                   cycle_grid: Sequence[int] = DEFAULT_CYCLE_GRID) -> tuple[dict, list]:
    """Summary dict plus the accuracy/energy curve rows for both strategies."""
    params = params or energy.default_params()
    ev = run.evaluation
    cfg = run.image.config
    grid = [c for c in cycle_grid if c <= ev.traces[0].cycles_run]
    curve = energy.tradeoff_curve(ev.max_count_accuracy, grid, params, cfg)
    fo = ev.first_one_summary()
    fo_cycles, fo_acc, fo_energy = energy.first_one_point(fo["accuracy"], fo["cycles_used"], params, cfg)
    full = max(grid)
    preds = ev.max_count_predictions(full)
    summary = {
        "n_train": run.n_train,
        "n_test": run.n_test,
        "seeds": [f"0x{s:02X}" for s in run.seeds],
        "seed_search": None if run.search is None else {
            "method": run.search.method,
            "score": run.search.score,
            "evaluations": run.search.evaluations,
        },
        "oracle_accuracy": ev.oracle_accuracy,
        "oracle_confusion": ev.confusion(ev.oracle_predictions).tolist(),
        "max_count": {
            "cycles": full,
            "accuracy": ev.accuracy(preds),
            "confusion": ev.confusion(preds).tolist(),
        },
        "first_one": {
            "accuracy": fo_acc,
            "mean_cycles": fo_cycles,
            "mean_inference_energy_nJ": fo_energy,
            "low_confidence": fo["low_confidence"],
            "confusion": fo["confusion"].tolist(),
        },
        "energy_reduction": {},
        "energy_model": energy.MODEL_NOTE,
    }
    if full == PERIOD:
        for loss in (0.01, 0.02):
            c, ratio = energy.reduction_at_accuracy_loss(curve, loss, PERIOD)
            summary["energy_reduction"][f"loss_{loss:.2f}"] = {"cycles": c, "ratio": ratio}
    rows = [("max_count", c, a, e) for c, a, e in curve]
    rows.append(("first_one", fo_cycles, fo_acc, fo_energy))
    return summary, rows
