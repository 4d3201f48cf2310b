"""Gesture recognition on a synthetic three-axis accelerometer dataset.

Pipeline: generate traces, extract ten features per trace, fit one Gaussian
per (class, feature), broaden it, discretize the selected features onto the
machine's input range, compile, and classify on the simulated machine.

Feature layout (index: quantity):
    0  mean of |a|
    1-3  max |a_x|, max |a_y|, max |a_z|
    4-6  variance of a_x, a_y, a_z
    7  mean of |jerk|
    8-9  max |jerk_x|, max |jerk_y|
Jerk is the first difference of acceleration times the sample rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .machine import (
    Decision,
    MachineImage,
    Observation,
    decide_max_count,
    first_one,
    run_inference,
)
from .memory import FaultModel
from .oracle import LikelihoodTable, exact_posterior
from .trace import InferenceTrace

N_CLASSES = 4
N_FEATURES = 10
FEATURE_NAMES = tuple(f"F{i}" for i in range(N_FEATURES))
DEFAULT_FEATURES = (1, 4, 5, 6, 7, 9)
DEFAULT_BROADENING = 1.3
SAMPLE_RATE = 100.0
N_TRAIN_PER_PAIR = 20


def _motifs(ax: float, ay: float, az: float, f: float) -> tuple:
    # per axis: (amplitude m/s^2, frequency Hz) sinusoids; axes x, y, z
    return (
        ((ax, f), (0.3 * ax, 2.3 * f)),
        ((ay, 1.1 * f), (0.3 * ay, 2.1 * f)),
        ((az, 0.9 * f), (0.3 * az, 1.9 * f), (0.15 * az, 3.1 * f)),
    )


# classes differ by a 12 % amplitude emphasis on one axis and by tempo
CLASS_MOTIFS = (
    _motifs(3.36, 3.00, 2.82, 1.0),
    _motifs(3.00, 3.36, 3.00, 1.1),
    _motifs(2.82, 3.00, 3.36, 0.9 + 1 / 30),
    _motifs(3.18, 3.18, 3.18, 1.2),
)


@dataclass(frozen=True)
class ImuTrace:
    samples: np.ndarray = field(repr=False)
    sample_rate: float
    label: int
    subject: int
    rep: int = 0

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 3 or s.shape[0] < 2:
            raise ConfigurationError("a trace needs at least two 3-axis samples")
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("trace samples must be finite")
        if self.sample_rate <= 0:
            raise ConfigurationError("sample_rate must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class GeneratorParams:
    noise_sigma: float = 0.1
    subject_spread: float = 0.02
    rep_spread: float = 0.02
    min_duration: float = 1.3
    max_duration: float = 3.0
    sample_rate: float = SAMPLE_RATE


def generate_dataset(
    n_subjects: int = 10,
    reps_per_class: int = 26,
    rng_seed: int = 0,
    params: GeneratorParams | None = None,
) -> list[ImuTrace]:
    """Synthetic labelled traces, ``n_subjects * 4 * reps_per_class`` of them.

    Each class is a fixed set of sinusoidal motifs per axis. Subjects scale
    each (class, axis) amplitude by their own factor; repetitions add
    amplitude jitter, random phases, random duration and white noise.
    """
    if n_subjects < 1 or reps_per_class < 1:
        raise ConfigurationError("n_subjects and reps_per_class must be at least 1")
    p = params or GeneratorParams()
    gen = np.random.default_rng(rng_seed)
    subject_gain = 1.0 + p.subject_spread * gen.standard_normal((n_subjects, N_CLASSES, 3))
    traces = []
    for subject in range(n_subjects):
        for label in range(N_CLASSES):
            for rep in range(reps_per_class):
                duration = gen.uniform(p.min_duration, p.max_duration)
                t = np.arange(int(round(duration * p.sample_rate))) / p.sample_rate
                acc = np.zeros((len(t), 3))
                for axis, motifs in enumerate(CLASS_MOTIFS[label]):
                    gain = subject_gain[subject, label, axis] * (1.0 + p.rep_spread * gen.standard_normal())
                    for amp, freq in motifs:
                        phase = gen.uniform(0, 2 * np.pi)
                        acc[:, axis] += gain * amp * np.sin(2 * np.pi * freq * t + phase)
                acc += p.noise_sigma * gen.standard_normal(acc.shape)
                traces.append(ImuTrace(acc, p.sample_rate, label, subject, rep))
    return traces


def extract_features(trace: ImuTrace) -> np.ndarray:
    a = trace.samples
    jerk = np.diff(a, axis=0) * trace.sample_rate
    absa = np.abs(a)
    absj = np.abs(jerk)
    return np.array([
        np.linalg.norm(a, axis=1).mean(),
        *absa.max(axis=0),
        *a.var(axis=0),
        np.linalg.norm(jerk, axis=1).mean(),
        absj[:, 0].max(),
        absj[:, 1].max(),
    ])


def feature_matrix(traces: Sequence[ImuTrace]) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([extract_features(t) for t in traces])
    y = np.array([t.label for t in traces], dtype=np.int64)
    return X, y


def split_dataset(
    traces: Sequence[ImuTrace], n_train: int = N_TRAIN_PER_PAIR
) -> tuple[list[ImuTrace], list[ImuTrace]]:
    """First ``n_train`` repetitions of each (subject, class) pair train; the rest test."""
    train, test = [], []
    by_pair: dict[tuple[int, int], list[ImuTrace]] = {}
    for t in traces:
        by_pair.setdefault((t.subject, t.label), []).append(t)
    for key in sorted(by_pair):
        reps = sorted(by_pair[key], key=lambda t: t.rep)
        train.extend(reps[:n_train])
        test.extend(reps[n_train:])
    return train, test


@dataclass(frozen=True)
class GaussianModel:
    means: np.ndarray  # (classes, features)
    stds: np.ndarray  # broadened
    bin_min: np.ndarray  # (features,)
    bin_max: np.ndarray
    broadening: float = DEFAULT_BROADENING

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    def to_dict(self) -> dict:
        return {
            "broadening": self.broadening,
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "bin_min": self.bin_min.tolist(),
            "bin_max": self.bin_max.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianModel":
        return cls(
            np.array(d["means"], dtype=float),
            np.array(d["stds"], dtype=float),
            np.array(d["bin_min"], dtype=float),
            np.array(d["bin_max"], dtype=float),
            float(d["broadening"]),
        )


def train(X: np.ndarray, y: np.ndarray, broadening: float = DEFAULT_BROADENING, margin: float = 0.05) -> GaussianModel:
    """Fit one Gaussian per (class, feature) and widen its std by ``broadening``.

    Feature ranges come from the training data, padded by ``margin`` of the
    span on both sides.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if broadening <= 0:
        raise ConfigurationError("broadening must be positive")
    classes = np.unique(y)
    if not np.array_equal(classes, np.arange(len(classes))):
        raise ConfigurationError("labels must be 0..n_classes-1 with every class present")
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    pad = np.where(span > 0, margin * span, np.maximum(np.abs(lo) * margin, 1.0))
    bin_min, bin_max = lo - pad, hi + pad
    means, stds = [], []
    for c in classes:
        Xc = X[y == c]
        if len(Xc) < 2:
            raise ConfigurationError(f"class {c} needs at least two training samples")
        means.append(Xc.mean(axis=0))
        stds.append(Xc.std(axis=0, ddof=1))
    stds = np.maximum(np.array(stds), 1e-6 * (bin_max - bin_min))
    return GaussianModel(np.array(means), stds * broadening, bin_min, bin_max, float(broadening))


def train_traces(traces: Sequence[ImuTrace], broadening: float = DEFAULT_BROADENING) -> GaussianModel:
    return train(*feature_matrix(traces), broadening=broadening)


def _check_selection(selected) -> list[int]:
    selected = [int(f) for f in selected]
    if not selected:
        raise ConfigurationError("at least one feature must be selected")
    if any(not 0 <= f < N_FEATURES for f in selected):
        raise ConfigurationError("feature index out of range")
    return selected


def bin_centers(model: GaussianModel, feature: int, n_bins: int) -> np.ndarray:
    width = (model.bin_max[feature] - model.bin_min[feature]) / n_bins
    return model.bin_min[feature] + (np.arange(n_bins) + 0.5) * width


def discretize(
    model: GaussianModel, selected_features=DEFAULT_FEATURES, n_bins: int = 512
) -> LikelihoodTable:
    """Gaussian pdf at each bin center: table ``(classes, selected, n_bins)``."""
    selected = _check_selection(selected_features)
    if n_bins < 1:
        raise ConfigurationError("n_bins must be positive")
    values = np.empty((model.n_classes, len(selected), n_bins))
    for j, f in enumerate(selected):
        x = bin_centers(model, f, n_bins)
        mu = model.means[:, f][:, None]
        sd = model.stds[:, f][:, None]
        values[:, j, :] = np.exp(-0.5 * ((x[None, :] - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
    return LikelihoodTable(values)


def observe(
    model: GaussianModel, features: np.ndarray, selected_features=DEFAULT_FEATURES, n_bins: int = 512
) -> Observation:
    """Map a feature vector to bin indices; out-of-range values clamp to the edge bins."""
    selected = _check_selection(selected_features)
    f = np.asarray(features, dtype=float)[selected]
    lo, hi = model.bin_min[selected], model.bin_max[selected]
    idx = np.floor((f - lo) / (hi - lo) * n_bins)
    return Observation(tuple(int(i) for i in np.clip(idx, 0, n_bins - 1)))


@dataclass
class Evaluation:
    labels: np.ndarray
    traces: list[InferenceTrace]
    oracle_predictions: np.ndarray
    n_classes: int

    def max_count_predictions(self, cycles: int) -> np.ndarray:
        return np.array([decide_max_count(t.prefix(cycles)).row for t in self.traces])

    def first_one_decisions(self, max_cycles: int | None = None) -> list[Decision]:
        return [first_one(t if max_cycles is None else t.prefix(max_cycles)) for t in self.traces]

    def accuracy(self, predictions) -> float:
        return float(np.mean(np.asarray(predictions) == self.labels))

    def confusion(self, predictions) -> np.ndarray:
        m = np.zeros((self.n_classes, self.n_classes), dtype=np.int64)
        np.add.at(m, (self.labels, np.asarray(predictions)), 1)
        return m

    @property
    def oracle_accuracy(self) -> float:
        return self.accuracy(self.oracle_predictions)

    def max_count_accuracy(self, cycles: int) -> float:
        return self.accuracy(self.max_count_predictions(cycles))

    def first_one_summary(self, max_cycles: int | None = None) -> dict:
        ds = self.first_one_decisions(max_cycles)
        preds = np.array([d.row for d in ds])
        used = np.array([d.cycles_used for d in ds])
        return {
            "accuracy": self.accuracy(preds),
            "mean_cycles": float(used.mean()),
            "cycles_used": used,
            "low_confidence": int(sum(d.low_confidence for d in ds)),
            "confusion": self.confusion(preds),
        }


def evaluate(
    image: MachineImage,
    table: LikelihoodTable,
    observations: Sequence[Observation],
    labels: Sequence[int],
    seeds: Sequence[int],
    cycles: int = 255,
    fm: FaultModel | None = None,
) -> Evaluation:
    """Run every test observation once for ``cycles`` cycles and the oracle alongside.

    Shorter cycle budgets and the first-one strategy are read off prefixes of
    the same traces.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(observations) == 0 or len(observations) != len(labels):
        raise ConfigurationError("need one label per observation and at least one sample")
    traces = [run_inference(image, o, seeds, cycles, fm) for o in observations]
    oracle = np.array([exact_posterior(table, o).argmax for o in observations])
    return Evaluation(labels, traces, oracle, image.config.n_rows)
