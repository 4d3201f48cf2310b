"""LFSR seed selection.

All columns run the same polynomial, so each column's stream over a full
period is a cyclic shift of one fixed orbit. Full-period AND counts then
depend only on the relative shifts between columns. That lets one column's
255 candidate seeds be scored at once as a circular cross-correlation,
computed here with an FFT.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as lfsr
from .errors import ConfigurationError
from .machine import MachineImage

PERIOD = lfsr.PERIOD
METRICS = ("max_abs_deviation", "rms_deviation")
REFERENCES = ("realized", "nominal")
_CHUNK = 4096


@dataclass(frozen=True)
class SeedObjective:
    """Probe byte tuples (one byte per LFSR column) and an aggregate metric.

    ``reference`` picks what counts are compared against: ``"realized"`` uses
    each column's exact single-stream frequency ``min(v+1, 255)/255``;
    ``"nominal"`` uses the encoded probability ``(v+1)/256``.

    ``horizons`` lists the cycle counts at which the running frequency is
    compared with the reference; the default is the full period only. With
    several horizons the score is the worst one.
    """

    probes: np.ndarray = field(repr=False)
    metric: str = "max_abs_deviation"
    reference: str = "realized"
    horizons: tuple[int, ...] = (PERIOD,)

    def __post_init__(self):
        probes = np.array(self.probes, dtype=np.int64)
        if probes.ndim != 2 or probes.shape[0] == 0:
            raise ConfigurationError("probe set must be a non-empty (n_probes, n_columns) array")
        if np.any(probes < 0) or np.any(probes > 255):
            raise ConfigurationError("probe bytes must lie in [0, 255]")
        if self.metric not in METRICS:
            raise ConfigurationError(f"metric must be one of {METRICS}")
        if self.reference not in REFERENCES:
            raise ConfigurationError(f"reference must be one of {REFERENCES}")
        horizons = tuple(sorted({int(h) for h in self.horizons}))
        if not horizons or horizons[0] < 1 or horizons[-1] > PERIOD:
            raise ConfigurationError(f"horizons must lie in [1, {PERIOD}]")
        probes.setflags(write=False)
        object.__setattr__(self, "probes", probes)
        object.__setattr__(self, "horizons", horizons)

    @property
    def n_columns(self) -> int:
        return self.probes.shape[1]

    def ideal(self) -> np.ndarray:
        """Expected probability of each probe if the columns were independent."""
        if self.reference == "nominal":
            return np.prod((self.probes + 1) / 256, axis=1)
        return np.prod(np.minimum(self.probes + 1, PERIOD) / PERIOD, axis=1)

    def aggregate(self, deviations: np.ndarray, axis=-1) -> np.ndarray:
        d = np.abs(deviations)
        if self.metric == "max_abs_deviation":
            return d.max(axis=axis)
        return np.sqrt(np.mean(d**2, axis=axis))

    def score(self, counts: np.ndarray) -> np.ndarray:
        """Scores from running counts ``(horizons, probes, candidates)``."""
        h = np.asarray(self.horizons)[:, None, None]
        dev = counts / h - self.ideal()[None, :, None]
        return self.aggregate(dev, axis=1).max(axis=0)


@dataclass(frozen=True)
class DecisionObjective:
    """Fraction of observations whose max-count decision misses a target row.

    ``row_probes[i, r]`` holds the bytes row ``r`` presents for observation
    ``i``; ``targets[i]`` is the row the machine should pick, typically the
    exact-Bayes argmax. The disagreement rate is averaged over ``horizons``,
    so seeds are judged on the whole cycle-budget curve rather than only on
    the full period. A small RMS-deviation term breaks ties between seeds
    with equal disagreement.
    """

    row_probes: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    horizons: tuple[int, ...] = (25, 50, 100, 150, PERIOD)
    tie_weight: float = 1e-3

    def __post_init__(self):
        rp = np.array(self.row_probes, dtype=np.int64)
        t = np.array(self.targets, dtype=np.int64)
        if rp.ndim != 3 or rp.shape[0] == 0 or t.shape != (rp.shape[0],):
            raise ConfigurationError("row_probes must be (n_obs, n_rows, n_columns) with one target each")
        if np.any(rp < 0) or np.any(rp > 255) or np.any(t < 0) or np.any(t >= rp.shape[1]):
            raise ConfigurationError("probe bytes or targets out of range")
        horizons = tuple(sorted({int(h) for h in self.horizons}))
        if not horizons or horizons[0] < 1 or horizons[-1] > PERIOD:
            raise ConfigurationError(f"horizons must lie in [1, {PERIOD}]")
        rp.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "row_probes", rp)
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "horizons", horizons)

    @property
    def probes(self) -> np.ndarray:
        return self.row_probes.reshape(-1, self.row_probes.shape[2])

    @property
    def n_columns(self) -> int:
        return self.row_probes.shape[2]

    def score(self, counts: np.ndarray) -> np.ndarray:
        n_h, _, k = counts.shape
        n_obs, n_rows, _ = self.row_probes.shape
        decided = counts.reshape(n_h, n_obs, n_rows, k).argmax(axis=2)
        miss = (decided != self.targets[None, :, None]).mean(axis=(0, 1))
        ideal = np.prod(np.minimum(self.probes + 1, PERIOD) / PERIOD, axis=1)
        dev = counts[-1] / self.horizons[-1] - ideal[:, None]
        return miss + self.tie_weight * np.sqrt(np.mean(dev**2, axis=0))


@dataclass(frozen=True)
class SearchResult:
    seeds: tuple[int, ...]
    score: float
    evaluations: int
    method: str
    initial_scores: tuple[float, ...] = ()


def _streams(seeds: Sequence[int]) -> np.ndarray:
    return np.stack([lfsr.lfsr_sequence(s, PERIOD) for s in seeds])


def full_period_counts(seeds: Sequence[int], probes: np.ndarray) -> np.ndarray:
    """Exact 255-cycle AND counts for every probe under ``seeds`` (direct simulation)."""
    probes = np.asarray(probes, dtype=np.int64)
    seeds = lfsr.seed_load(seeds, probes.shape[1])
    streams = _streams(seeds)
    out = np.empty(len(probes), dtype=np.int64)
    for lo in range(0, len(probes), _CHUNK):
        p = probes[lo:lo + _CHUNK]
        bits = (streams[None, :, :] <= p[:, :, None] + 1).all(axis=1)
        out[lo:lo + _CHUNK] = bits.sum(axis=1)
    return out


def prefix_counts(seeds: Sequence[int], probes: np.ndarray, horizons: Sequence[int]) -> np.ndarray:
    """AND counts after each horizon, ``(len(horizons), n_probes)``."""
    probes = np.asarray(probes, dtype=np.int64)
    seeds = lfsr.seed_load(seeds, probes.shape[1])
    streams = _streams(seeds)
    h = np.asarray(horizons) - 1
    out = np.empty((len(h), len(probes)), dtype=np.int64)
    for lo in range(0, len(probes), _CHUNK):
        p = probes[lo:lo + _CHUNK]
        bits = (streams[None, :, :] <= p[:, :, None] + 1).all(axis=1)
        out[:, lo:lo + _CHUNK] = np.cumsum(bits, axis=1)[:, h].T
    return out


def evaluate_seeds(seeds: Sequence[int], obj) -> float:
    """Score one seed tuple.

    For a :class:`SeedObjective` this aggregates |running frequency -
    reference product| over the probes; with the default single full-period
    horizon the counts are exact full-period AND counts.
    """
    counts = prefix_counts(seeds, obj.probes, obj.horizons)
    return float(obj.score(counts[:, :, None])[0])


def _threshold_spectra() -> np.ndarray:
    # row t: FFT of the indicator orbit[y] <= t over one period
    states = lfsr.orbit()
    ind = states[None, :] <= np.arange(257)[:, None]
    return np.fft.rfft(ind.astype(float), axis=1)


_SPECTRA = None


def sweep_column(seeds: Sequence[int], column: int, obj) -> tuple[np.ndarray, np.ndarray]:
    """Score all 255 seeds for ``column`` with the other columns held fixed.

    Returns ``(candidate_seeds, scores)``, both of length 255.
    """
    global _SPECTRA
    if _SPECTRA is None:
        _SPECTRA = _threshold_spectra()
    seeds = lfsr.seed_load(seeds, obj.n_columns)
    streams = _streams(seeds)
    others = [j for j in range(obj.n_columns) if j != column]
    probes = obj.probes
    counts = np.empty((len(obj.horizons), len(probes), PERIOD))
    for hi, n in enumerate(obj.horizons):
        for lo in range(0, len(probes), _CHUNK):
            p = probes[lo:lo + _CHUNK]
            partial = np.zeros((len(p), PERIOD), dtype=bool)
            partial[:, :n] = True
            for j in others:
                partial[:, :n] &= streams[j][None, :n] <= p[:, j, None] + 1
            # truncating one factor keeps the correlation circular in the other
            a = np.fft.rfft(partial.astype(float), axis=1)
            b = _SPECTRA[p[:, column] + 1]
            counts[hi, lo:lo + _CHUNK] = np.fft.irfft(np.conj(a) * b, n=PERIOD, axis=1)
    scores = obj.score(np.rint(counts))
    # offset x means the column reads orbit[(x + c) % 255] at cycle c + 1,
    # i.e. its seed sits one step before orbit[x]
    candidates = lfsr.orbit()[(np.arange(PERIOD) - 1) % PERIOD]
    return candidates, scores


def random_seed_tuples(n_columns: int, n_tuples: int, rng_seed: int = 0) -> np.ndarray:
    gen = np.random.default_rng(rng_seed)
    return gen.integers(1, 256, size=(n_tuples, n_columns))


def random_baseline(obj, n_tuples: int = 100, rng_seed: int = 0) -> np.ndarray:
    """Scores of ``n_tuples`` uniformly random seed tuples."""
    tuples = random_seed_tuples(obj.n_columns, n_tuples, rng_seed)
    return np.array([evaluate_seeds(t, obj) for t in tuples])


def search_seeds(
    obj,
    n_columns: int | None = None,
    budget: int | None = None,
    rng_seed: int = 0,
    restarts: int = 8,
) -> SearchResult:
    """Find a seed tuple with low deviation score.

    Exhaustive when ``255 ** n_columns <= budget``; otherwise coordinate
    descent (full 255-seed sweep of one column at a time until a pass brings
    no improvement) from ``restarts`` random starting tuples. ``budget`` caps
    the number of tuple evaluations; ``None`` means no cap.
    """
    n_columns = obj.n_columns if n_columns is None else n_columns
    if n_columns != obj.n_columns:
        raise ConfigurationError(f"objective has {obj.n_columns} columns, not {n_columns}")
    if budget is not None and budget < n_columns * (PERIOD - 1):
        raise ConfigurationError(f"budget must be at least {n_columns * (PERIOD - 1)}")
    if restarts < 1:
        raise ConfigurationError("restarts must be at least 1")
    gen = np.random.default_rng(rng_seed)

    first = tuple(int(s) for s in gen.integers(1, 256, size=n_columns))
    first_score = evaluate_seeds(first, obj)
    if first_score == 0.0:
        return SearchResult(first, 0.0, 1, "trivial", (0.0,))

    if budget is not None and PERIOD**n_columns <= budget:
        return _exhaustive(obj, n_columns)
    return _coordinate_descent(obj, n_columns, budget, gen, restarts, first, first_score)


def _exhaustive(obj: SeedObjective, n_columns: int) -> SearchResult:
    best_seeds, best_score, evals = None, np.inf, 0
    last = n_columns - 1
    for head in itertools.product(range(1, 256), repeat=last):
        seeds = list(head) + [1]
        cands, scores = sweep_column(seeds, last, obj)
        evals += PERIOD
        i = int(np.argmin(scores))
        if scores[i] < best_score:
            best_score = float(scores[i])
            best_seeds = tuple(head) + (int(cands[i]),)
    return SearchResult(best_seeds, best_score, evals, "exhaustive")


def _coordinate_descent(obj, n_columns, budget, gen, restarts, first, first_score) -> SearchResult:
    best_seeds, best_score = first, first_score
    evals = 1
    inits = []
    for r in range(restarts):
        if r == 0:
            seeds, score = list(first), first_score
        else:
            seeds = [int(s) for s in gen.integers(1, 256, size=n_columns)]
            score = evaluate_seeds(seeds, obj)
            evals += 1
        inits.append(score)
        improved = True
        while improved:
            improved = False
            for k in range(n_columns):
                if budget is not None and evals + PERIOD > budget:
                    break
                cands, scores = sweep_column(seeds, k, obj)
                evals += PERIOD
                i = int(np.argmin(scores))
                if scores[i] < score - 1e-12:
                    seeds[k], score = int(cands[i]), float(scores[i])
                    improved = True
        if score < best_score:
            best_seeds, best_score = tuple(seeds), score
        if budget is not None and evals + PERIOD > budget:
            break
    return SearchResult(tuple(best_seeds), best_score, evals, "coordinate_descent", tuple(inits))


def image_probes(
    image: MachineImage,
    max_observations: int = 4096,
    rng_seed: int = 0,
) -> np.ndarray:
    """Byte tuples the image actually presents to its LFSR columns.

    All observations are enumerated when there are at most
    ``max_observations`` of them; otherwise that many are sampled.
    """
    cfg = image.config
    b = image.byte_tensor().astype(np.int64)
    n_obs = cfg.entries_per_array**cfg.n_columns
    if n_obs <= max_observations:
        obs = np.array(list(itertools.product(range(cfg.entries_per_array), repeat=cfg.n_columns)))
    else:
        gen = np.random.default_rng(rng_seed)
        obs = gen.integers(0, cfg.entries_per_array, size=(max_observations, cfg.n_columns))
    cols = np.arange(cfg.n_columns)
    probes = [b[r, cols, obs] for r in range(cfg.n_rows)]
    if image.prior is not None:
        probes = [np.column_stack([p, np.full(len(p), image.prior[r])]) for r, p in enumerate(probes)]
    return np.concatenate(probes)


def default_objective(
    image: MachineImage,
    n_random: int = 64,
    rng_seed: int = 0,
    metric: str = "max_abs_deviation",
    max_observations: int = 4096,
    reference: str = "realized",
    horizons: Sequence[int] = (PERIOD,),
) -> SeedObjective:
    """Image byte tuples plus ``n_random`` uniformly random byte tuples."""
    probes = image_probes(image, max_observations, rng_seed)
    gen = np.random.default_rng([rng_seed, 1])
    extra = gen.integers(0, 256, size=(n_random, probes.shape[1]))
    return SeedObjective(np.concatenate([probes, extra]), metric, reference, tuple(horizons))


def decision_objective(
    image: MachineImage,
    observations,
    targets: Sequence[int],
    horizons: Sequence[int] = (25, 50, 100, 150, PERIOD),
) -> DecisionObjective:
    """Decision objective over the byte tuples ``image`` presents for ``observations``."""
    cfg = image.config
    b = image.byte_tensor().astype(np.int64)
    cols = np.arange(cfg.n_columns)
    idx = np.array([o.indices if hasattr(o, "indices") else tuple(o) for o in observations])
    rows = np.stack([b[r, cols, idx] for r in range(cfg.n_rows)], axis=1)
    if image.prior is not None:
        prior = np.broadcast_to(np.array(image.prior)[None, :, None], (len(idx), cfg.n_rows, 1))
        rows = np.concatenate([rows, prior], axis=2)
    return DecisionObjective(rows, np.asarray(targets), tuple(horizons))
