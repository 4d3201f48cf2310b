from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bayesmachine import experiments, gesture
from bayesmachine.errors import ConfigurationError
from bayesmachine.oracle import exact_posterior


def test_dataset_counts(gesture_traces):
    assert len(gesture_traces) == 1040
    labels = np.array([t.label for t in gesture_traces])
    assert np.bincount(labels).tolist() == [260] * 4


def test_dataset_deterministic():
    a = gesture.generate_dataset(2, 3, rng_seed=5)
    b = gesture.generate_dataset(2, 3, rng_seed=5)
    assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a, b))
    c = gesture.generate_dataset(2, 3, rng_seed=6)
    assert not np.array_equal(a[0].samples, c[0].samples)


def test_split_follows_twenty_reps(gesture_traces):
    train, test = gesture.split_dataset(gesture_traces)
    assert (len(train), len(test)) == (800, 240)
    assert max(t.rep for t in train) == 19 and min(t.rep for t in test) == 20


def test_oracle_accuracy_on_held_out_split(gesture_traces):
    train, test = gesture.split_dataset(gesture_traces)
    model = gesture.train_traces(train)
    table = gesture.discretize(model)
    X, y = gesture.feature_matrix(test)
    pred = [exact_posterior(table, gesture.observe(model, x)).argmax for x in X]
    assert np.mean(np.array(pred) == y) >= 0.85


def test_zero_trace_features():
    tr = gesture.ImuTrace(np.zeros((50, 3)), 100.0, 0, 0)
    assert np.all(gesture.extract_features(tr) == 0)


def test_short_trace_rejected():
    with pytest.raises(ConfigurationError):
        gesture.ImuTrace(np.zeros((1, 3)), 100.0, 0, 0)


def test_x_sine_features():
    t = np.arange(10_000) / 1000.0
    s = np.zeros((len(t), 3))
    s[:, 0] = np.sin(2 * np.pi * 2 * t)
    f = gesture.extract_features(gesture.ImuTrace(s, 1000.0, 0, 0))
    assert f[1] == pytest.approx(1.0, rel=0.02)
    assert f[2] == 0 and f[3] == 0
    assert f[4] == pytest.approx(0.5, rel=0.02)


@given(st.integers(0, 10_000))
def test_feature_homogeneity(seed):
    s = np.random.default_rng(seed).standard_normal((40, 3))
    f1 = gesture.extract_features(gesture.ImuTrace(s, 100.0, 0, 0))
    f2 = gesture.extract_features(gesture.ImuTrace(2 * s, 100.0, 0, 0))
    scale = np.array([2, 2, 2, 2, 4, 4, 4, 2, 2, 2])
    np.testing.assert_allclose(f2, scale * f1, rtol=1e-12)


def _gaussian_data(seed=0, n=400):
    gen = np.random.default_rng(seed)
    means = gen.uniform(-5, 5, (4, 10))
    stds = gen.uniform(0.5, 2, (4, 10))
    y = np.repeat(np.arange(4), n)
    X = means[y] + stds[y] * gen.standard_normal((len(y), 10))
    return X, y, means, stds


def test_mean_recovery():
    X, y, means, stds = _gaussian_data()
    m = gesture.train(X, y, broadening=1.0)
    assert np.all(np.abs(m.means - means) <= 3 * stds / np.sqrt(400))


def test_broadening_scales_every_std():
    X, y, _, _ = _gaussian_data(1)
    a = gesture.train(X, y, broadening=1.0)
    b = gesture.train(X, y, broadening=1.3)
    np.testing.assert_allclose(b.stds, 1.3 * a.stds, rtol=1e-15)


def test_degenerate_class_std_floored():
    X, y, _, _ = _gaussian_data(2, 10)
    X[y == 0, 3] = 1.0
    m = gesture.train(X, y, broadening=1.0)
    assert m.stds[0, 3] == pytest.approx(1e-6 * (m.bin_max[3] - m.bin_min[3]))


def test_table_shape_and_image(gesture_run):
    assert gesture_run.table.shape == (4, 6, 512)
    cfg = gesture_run.image.config
    assert (cfg.n_rows, cfg.n_columns, cfg.entries_per_array) == (4, 6, 512)
    assert sum(len(row) for row in gesture_run.image.arrays) == 24


def test_bin_at_class_mean_is_column_maximum():
    X, y, _, _ = _gaussian_data(3)
    m = gesture.train(X, y)
    table = gesture.discretize(m, (0, 1), 512)
    for c in range(4):
        for j, f in enumerate((0, 1)):
            x = np.zeros(10)
            x[f] = m.means[c, f]
            idx = gesture.observe(m, x, (0, 1), 512).indices[j]
            assert abs(int(np.argmax(table.values[c, j])) - idx) <= 1


def test_observation_clamping():
    X, y, _, _ = _gaussian_data(4)
    m = gesture.train(X, y)
    low = gesture.observe(m, m.bin_min - 100, gesture.DEFAULT_FEATURES)
    high = gesture.observe(m, m.bin_max + 100, gesture.DEFAULT_FEATURES)
    assert set(low.indices) == {0} and set(high.indices) == {511}


def test_model_dict_round_trip():
    X, y, _, _ = _gaussian_data(5)
    m = gesture.train(X, y)
    m2 = gesture.GaussianModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(m.stds, m2.stds)


def test_cycle_budget_prefix_property(gesture_run):
    ev = gesture_run.evaluation
    full = ev.traces[0]
    np.testing.assert_array_equal(full.prefix(50).bits, full.bits[:, :50])
    preds = ev.max_count_predictions(255)
    assert ev.accuracy(preds) == ev.max_count_accuracy(255)


def test_single_cycle_far_below_full_period(gesture_run):
    ev = gesture_run.evaluation
    assert ev.max_count_accuracy(1) < ev.max_count_accuracy(255) - 0.15


def test_optimized_seeds_beat_worst_random(gesture_run, gesture_traces):
    _, test = gesture.split_dataset(gesture_traces)
    obs, y = experiments.observations_for(gesture_run.model, test, gesture.DEFAULT_FEATURES, 512)
    tuples = np.random.default_rng(11).integers(1, 256, (20, 6))
    worst = min(
        gesture.evaluate(gesture_run.image, gesture_run.table, obs, y, s).max_count_accuracy(255)
        for s in tuples
    )
    assert gesture_run.evaluation.max_count_accuracy(255) >= worst
