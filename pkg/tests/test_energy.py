from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bayesmachine.energy import (
    COMPONENTS,
    EnergyParams,
    default_params,
    estimate,
    first_one_point,
    reduction_at_accuracy_loss,
    tradeoff_curve,
)
from bayesmachine.errors import ConfigurationError
from bayesmachine.machine import MachineConfig

REF = MachineConfig.scaled()


def test_inference_at_255_cycles():
    r = estimate(default_params(), REF, 255)
    assert r.inference == pytest.approx(2.2, abs=1e-12)
    assert r.components["rng_gen"] == pytest.approx(1.32, abs=1e-12)
    shares = {k: r.components[k] / r.inference for k in COMPONENTS}
    assert shares == pytest.approx({"clock": 0.11, "compute_and_hwires": 0.01, "rng_gen": 0.60, "rng_dist": 0.28})


def test_fractions_sum_to_one():
    assert sum(default_params().fractions.values()) == pytest.approx(1.0)


def test_phase_totals_with_seed_load():
    r = estimate(default_params(), REF, 255, include_seed_load=True)
    assert (r.seed_load, r.memory_read) == (0.38, 0.3)
    assert r.total == pytest.approx(2.88)
    assert r.ratio_vs_mcu == pytest.approx(10_000 / 2.88)
    assert r.ratios["read_and_inference"] == pytest.approx(10_000 / 2.5)


def test_zero_cycles_is_read_only():
    r = estimate(default_params(), REF, 0)
    assert r.inference == 0 and r.total == pytest.approx(0.3)


@given(st.integers(1, 8), st.integers(1, 12), st.floats(0, 1000), st.floats(0, 1000))
def test_monotone_and_additive(rows, cols, c1, c2):
    cfg = MachineConfig(rows, cols, 8)
    lo, hi = sorted((c1, c2))
    a, b = estimate(default_params(), cfg, lo), estimate(default_params(), cfg, hi)
    assert 0 <= a.total <= b.total + 1e-12
    assert sum(b.components.values()) == pytest.approx(b.inference)
    assert b.total == pytest.approx(b.seed_load + b.memory_read + b.inference)


def test_scaling_rules():
    p = default_params()
    small = estimate(p, MachineConfig(2, 3, 8), 255)
    assert small.components["clock"] == pytest.approx(0.242)
    assert small.components["rng_gen"] == pytest.approx(1.32 / 2)
    assert small.components["rng_dist"] == pytest.approx(0.616 / 4)
    assert small.memory_read == pytest.approx(0.3 / 4)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        EnergyParams(e_mem_read=-1)
    with pytest.raises(ConfigurationError):
        default_params().override(fractions={"clock": 1.0})
    with pytest.raises(ConfigurationError):
        estimate(default_params(), REF, -1)


def test_reduction_at_accuracy_loss():
    acc = {10: 0.80, 50: 0.895, 100: 0.90, 255: 0.90}
    curve = tradeoff_curve(acc.get, [10, 50, 100, 255], default_params(), REF)
    c, ratio = reduction_at_accuracy_loss(curve, 0.01)
    assert (c, ratio) == (50, pytest.approx(255 / 50))
    with pytest.raises(ConfigurationError):
        reduction_at_accuracy_loss(curve[:-1], 0.01)


def test_first_one_cheaper_on_separable_data():
    # a winning product near 1.0 fires on the first cycle
    p = default_params()
    cycles, acc, e = first_one_point(1.0, [1, 1, 1, 2], p, REF)
    assert cycles == 1.25 and acc == 1.0
    for budget in range(2, 256):
        assert e < estimate(p, REF, budget).inference
