from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bayesmachine.errors import BoundsError, ConfigurationError, InvalidStateError
from bayesmachine.memory import (
    FaultModel,
    Level,
    LikelihoodArray,
    differential_error_rate,
    form,
    inject_faults,
    program_byte,
    program_bytes,
    read_byte,
    single_device_error_rate,
)
from bayesmachine.trace import InferenceTrace


def _levels(array, entry):
    return [(c.left.level, c.right.level) for c in (array.cell(entry, b) for b in range(8))]


ONE = (Level.LRS, Level.HRS)
ZERO = (Level.HRS, Level.LRS)


def test_program_all_ones_and_all_zeros():
    a = program_byte(LikelihoodArray.blank(4), 1, 0xFF)
    assert _levels(a, 1) == [ONE] * 8
    a = program_byte(a, 2, 0x00)
    assert _levels(a, 2) == [ZERO] * 8


def test_program_bit_pattern_msb_first():
    a = program_byte(LikelihoodArray.blank(1), 0, 0xA5)
    expected = [ONE if b == "1" else ZERO for b in "10100101"]
    assert _levels(a, 0) == expected
    assert [a.cell(0, b).bit for b in range(8)] == [1, 0, 1, 0, 0, 1, 0, 1]


def test_program_errors():
    with pytest.raises(InvalidStateError):
        program_byte(LikelihoodArray.blank(8, formed=False), 0, 1)
    with pytest.raises(BoundsError):
        program_byte(LikelihoodArray.blank(8), 8, 1)
    with pytest.raises(BoundsError):
        read_byte(LikelihoodArray.blank(8), -1)


def test_programming_does_not_mutate():
    a = LikelihoodArray.blank(2)
    b = program_byte(a, 0, 0x80)
    assert a.programmed[0] == 0 and b.programmed[0] == 0x80


def test_noiseless_readback():
    a = program_byte(LikelihoodArray.blank(2), 0, 0x80)
    assert read_byte(a, 0, FaultModel.noiseless()) == 0x80
    assert read_byte(a, 0) == 0x80


@given(st.lists(st.integers(0, 255), min_size=1, max_size=32))
def test_round_trip_every_entry(values):
    a = program_bytes(LikelihoodArray.blank(len(values)), values)
    fm = FaultModel.noiseless()
    assert [read_byte(a, e, fm) for e in range(len(values))] == values


def test_unformed_reads_are_reproducible_and_vary():
    a = LikelihoodArray.blank(16, formed=False)
    fm = FaultModel(rng_seed=3)
    first = [read_byte(a, e, fm) for e in range(16)]
    assert first == [read_byte(a, e, fm) for e in range(16)]
    assert len(set(first)) > 4
    assert form(a).formed


def test_default_model_reads_correctly():
    values = np.arange(0, 256, 3)
    a = program_bytes(LikelihoodArray.blank(len(values)), values)
    fm = FaultModel(rng_seed=11)
    assert [read_byte(a, e, fm) for e in range(len(values))] == values.tolist()


def test_differential_beats_single_device_on_default_model():
    fm = FaultModel()
    assert differential_error_rate(fm, 100_000, 1) <= single_device_error_rate(fm, 100_000, 1)


@given(st.floats(0.05, 1.5), st.floats(1.5, 20.0))
def test_differential_advantage_with_equal_spreads(sigma, ratio):
    fm = FaultModel(lrs_median=1e4, hrs_median=1e4 * ratio, lrs_sigma=sigma, hrs_sigma=sigma)
    d = differential_error_rate(fm, 100_000, 5)
    s = single_device_error_rate(fm, 100_000, 5)
    assert d <= s + 1e-12


def test_strongly_unequal_spreads_can_favor_one_device():
    # a tight HRS distribution lets a single threshold beat the pairwise comparison
    fm = FaultModel(lrs_median=1e4, hrs_median=2e4, lrs_sigma=1.5, hrs_sigma=0.5)
    assert differential_error_rate(fm, 100_000, 5) > single_device_error_rate(fm, 100_000, 5)


def test_wide_spread_gives_visible_error_rates():
    fm = FaultModel(lrs_sigma=1.2, hrs_sigma=1.2)
    d = differential_error_rate(fm, 100_000, 0)
    s = single_device_error_rate(fm, 100_000, 0)
    assert 0 < d < s


def test_fault_model_validation():
    with pytest.raises(ConfigurationError):
        FaultModel(lrs_sigma=-1)
    with pytest.raises(ConfigurationError):
        FaultModel(transient_flip_prob=1.5)


def _trace(seed=0, rows=4, cycles=255):
    return InferenceTrace(np.random.default_rng(seed).integers(0, 2, (rows, cycles)))


def test_inject_zero_is_identity():
    t = _trace()
    np.testing.assert_array_equal(inject_faults(t, 0).bits, t.bits)


def test_inject_bounds():
    t = _trace(rows=2, cycles=3)
    with pytest.raises(BoundsError):
        inject_faults(t, 7)
    assert np.sum(inject_faults(t, 6).bits != t.bits) == 6


@given(st.integers(0, 50), st.integers(0, 10_000))
def test_fault_bound(k, seed):
    t = _trace(seed)
    f = inject_faults(t, k, seed)
    assert np.sum(f.bits != t.bits) == k
    assert np.abs(f.counts.astype(int) - t.counts.astype(int)).sum() <= k


def test_large_margin_survives_five_flips():
    bits = np.zeros((4, 255), dtype=np.uint8)
    bits[2, :40] = 1
    bits[0, :20] = 1
    t = InferenceTrace(bits)
    for seed in range(50):
        assert int(np.argmax(inject_faults(t, 5, seed).counts)) == 2
