from __future__ import annotations

from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


import pytest  # noqa: E402

from bayesmachine import experiments, gesture  # noqa: E402

GESTURE_DATASET_SEED = 0


@pytest.fixture(scope="session")
def gesture_traces():
    return gesture.generate_dataset(rng_seed=GESTURE_DATASET_SEED)


@pytest.fixture(scope="session")
def gesture_run(gesture_traces):
    """Full 6x4x512 pipeline with optimized seeds; shared because it takes ~20 s."""
    return experiments.run_gesture(gesture_traces, restarts=8, rng_seed=0)
