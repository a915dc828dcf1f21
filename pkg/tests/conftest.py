"""Shared fixtures: one modest collision net reused across modules."""

import pytest

from stlwalk.collision import LegGeometry, sample_dataset, train_mlp


@pytest.fixture(scope="session")
def small_net():
    """Reduced-budget collision net, good enough to separate the clear
    cases the planner and harness tests exercise."""
    X, y = sample_dataset(12000, LegGeometry(), seed=4)
    return train_mlp(X, y, layers=(32, 32), epochs=100, seed=4)
