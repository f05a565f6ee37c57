"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from survitr.data import Dataset


def make_dataset(y1, y2, d1, d2, x, a, K=None) -> Dataset:
    return Dataset(y1=y1, y2=y2, delta1=d1, delta2=d2, x=np.asarray(x, dtype=float), a=a, K=K)


def uncensored_dataset(rng, n=200, p=2, beta=(1.0, -0.5), gamma=1.0, arms=3):
    """All-uncensored lognormal data with the same linear mean for both outcomes."""
    x = rng.uniform(-2.0, 2.0, size=(n, p))
    mean = x @ np.asarray(beta, dtype=float)
    logt1 = mean + gamma * rng.standard_normal(n)
    logt2 = mean + gamma * rng.standard_normal(n)
    a = rng.integers(0, arms, size=n)
    return make_dataset(
        np.exp(logt1), np.exp(logt2), np.ones(n, dtype=int), np.ones(n, dtype=int), x, a
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
