"""Shared pytest fixtures."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    """A seeded numpy generator; each test gets a fresh stream."""
    return np.random.default_rng(20240611)


@pytest.fixture
def gaussian_pair():
    """The simulated pair N(0, I10) and N(0.3*1, I10)."""
    from sampling import GaussianSource

    d = 10
    return (GaussianSource(mean=np.zeros(d), covariance=np.ones(d), name="D1"),
            GaussianSource(mean=np.full(d, 0.3), covariance=np.ones(d), name="D2"))
