"""Test configuration and fixtures."""

import numpy as np
import pytest

from nvq.codec import encode_dataset
from nvq.optimizer import default_hyperparams
from nvq.schemas import NonlinearityFamily
from nvq.synth import bell_vectors


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def fast_hp():
    """Short search schedule for tests that only need a valid fit."""
    return default_hyperparams(max_iters=30)


@pytest.fixture(scope="module")
def bell_data():
    """Small synthetic corpus: 40 vectors of dimension 32."""
    return bell_vectors(40, 32, seed=7)


@pytest.fixture(scope="module")
def bell_queries():
    """Held-out queries from the same corpus."""
    return bell_vectors(12, 32, seed=7, start=40).astype(np.float64)


@pytest.fixture(scope="module")
def bell_vector():
    """One 768-dimensional bell-shaped vector."""
    return bell_vectors(1, 768, seed=3)[0].astype(np.float64)


@pytest.fixture(scope="module")
def encoded(bell_data):
    """bell_data encoded with LogLog at 8 bits over 2 subvectors."""
    return encode_dataset(
        bell_data, NonlinearityFamily.LOGLOG, 8, m=2, hp=default_hyperparams(max_iters=30), seed=0
    )
