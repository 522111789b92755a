"""Tests for the synthetic corpus."""

import numpy as np
import pytest

from nvq.core.errors import DomainError
from nvq.synth import bell_vectors, excess_kurtosis, g_and_h
from nvq.vecs import parse_vectors, serialize_vectors


class TestBellVectors:
    """Test the bell-shaped generator."""

    def test_shape_and_dtype(self):
        data = bell_vectors(5, 16, seed=1)
        assert data.shape == (5, 16)
        assert data.dtype == np.float32

    def test_reproducible(self):
        assert np.array_equal(bell_vectors(4, 16, seed=3), bell_vectors(4, 16, seed=3))
        assert not np.array_equal(bell_vectors(4, 16, seed=3), bell_vectors(4, 16, seed=4))

    def test_rows_depend_only_on_index(self):
        assert np.array_equal(bell_vectors(3, 16, seed=2, start=2), bell_vectors(5, 16, seed=2)[2:])

    def test_heavy_tails_vary(self):
        kurtosis = excess_kurtosis(bell_vectors(50, 768, seed=0))
        assert kurtosis.mean() > 0
        assert np.ptp(kurtosis) > 0.5

    def test_valid_fvecs(self):
        data = bell_vectors(3, 8)
        assert np.array_equal(parse_vectors(serialize_vectors(data)), data)

    def test_invalid_shape(self):
        with pytest.raises(DomainError):
            bell_vectors(3, 0)


class TestGAndH:
    """Test the Tukey g-and-h transform."""

    def test_identity(self):
        z = np.linspace(-3, 3, 7)
        assert np.allclose(g_and_h(z, 0.0, 0.0), z)

    def test_tails_grow_with_h(self):
        assert g_and_h(np.array([3.0]), 0.0, 0.2)[0] > g_and_h(np.array([3.0]), 0.0, 0.1)[0] > 3.0
