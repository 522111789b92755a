"""Bell-shaped synthetic embedding corpus.

Each vector draws its own scale, skew and tail weight and pushes Gaussian
samples through a Tukey g-and-h transform, so per-vector value
distributions look alike without being identical. A small offset shared by
all vectors makes centering matter.
"""

import logging
from typing import Tuple

import numpy as np

from .core.errors import DomainError

logger = logging.getLogger(__name__)

SCALE_RANGE: Tuple[float, float] = (0.02, 0.05)
SKEW_RANGE: Tuple[float, float] = (-0.15, 0.15)
TAIL_RANGE: Tuple[float, float] = (0.08, 0.22)
OFFSET_STD = 0.01


def g_and_h(z: np.ndarray, g: float, h: float) -> np.ndarray:
    """Tukey g-and-h transform of standard normal draws; g skews, h thickens the tails."""
    body = z if abs(g) < 1e-12 else np.expm1(g * z) / g
    return body * np.exp(h * z * z / 2)


def bell_vector(i: int, d: int, seed: int = 0) -> np.ndarray:
    """Vector ``i`` of the corpus drawn from ``seed``, without its shared offset."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
    scale = rng.uniform(*SCALE_RANGE)
    g = rng.uniform(*SKEW_RANGE)
    h = rng.uniform(*TAIL_RANGE)
    return scale * g_and_h(rng.standard_normal(d), g, h)


def bell_vectors(n: int, d: int, seed: int = 0, start: int = 0) -> np.ndarray:
    """Vectors ``start`` .. ``start + n - 1`` of the corpus as float32 rows.

    Rows depend only on ``seed`` and their index, so a later ``start`` gives
    held-out queries from the same distribution.
    """
    if n < 0 or d < 1 or start < 0:
        raise DomainError(f"invalid corpus shape n={n}, d={d}, start={start}")
    offset = np.random.default_rng(seed).normal(0.0, OFFSET_STD, d)
    out = np.empty((n, d), dtype=np.float32)
    for row in range(n):
        out[row] = offset + bell_vector(start + row, d, seed)
    logger.debug("generated %d x %d synthetic vectors (seed=%d, start=%d)", n, d, seed, start)
    return out


def excess_kurtosis(vectors: np.ndarray) -> np.ndarray:
    """Per-row excess kurtosis, a quick check that tail weights differ across vectors."""
    data = np.asarray(vectors, dtype=np.float64)
    centered = data - data.mean(axis=1, keepdims=True)
    var = np.square(centered).mean(axis=1)
    return np.power(centered, 4).mean(axis=1) / np.square(var) - 3.0
