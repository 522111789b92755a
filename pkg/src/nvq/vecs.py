"""Reader and writer for the fvecs/ivecs vector file layouts.

Each record is a little-endian int32 dimension followed by that many
little-endian float32 (fvecs) or int32 (ivecs) values. All records of a
file share the same dimension.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from .core.errors import DomainError, VectorFileError

logger = logging.getLogger(__name__)

FORMATS = {"fvecs": np.dtype("<f4"), "ivecs": np.dtype("<i4")}

PathLike = Union[str, Path]


def _value_dtype(fmt: str) -> np.dtype:
    try:
        return FORMATS[fmt]
    except KeyError:
        raise DomainError(f"unknown vector format {fmt!r}, expected one of {sorted(FORMATS)}") from None


def format_for(path: PathLike) -> str:
    """Guess the format from the file suffix, defaulting to fvecs."""
    suffix = Path(path).suffix.lstrip(".").lower()
    return suffix if suffix in FORMATS else "fvecs"


def parse_vectors(raw: bytes, fmt: str = "fvecs") -> np.ndarray:
    """Parse an in-memory fvecs/ivecs payload into an (n, d) array."""
    dtype = _value_dtype(fmt)
    if not raw:
        return np.empty((0, 0), dtype=dtype.newbyteorder("="))
    if len(raw) < 4:
        raise VectorFileError("truncated dimension header", offset=0)
    d = int(np.frombuffer(raw, dtype="<i4", count=1)[0])
    if d <= 0:
        raise VectorFileError(f"non-positive dimension {d}", offset=0)

    record = 4 * (d + 1)
    n, tail = divmod(len(raw), record)
    words = np.frombuffer(raw, dtype="<i4", count=n * (d + 1)).reshape(n, d + 1)
    mismatched = np.flatnonzero(words[:, 0] != d)
    if mismatched.size:
        bad = int(mismatched[0])
        raise VectorFileError(f"record {bad} has dimension {int(words[bad, 0])}, expected {d}", offset=bad * record)
    if tail:
        if tail >= 4:
            found = int(np.frombuffer(raw, dtype="<i4", count=1, offset=n * record)[0])
            if found != d:
                raise VectorFileError(f"record {n} has dimension {found}, expected {d}", offset=n * record)
        raise VectorFileError(f"truncated record {n}", offset=n * record)

    values = words[:, 1:].copy().view(dtype)
    return values.astype(dtype.newbyteorder("="))


def read_vectors(path: PathLike, fmt: str = "fvecs") -> np.ndarray:
    """Read a whole fvecs/ivecs file; an empty file yields an empty (0, 0) array."""
    raw = Path(path).read_bytes()
    vectors = parse_vectors(raw, fmt)
    logger.debug("read %d x %d %s vectors from %s", vectors.shape[0], vectors.shape[1], fmt, path)
    return vectors


def serialize_vectors(vectors: np.ndarray, fmt: str = "fvecs") -> bytes:
    dtype = _value_dtype(fmt)
    data = np.asarray(vectors)
    if data.size == 0:
        return b""
    if data.ndim != 2:
        raise DomainError(f"expected a 2-d array of vectors, got shape {data.shape}")
    n, d = data.shape
    out = np.empty((n, d + 1), dtype="<i4")
    out[:, 0] = d
    out[:, 1:] = np.ascontiguousarray(data, dtype=dtype).view("<i4")
    return out.tobytes()


def write_vectors(path: PathLike, vectors: np.ndarray, fmt: str = "fvecs") -> int:
    """Write vectors in fvecs/ivecs layout and return the byte count."""
    raw = serialize_vectors(vectors, fmt)
    Path(path).write_bytes(raw)
    logger.debug("wrote %d bytes of %s to %s", len(raw), fmt, path)
    return len(raw)
