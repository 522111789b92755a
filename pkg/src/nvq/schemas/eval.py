from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class QueryResult(BaseModel):
    """Top-k ids of one query with their descending dot products."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ids: np.ndarray
    scores: np.ndarray

    @field_validator("ids", mode="before")
    @classmethod
    def _ids(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.int64)

    @field_validator("scores", mode="before")
    @classmethod
    def _scores(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.float64)


class MetricsReport(BaseModel):
    """Quality of one encoded dataset against its raw source."""

    family: Optional[str] = None
    beta: Optional[int] = None
    m: Optional[int] = None
    k: int = 10
    mean_recon_error: float
    mean_dot_error: float
    map_at_k: float
    recall_at_k: float
    mean_objective: float
    fallback_fraction: float = 0.0
    compression_ratio: Optional[float] = None
    converged_fraction: Optional[float] = None
    mean_iterations: Optional[float] = None
    median_iterations: Optional[float] = None
    p1_mean: Optional[float] = None
    p1_std: Optional[float] = None
    p2_mean: Optional[float] = None
    p2_std: Optional[float] = None

    def as_row(self) -> Dict[str, Any]:
        """Flat key-value form used by the CSV export."""
        return self.model_dump()


class BenchResult(BaseModel):
    """Encode/decode throughput of one family, in scalar values per second."""

    family: str
    values: int
    encode_rate: float
    decode_rate: float
