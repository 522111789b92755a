from typing import Any, List

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .nonlinearity import Interval, NonlinearityFamily, NonlinearityParams
from .optimizer import FitResult
from .quantizer import SUPPORTED_BITS, CodeBlock

SUPPORTED_SUBVECTORS = (1, 2, 4, 8)


class DatasetMeta(BaseModel):
    """Dataset-wide layout shared by every encoded vector."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    d: int
    n: int
    m: int
    beta: int
    family: NonlinearityFamily
    mean: np.ndarray
    permutation: np.ndarray
    partition_seed: int = 0

    @field_validator("mean", mode="before")
    @classmethod
    def _mean_f32(cls, value: Any) -> np.ndarray:
        return np.ascontiguousarray(value, dtype=np.float32)

    @field_validator("permutation", mode="before")
    @classmethod
    def _perm_u32(cls, value: Any) -> np.ndarray:
        return np.ascontiguousarray(value, dtype=np.uint32)

    @model_validator(mode="after")
    def _check(self) -> "DatasetMeta":
        if self.m not in SUPPORTED_SUBVECTORS:
            raise ValueError(f"m must be one of {SUPPORTED_SUBVECTORS}, got {self.m}")
        if self.beta not in SUPPORTED_BITS:
            raise ValueError(f"beta must be one of {SUPPORTED_BITS}, got {self.beta}")
        if self.d <= 0 or self.d % self.m:
            raise ValueError(f"d={self.d} is not a positive multiple of m={self.m}")
        if self.mean.shape != (self.d,) or self.permutation.shape != (self.d,):
            raise ValueError("mean and permutation must have length d")
        if not np.array_equal(np.sort(self.permutation), np.arange(self.d, dtype=np.uint32)):
            raise ValueError("permutation is not a bijection on 0..d-1")
        return self

    @property
    def sub_dim(self) -> int:
        return self.d // self.m


class EncodedVector(BaseModel):
    """Codes and per-subvector side information of one vector."""

    model_config = ConfigDict(frozen=True)

    intervals: List[Interval]
    params: List[NonlinearityParams]
    fell_back: List[bool]
    codes: CodeBlock

    @model_validator(mode="after")
    def _check(self) -> "EncodedVector":
        if not len(self.intervals) == len(self.params) == len(self.fell_back):
            raise ValueError("per-subvector lists differ in length")
        return self

    @property
    def m(self) -> int:
        return len(self.intervals)


class EncodedDataset(BaseModel):
    """Result of encoding a whole dataset, with the fit trace of every subvector."""

    model_config = ConfigDict(frozen=True)

    meta: DatasetMeta
    vectors: List[EncodedVector]
    fits: List[FitResult] = []
    objectives: List[float] = []

    @property
    def fallback_fraction(self) -> float:
        flags = [flag for ev in self.vectors for flag in ev.fell_back]
        return sum(flags) / len(flags) if flags else 0.0

    @property
    def mean_objective(self) -> float:
        return float(np.mean(self.objectives)) if self.objectives else 1.0
