from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .nonlinearity import NonlinearityParams


class SnesState(BaseModel):
    """Search distribution of one fit."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mu: np.ndarray
    sigma: np.ndarray
    iteration: int = 0

    @field_validator("mu", "sigma", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return np.array(value, dtype=np.float64)

    @model_validator(mode="after")
    def _check_sigma(self) -> "SnesState":
        if self.mu.shape != self.sigma.shape:
            raise ValueError("mu and sigma must have the same shape")
        if not np.all(self.sigma > 0):
            raise ValueError("sigma must be strictly positive")
        return self


class SnesHyperparams(BaseModel):
    """Sample count, learning rates and stopping rule of the evolution strategy."""

    model_config = ConfigDict(frozen=True)

    T: int
    eta_mu: float
    eta_sigma: float
    tol: float = 1e-4
    min_iters: int = 10
    max_iters: int = 100

    @model_validator(mode="after")
    def _check(self) -> "SnesHyperparams":
        if self.T < 2:
            raise ValueError("T must be at least 2")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.min_iters > self.max_iters:
            raise ValueError("min_iters exceeds max_iters")
        return self


class FitResult(BaseModel):
    """Outcome of fitting one (sub)vector."""

    model_config = ConfigDict(frozen=True)

    params: NonlinearityParams
    objective: float
    iterations: int
    fell_back_to_uniform: bool = False
    converged: bool = False
