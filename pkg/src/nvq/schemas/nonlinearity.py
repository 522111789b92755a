from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator


class NonlinearityFamily(str, Enum):
    """Invertible nonlinearities h available to the quantizer."""

    UNIFORM = "uniform"
    KUMARASWAMY = "kumaraswamy"
    LOGLOG = "loglog"
    NQT = "nqt"

    @property
    def code(self) -> int:
        """Container tag of the family."""
        return _FAMILY_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "NonlinearityFamily":
        for family, value in _FAMILY_CODES.items():
            if value == code:
                return family
        raise ValueError(f"unknown family code {code}")


_FAMILY_CODES = {
    NonlinearityFamily.UNIFORM: 0,
    NonlinearityFamily.KUMARASWAMY: 1,
    NonlinearityFamily.LOGLOG: 2,
    NonlinearityFamily.NQT: 3,
}


class NonlinearityParams(BaseModel):
    """Learned parameters of one (sub)vector.

    p1 is Kumaraswamy a or the logistic slope alpha; p2 is Kumaraswamy b or the
    inflection point x0, expressed in interval-width units.
    """

    model_config = ConfigDict(frozen=True)

    family: NonlinearityFamily
    p1: float = 0.0
    p2: float = 0.0

    @classmethod
    def uniform(cls) -> "NonlinearityParams":
        return cls(family=NonlinearityFamily.UNIFORM)


class Interval(BaseModel):
    """Normalization range [x_min, x_max] of one (sub)vector."""

    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float

    @model_validator(mode="after")
    def _check_order(self) -> "Interval":
        if not self.x_min <= self.x_max:
            raise ValueError(f"x_min={self.x_min} exceeds x_max={self.x_max}")
        return self

    @property
    def delta(self) -> float:
        return self.x_max - self.x_min

    @property
    def is_degenerate(self) -> bool:
        return self.x_min == self.x_max
