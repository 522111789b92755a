from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .nonlinearity import NonlinearityFamily

SUPPORTED_BITS = (4, 8)


class QuantizerConfig(BaseModel):
    """Bit depth and nonlinearity family of a quantizer."""

    model_config = ConfigDict(frozen=True)

    beta: int = 8
    family: NonlinearityFamily = NonlinearityFamily.LOGLOG

    @field_validator("beta")
    @classmethod
    def _check_beta(cls, value: int) -> int:
        if value not in SUPPORTED_BITS:
            raise ValueError(f"beta must be one of {SUPPORTED_BITS}, got {value}")
        return value


class CodeBlock(BaseModel):
    """Packed beta-bit codes; two codes per byte at beta=4, low nibble first."""

    model_config = ConfigDict(frozen=True)

    data: bytes
    count: int
    beta: int

    @model_validator(mode="after")
    def _check_length(self) -> "CodeBlock":
        expected = (self.count * self.beta + 7) // 8
        if len(self.data) != expected:
            raise ValueError(f"packed length {len(self.data)} != {expected} for {self.count} codes")
        return self
