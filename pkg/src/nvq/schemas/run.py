from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, field_validator

from .codec import SUPPORTED_SUBVECTORS
from .nonlinearity import NonlinearityFamily
from .quantizer import SUPPORTED_BITS


class Command(str, Enum):
    COMPRESS = "compress"
    DECOMPRESS = "decompress"
    EVAL = "eval"
    BENCH = "bench"
    SYNTH = "synth"
    INSPECT = "inspect"


class RunConfig(BaseModel):
    """Validated options of one CLI invocation."""

    model_config = ConfigDict(frozen=True)

    command: Command
    input: Optional[Path] = None
    output: Optional[Path] = None
    compressed: List[Path] = []
    queries: Optional[Path] = None
    ground_truth: Optional[Path] = None
    families: List[NonlinearityFamily] = [NonlinearityFamily.LOGLOG]
    bits: List[int] = [8]
    subvectors: List[int] = [1]
    seed: int = 0
    k: int = 10
    query_count: int = 100
    n: int = 1000
    d: int = 768
    threads: int = 1
    max_iters: int = 100
    tol: float = 1e-4
    bench_values: int = 100_000_000
    warmup: int = 1
    histogram: Optional[Path] = None
    fast_math: bool = False
    chunk_size: int = 256

    @field_validator("families")
    @classmethod
    def _check_families(cls, value: List[NonlinearityFamily]) -> List[NonlinearityFamily]:
        if not value:
            raise ValueError("at least one family is required")
        return value

    @field_validator("bits")
    @classmethod
    def _check_bits(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one bit depth is required")
        for beta in value:
            if beta not in SUPPORTED_BITS:
                raise ValueError(f"--bits must be one of {SUPPORTED_BITS}, got {beta}")
        return value

    @field_validator("subvectors")
    @classmethod
    def _check_subvectors(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one subvector count is required")
        for m in value:
            if m not in SUPPORTED_SUBVECTORS:
                raise ValueError(f"--subvectors must be one of {SUPPORTED_SUBVECTORS}, got {m}")
        return value

    @field_validator("k", "query_count", "n", "d", "threads", "max_iters", "bench_values", "chunk_size")
    @classmethod
    def _check_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be a positive integer")
        return value

    @field_validator("seed", "warmup")
    @classmethod
    def _check_non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must not be negative")
        return value

    @field_validator("tol")
    @classmethod
    def _check_tol(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("--tol must be positive")
        return value

    @property
    def family(self) -> NonlinearityFamily:
        return self.families[0]

    @property
    def beta(self) -> int:
        return self.bits[0]

    @property
    def m(self) -> int:
        return self.subvectors[0]
