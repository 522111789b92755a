"""beta-bit quantizer/dequantizer pair, reconstruction losses and code packing."""

import logging
from typing import Any, Optional, Sequence, Union

import numpy as np

from .core.config import settings
from .core.errors import DomainError
from .nonlinearity import check_feasible, forward_core, inverse_core
from .schemas import SUPPORTED_BITS, CodeBlock, Interval, NonlinearityFamily, NonlinearityParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_EPS = np.finfo(np.float64).eps
_UNIFORM = NonlinearityParams.uniform()


def levels(beta: int) -> int:
    """Largest code, 2**beta - 1."""
    check_beta(beta)
    return (1 << beta) - 1


def check_beta(beta: int) -> None:
    if beta not in SUPPORTED_BITS:
        raise DomainError(f"beta must be one of {SUPPORTED_BITS}, got {beta}")


def _fast(fast_math: Optional[bool]) -> bool:
    return settings.fast_math if fast_math is None else fast_math


# Vectorized kernels; parameters broadcast against values


def quantize_core(
    family: NonlinearityFamily, p1: Any, p2: Any, lo: float, hi: float, x: np.ndarray, beta: int, fast_math: bool
) -> np.ndarray:
    top = (1 << beta) - 1
    if lo == hi:
        return np.zeros(np.broadcast(np.asarray(p1), np.asarray(x)).shape, dtype=np.int64)
    u = forward_core(family, p1, p2, lo, hi, x, fast_math)
    return np.clip(np.floor(top * u + 0.5), 0, top).astype(np.int64)


def dequantize_core(
    family: NonlinearityFamily, p1: Any, p2: Any, lo: float, hi: float, codes: np.ndarray, beta: int, fast_math: bool
) -> np.ndarray:
    top = (1 << beta) - 1
    if lo == hi:
        return np.full(np.broadcast(np.asarray(p1), np.asarray(codes)).shape, lo, dtype=np.float64)
    return inverse_core(family, p1, p2, lo, hi, np.asarray(codes, dtype=np.float64) / top, fast_math)


def losses_core(
    v: np.ndarray, family: NonlinearityFamily, p1: Any, p2: Any, lo: float, hi: float, beta: int, fast_math: bool
) -> np.ndarray:
    """Squared reconstruction error summed over the last axis, in double precision."""
    codes = quantize_core(family, p1, p2, lo, hi, v, beta, fast_math)
    residual = v - dequantize_core(family, p1, p2, lo, hi, codes, beta, fast_math)
    return np.einsum("...i,...i->...", residual, residual)


def ratio(uniform: Any, nonuniform: Any) -> Any:
    """uniform / nonuniform loss; parity (1) when the uniform loss is zero."""
    uniform = np.asarray(uniform, dtype=np.float64)
    nonuniform = np.asarray(nonuniform, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = uniform / np.maximum(nonuniform, uniform * _EPS)
    return np.where(uniform == 0, 1.0, value)


# Public scalar/vector API


def _validated(params: NonlinearityParams, iv: Interval, beta: int) -> None:
    check_beta(beta)
    check_feasible(params, iv)


def quantize(
    x: ArrayLike, params: NonlinearityParams, iv: Interval, beta: int, fast_math: Optional[bool] = None
) -> Union[int, np.ndarray]:
    """Q(x) = floor((2**beta - 1) h(x) + 1/2)."""
    _validated(params, iv, beta)
    values = np.asarray(x, dtype=np.float64)
    if np.any(~(values >= iv.x_min)) or np.any(~(values <= iv.x_max)):
        raise DomainError(f"values must lie in [{iv.x_min}, {iv.x_max}]")
    codes = quantize_core(params.family, params.p1, params.p2, iv.x_min, iv.x_max, values, beta, _fast(fast_math))
    if np.ndim(x) == 0:
        return int(codes.reshape(-1)[0])
    return codes


def dequantize(
    code: Union[int, np.ndarray], params: NonlinearityParams, iv: Interval, beta: int, fast_math: Optional[bool] = None
) -> ArrayLike:
    """Q**-1(y) = h**-1(y / (2**beta - 1))."""
    _validated(params, iv, beta)
    codes = np.asarray(code)
    top = levels(beta)
    if np.any(codes < 0) or np.any(codes > top):
        raise DomainError(f"codes must lie in [0, {top}]")
    values = dequantize_core(params.family, params.p1, params.p2, iv.x_min, iv.x_max, codes, beta, _fast(fast_math))
    if np.ndim(code) == 0:
        return float(values.reshape(-1)[0])
    return values


def quantize_vector(
    v: np.ndarray, params: NonlinearityParams, iv: Interval, beta: int, fast_math: Optional[bool] = None
) -> np.ndarray:
    """Codes of every entry of ``v``; a constant interval yields all zeros."""
    return np.atleast_1d(quantize(np.asarray(v, dtype=np.float64), params, iv, beta, fast_math)).astype(np.uint8)


def dequantize_vector(
    codes: np.ndarray, params: NonlinearityParams, iv: Interval, beta: int, fast_math: Optional[bool] = None
) -> np.ndarray:
    """Reconstructed values; a constant interval yields x_min everywhere."""
    return np.atleast_1d(dequantize(np.asarray(codes, dtype=np.int64), params, iv, beta, fast_math))


def interval_of(v: np.ndarray) -> Interval:
    v = np.asarray(v, dtype=np.float64)
    return Interval(x_min=float(v.min()), x_max=float(v.max()))


def nvq_loss(
    v: np.ndarray,
    params: NonlinearityParams,
    iv: Optional[Interval] = None,
    beta: int = 8,
    fast_math: Optional[bool] = None,
) -> float:
    """Sum of squared reconstruction errors of ``v`` under ``params``."""
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.size == 0:
        raise DomainError("loss of an empty vector")
    iv = iv or interval_of(v)
    _validated(params, iv, beta)
    if np.any(~(v >= iv.x_min)) or np.any(~(v <= iv.x_max)):
        raise DomainError(f"values must lie in [{iv.x_min}, {iv.x_max}]")
    loss = losses_core(v, params.family, params.p1, params.p2, iv.x_min, iv.x_max, beta, _fast(fast_math))
    return float(loss)


def uniform_loss(v: np.ndarray, iv: Optional[Interval] = None, beta: int = 8) -> float:
    """Loss of the parameterless uniform quantizer, the objective's baseline."""
    return nvq_loss(v, _UNIFORM, iv, beta, fast_math=False)


def objective_ratio(
    v: np.ndarray,
    params: NonlinearityParams,
    iv: Optional[Interval] = None,
    beta: int = 8,
    fast_math: Optional[bool] = None,
) -> float:
    """uniform_loss / nvq_loss; above 1 means the nonlinearity beats uniform."""
    baseline = uniform_loss(v, iv, beta)
    if baseline == 0:
        logger.debug("vector is exactly representable on the uniform grid; ratio set to parity")
        return 1.0
    return float(ratio(baseline, nvq_loss(v, params, iv, beta, fast_math)))


# Code packing


def pack_codes(codes: Sequence[int], beta: int) -> CodeBlock:
    """Pack codes into bytes; at beta=4 the earlier code takes the low nibble."""
    check_beta(beta)
    values = np.asarray(codes, dtype=np.int64).reshape(-1)
    top = levels(beta)
    if values.size and (values.min() < 0 or values.max() > top):
        raise DomainError(f"codes must lie in [0, {top}]")
    if beta == 8:
        return CodeBlock(data=values.astype(np.uint8).tobytes(), count=values.size, beta=beta)
    padded = np.zeros(values.size + (values.size & 1), dtype=np.uint8)
    padded[: values.size] = values
    packed = padded[0::2] | (padded[1::2] << 4)
    return CodeBlock(data=packed.astype(np.uint8).tobytes(), count=values.size, beta=beta)


def unpack_codes(block: CodeBlock) -> np.ndarray:
    """Inverse of ``pack_codes``."""
    raw = np.frombuffer(block.data, dtype=np.uint8)
    if block.beta == 8:
        return raw[: block.count].copy()
    codes = np.empty(raw.size * 2, dtype=np.uint8)
    codes[0::2] = raw & 0x0F
    codes[1::2] = raw >> 4
    return codes[: block.count]
