"""Bit-level transcendental kernels.

``fast_exp``/``fast_log`` are minimax polynomial kernels operating on IEEE-754
single precision. The NQT pair replaces log2/exp2 with a piecewise-linear
interpolation read straight from the exponent and mantissa fields, and works on
either the single or double precision layout.
"""

from typing import Any, NamedTuple, Union

import numpy as np

from .core.errors import DomainError

ArrayLike = Union[float, np.ndarray]


class FloatLayout(NamedTuple):
    """Bit layout of an IEEE-754 binary format."""

    float_dtype: Any
    int_dtype: Any
    mantissa_bits: int
    bias: int
    exponent_mask: int
    mantissa_mask: int
    one_bits: int


FLOAT32 = FloatLayout(np.float32, np.int32, 23, 127, 0x7F800000, 0x007FFFFF, 0x3F800000)
FLOAT64 = FloatLayout(np.float64, np.int64, 52, 1023, 0x7FF0000000000000, 0x000FFFFFFFFFFFFF, 0x3FF0000000000000)


def layout_for(dtype: Any) -> FloatLayout:
    """Return the bit layout of a floating dtype (float32 or float64)."""
    dtype = np.dtype(dtype)
    if dtype == np.float32:
        return FLOAT32
    if dtype == np.float64:
        return FLOAT64
    raise DomainError(f"no bit layout for dtype {dtype}")


def float_as_int(a: np.ndarray) -> np.ndarray:
    """Reinterpret float bits as signed integers of the same width."""
    a = np.ascontiguousarray(a)
    return a.view(layout_for(a.dtype).int_dtype)


def int_as_float(a: np.ndarray) -> np.ndarray:
    """Reinterpret signed integer bits as floats of the same width."""
    a = np.ascontiguousarray(a)
    if a.dtype == np.int32:
        return a.view(np.float32)
    if a.dtype == np.int64:
        return a.view(np.float64)
    raise DomainError(f"cannot reinterpret {a.dtype} as float")


def _out(result: np.ndarray, like: Any) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(result.reshape(-1)[0])
    return result


# Single precision kernels

_LOG_REDUCE = 0x3F2AAAAB  # bits of 2/3; mantissa is reduced into [2/3, 4/3)
_EXP_FIELD = np.int32(-0x800000)  # 0xff800000 as int32
_TWO_POW_M23 = np.float32(1.19209290e-7)
_LN2 = np.float32(0.693147182)
_INV_LN2 = np.float32(1.442695041)
_ROUND_CVT = np.float32(12582912.0)  # 1.5 * 2**23


def fast_log(x: ArrayLike) -> ArrayLike:
    """Natural logarithm of positive normal floats in single precision."""
    a = np.atleast_1d(np.asarray(x, dtype=np.float32))
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise DomainError("fast_log requires finite positive input")
    bits = a.view(np.int32)
    e = (bits - np.int32(_LOG_REDUCE)) & _EXP_FIELD
    m = (bits - e).view(np.float32)
    i = e.astype(np.float32) * _TWO_POW_M23
    f = m - np.float32(1.0)
    s = f * f
    r = np.float32(0.230836749) * f + np.float32(-0.279208571)
    t = np.float32(0.331826031) * f + np.float32(-0.498910338)
    r = r * s + t
    r = r * s + f
    r = i * _LN2 + r
    return _out(r, x)


def fast_exp(x: ArrayLike) -> ArrayLike:
    """e**x via 2**i * 2**f with a degree-4 polynomial and exponent injection."""
    a = np.atleast_1d(np.asarray(x, dtype=np.float32))
    t = a * _INV_LN2
    r = (t + _ROUND_CVT) - _ROUND_CVT
    f = t - r
    p = np.float32(0.009651907610706037) * f + np.float32(0.05593479631997887)
    p = p * f + np.float32(0.2402301551437674)
    p = p * f + np.float32(0.6931186232012877)
    p = p * f + np.float32(0.9999993887682104)

    with np.errstate(invalid="ignore"):
        i = np.clip(np.nan_to_num(r), -1000, 1000).astype(np.int32)
    # Injection is valid while the result stays a normal float
    inside = (i > -126) & (i < 128)
    injected = (p.view(np.int32) + np.where(inside, i, 0) * np.int32(1 << 23)).view(np.float32)
    with np.errstate(over="ignore", under="ignore"):
        result = np.where(inside, injected, np.ldexp(p, i))
    result = np.where(np.isnan(a), np.float32(np.nan), result).astype(np.float32)
    return _out(result, x)


def fast_pow(x: ArrayLike, c: ArrayLike) -> ArrayLike:
    """x**c = exp(c log x) for x >= 0 using the fast kernels; 0**c is 0."""
    a = np.atleast_1d(np.asarray(x, dtype=np.float32))
    if np.any(a < 0):
        raise DomainError("fast_pow requires non-negative base")
    positive = a > 0
    logs = np.zeros_like(a)
    if np.any(positive):
        logs[positive] = fast_log(a[positive])
    result = np.where(positive, fast_exp(np.asarray(c, dtype=np.float32) * logs), np.float32(0.0))
    return _out(result, x)


# Not-quite-transcendental kernels


def nqt_log2(z: ArrayLike, dtype: Any = np.float64) -> ArrayLike:
    """Piecewise-linear log2 built from the exponent and mantissa bits.

    Exact at powers of two; between them it interpolates linearly, which keeps
    the error below 0.0861. Subnormal inputs carry no exponent and are read as
    the smallest normal float of the layout.
    """
    a = np.atleast_1d(np.asarray(z, dtype=dtype))
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise DomainError("nqt_log2 requires finite positive input")
    return _out(_nqt_log2(a, layout_for(a.dtype)), z)


def _nqt_log2(a: np.ndarray, lay: FloatLayout) -> np.ndarray:
    a = np.maximum(np.asarray(a, dtype=lay.float_dtype), np.finfo(lay.float_dtype).tiny)
    bits = np.asarray(a).view(lay.int_dtype)
    # Relative to the bits of 1.0, the pattern reads as (exponent + mantissa fraction) * 2**mantissa_bits
    return ((bits - lay.int_dtype(lay.one_bits)) * 2.0**-lay.mantissa_bits).astype(lay.float_dtype)


def nqt_logit(u: ArrayLike, alpha: ArrayLike, x0: ArrayLike, dtype: Any = np.float64) -> ArrayLike:
    """alpha**-1 * nqt_log2(u / (1 - u)) + x0 on the open interval (0, 1)."""
    a = np.atleast_1d(np.asarray(u, dtype=dtype))
    if np.any(~(a > 0)) or np.any(~(a < 1)):
        raise DomainError("nqt_logit requires 0 < u < 1")
    result = nqt_logit_unchecked(a, np.asarray(alpha, dtype=dtype), np.asarray(x0, dtype=dtype))
    return _out(result, u)


def nqt_logit_unchecked(a: np.ndarray, alpha: np.ndarray, x0: np.ndarray) -> np.ndarray:
    lay = layout_for(a.dtype)
    # u = 1 gives z = inf, whose bits still decode to a finite value
    with np.errstate(divide="ignore"):
        z = np.maximum(a / (lay.float_dtype(1.0) - a), np.finfo(lay.float_dtype).tiny)
    bits = np.asarray(z).view(lay.int_dtype)
    scale = 2.0**-lay.mantissa_bits / np.asarray(alpha, dtype=np.float64)
    return (bits - lay.int_dtype(lay.one_bits)) * scale + x0


def nqt_logistic(x: ArrayLike, alpha: ArrayLike, x0: ArrayLike, dtype: Any = np.float64) -> ArrayLike:
    """Inverse of ``nqt_logit``: z / (z + 1) with z = 2**t built from its bits."""
    a = np.atleast_1d(np.asarray(x, dtype=dtype))
    result = nqt_logistic_unchecked(a, np.asarray(alpha, dtype=dtype), np.asarray(x0, dtype=dtype))
    return _out(result, x)


def nqt_logistic_unchecked(a: np.ndarray, alpha: np.ndarray, x0: np.ndarray) -> np.ndarray:
    lay = layout_for(a.dtype)
    # Saturate so that z stays a normal float
    t = np.clip(alpha * (a - x0), 2 - lay.bias, lay.bias - 1)
    bits = ((np.asarray(t, dtype=np.float64) + lay.bias) * 2.0**lay.mantissa_bits).astype(lay.int_dtype)
    z = np.asarray(bits).view(lay.float_dtype)
    return z / (z + lay.float_dtype(1.0))
