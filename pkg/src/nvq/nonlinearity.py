"""Invertible nonlinearities h: [x_min, x_max] -> [0, 1] and their inverses.

The logistic families work on delta**-1 scaled inputs (delta = x_max - x_min),
so alpha and x0 are comparable across vectors; x0 is expressed in those units
and lives in [x_min / delta, x_max / delta].

The ``*_core`` functions are the vectorized kernels shared with the quantizer
and the fitter. They broadcast parameter arrays against value arrays, assume a
non-degenerate interval and feasible parameters, and skip all validation.
"""

import logging
from typing import Any, Optional, Tuple, Union

import numpy as np

from .core.config import settings
from .core.errors import ConstraintError, DegenerateIntervalError, DomainError, NoFitNeededError
from .fastmath import fast_pow, nqt_logistic_unchecked, nqt_logit_unchecked
from .schemas import Interval, NonlinearityFamily, NonlinearityParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

PARAM_FLOOR = 1e-6
FEASIBILITY_SLACK = 1e-6

_INITIAL_STATES = {
    NonlinearityFamily.KUMARASWAMY: ((1.0, 1.0), (1.0, 1.0)),
    NonlinearityFamily.LOGLOG: ((10.0, 0.0), (2.0, 0.5)),
    NonlinearityFamily.NQT: ((10.0, 0.0), (2.0, 0.5)),
}


def _out(result: Any, like: Any) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(np.asarray(result).reshape(-1)[0])
    return np.asarray(result)


def _use_fast(fast_math: Optional[bool]) -> bool:
    return settings.fast_math if fast_math is None else fast_math


# Kumaraswamy


def _kumaraswamy_cdf(t: np.ndarray, a: Any, b: Any, fast_math: bool) -> np.ndarray:
    if fast_math:
        w = fast_pow(t, a)
        return 1.0 - np.asarray(fast_pow(1.0 - np.asarray(w), b), dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_power = a * np.log(t)
        power = np.exp(log_power)
        # log(1 - t**a), kept accurate as t**a approaches 0 or 1
        log_rest = np.where(power < 0.5, np.log1p(-power), np.log(-np.expm1(log_power)))
        return -np.expm1(b * log_rest)


def _kumaraswamy_icdf(u: np.ndarray, a: Any, b: Any, fast_math: bool) -> np.ndarray:
    if fast_math:
        w = 1.0 - np.asarray(fast_pow(1.0 - u, 1.0 / b), dtype=np.float64)
        return np.asarray(fast_pow(np.clip(w, 0.0, 1.0), 1.0 / a), dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_rest = np.log1p(-u) / b
        rest = np.exp(log_rest)
        # log(w) with w = 1 - (1 - u)**(1/b), kept accurate as w approaches 0 or 1
        log_w = np.where(rest > 0.5, np.log(-np.expm1(log_rest)), np.log1p(-rest))
        return np.exp(log_w / a)


def _check_unit(values: np.ndarray, name: str) -> None:
    if np.any(~(values >= 0)) or np.any(~(values <= 1)):
        raise DomainError(f"{name} must lie in [0, 1]")


def kumaraswamy_cdf(t: ArrayLike, a: float, b: float, fast_math: Optional[bool] = None) -> ArrayLike:
    """F(t; a, b) = 1 - (1 - t**a)**b on the closed unit interval."""
    values = np.asarray(t, dtype=np.float64)
    _check_unit(values, "t")
    if a <= 0 or b <= 0:
        raise ConstraintError("Kumaraswamy parameters must be positive")
    result = _kumaraswamy_cdf(values, a, b, _use_fast(fast_math))
    result = np.where(values == 0, 0.0, np.where(values == 1, 1.0, np.clip(result, 0.0, 1.0)))
    return _out(result, t)


def kumaraswamy_icdf(u: ArrayLike, a: float, b: float, fast_math: Optional[bool] = None) -> ArrayLike:
    """Quantile function (1 - (1 - u)**(1/b))**(1/a)."""
    values = np.asarray(u, dtype=np.float64)
    _check_unit(values, "u")
    if a <= 0 or b <= 0:
        raise ConstraintError("Kumaraswamy parameters must be positive")
    result = _kumaraswamy_icdf(values, a, b, _use_fast(fast_math))
    result = np.where(values == 0, 0.0, np.where(values == 1, 1.0, np.clip(result, 0.0, 1.0)))
    return _out(result, u)


# Logistic / logit


def logistic(x: ArrayLike, alpha: ArrayLike, x0: ArrayLike) -> ArrayLike:
    """Standard logistic (1 + exp(-alpha (x - x0)))**-1, overflow free."""
    result = 0.5 * (1.0 + np.tanh(0.5 * np.asarray(alpha) * (np.asarray(x, dtype=np.float64) - x0)))
    return _out(result, x)


def logit(y: ArrayLike, alpha: ArrayLike, x0: ArrayLike) -> ArrayLike:
    """Inverse of ``logistic`` on (0, 1)."""
    values = np.asarray(y, dtype=np.float64)
    with np.errstate(divide="ignore"):
        result = (np.log(values) - np.log1p(-values)) / alpha + x0
    return _out(result, y)


def logistic2(x: ArrayLike, alpha: ArrayLike, x0: ArrayLike) -> ArrayLike:
    """Base-2 logistic, the function the NQT logistic approximates."""
    result = 1.0 / (1.0 + np.exp2(-np.asarray(alpha) * (np.asarray(x, dtype=np.float64) - x0)))
    return _out(result, x)


def logit2(y: ArrayLike, alpha: ArrayLike, x0: ArrayLike) -> ArrayLike:
    """Base-2 logit."""
    values = np.asarray(y, dtype=np.float64)
    result = (np.log2(values) - np.log2(1.0 - values)) / alpha + x0
    return _out(result, y)


def _logistic_kernels(family: NonlinearityFamily, fast_math: bool) -> Tuple[Any, Any, Any]:
    """Sigmoid, its inverse and the working dtype; fast NQT runs in the float32 layout."""
    if family is NonlinearityFamily.NQT:
        return nqt_logistic_unchecked, nqt_logit_unchecked, np.float32 if fast_math else np.float64
    return _logistic_unchecked, _logit_unchecked, np.float64


def _scaled_ends(sigmoid: Any, dtype: Any, alpha: Any, x0: Any, lo: Any, hi: Any) -> Tuple[Any, Any]:
    delta = hi - lo
    base = sigmoid(np.asarray(lo / delta, dtype=dtype), alpha, x0)
    top = sigmoid(np.asarray(hi / delta, dtype=dtype), alpha, x0)
    return base, top


def _scaled_forward(
    family: NonlinearityFamily, alpha: Any, x0: Any, lo: Any, hi: Any, x: np.ndarray, fast_math: bool
) -> np.ndarray:
    sigmoid, _, dtype = _logistic_kernels(family, fast_math)
    alpha, x0 = np.asarray(alpha, dtype=dtype), np.asarray(x0, dtype=dtype)
    base, top = _scaled_ends(sigmoid, dtype, alpha, x0, lo, hi)
    value = sigmoid(np.asarray(x / (hi - lo), dtype=dtype), alpha, x0)
    return (value - base) / (top - base)


def _scaled_inverse(
    family: NonlinearityFamily, alpha: Any, x0: Any, lo: Any, hi: Any, u: np.ndarray, fast_math: bool
) -> np.ndarray:
    sigmoid, inverse, dtype = _logistic_kernels(family, fast_math)
    alpha, x0 = np.asarray(alpha, dtype=dtype), np.asarray(x0, dtype=dtype)
    base, top = _scaled_ends(sigmoid, dtype, alpha, x0, lo, hi)
    y = np.clip(np.asarray((top - base) * u + base, dtype=dtype), 0.0, 1.0)
    return (hi - lo) * inverse(y, alpha, x0)


def _logistic_unchecked(x: np.ndarray, alpha: Any, x0: Any) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * alpha * (x - x0)))


def _logit_unchecked(y: np.ndarray, alpha: Any, x0: Any) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.log(y) - np.log1p(-y)) / alpha + x0


def _check_interval(iv: Interval) -> None:
    if iv.is_degenerate:
        raise DegenerateIntervalError(f"interval [{iv.x_min}, {iv.x_max}] has zero width")


def _check_in_interval(values: np.ndarray, iv: Interval) -> None:
    if np.any(~(values >= iv.x_min)) or np.any(~(values <= iv.x_max)):
        raise DomainError(f"values must lie in [{iv.x_min}, {iv.x_max}]")


def _check_family(params: NonlinearityParams, *families: NonlinearityFamily) -> None:
    if params.family not in families:
        raise ConstraintError(f"expected {'/'.join(f.value for f in families)} params, got {params.family.value}")


def logistic_scaled(x: ArrayLike, params: NonlinearityParams, iv: Interval) -> ArrayLike:
    """Scaled logistic mapping [x_min, x_max] onto [0, 1]."""
    _check_family(params, NonlinearityFamily.LOGLOG)
    return forward(params, iv, x)


def logit_scaled(u: ArrayLike, params: NonlinearityParams, iv: Interval) -> ArrayLike:
    """Scaled logit mapping [0, 1] back onto [x_min, x_max]."""
    _check_family(params, NonlinearityFamily.LOGLOG)
    return inverse(params, iv, u)


def nqt_logistic_scaled(x: ArrayLike, params: NonlinearityParams, iv: Interval) -> ArrayLike:
    """Scaled NQT logistic."""
    _check_family(params, NonlinearityFamily.NQT)
    return forward(params, iv, x)


def nqt_logit_scaled(u: ArrayLike, params: NonlinearityParams, iv: Interval) -> ArrayLike:
    """Scaled NQT logit."""
    _check_family(params, NonlinearityFamily.NQT)
    return inverse(params, iv, u)


# Family dispatch


def _with_param_shape(values: np.ndarray, p1: Any, p2: Any) -> np.ndarray:
    """Broadcast ``values`` against parameter arrays, as the fitted families do."""
    return np.broadcast_arrays(values, np.asarray(p1), np.asarray(p2))[0]


def forward_core(
    family: NonlinearityFamily, p1: Any, p2: Any, lo: Any, hi: Any, x: np.ndarray, fast_math: bool = False
) -> np.ndarray:
    """h(x) for every family; endpoints map exactly to 0 and 1."""
    x = np.asarray(x, dtype=np.float64)
    if family is NonlinearityFamily.UNIFORM:
        u = _with_param_shape((x - lo) / (hi - lo), p1, p2)
    elif family is NonlinearityFamily.KUMARASWAMY:
        t = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        u = _kumaraswamy_cdf(t, p1, p2, fast_math)
    else:
        u = _scaled_forward(family, p1, p2, lo, hi, x, fast_math)
    u = np.where(x <= lo, 0.0, np.where(x >= hi, 1.0, u))
    return np.clip(u, 0.0, 1.0)


def inverse_core(
    family: NonlinearityFamily, p1: Any, p2: Any, lo: Any, hi: Any, u: np.ndarray, fast_math: bool = False
) -> np.ndarray:
    """h**-1(u) for every family; u = 0 and u = 1 return the exact endpoints."""
    u = np.asarray(u, dtype=np.float64)
    if family is NonlinearityFamily.UNIFORM:
        x = _with_param_shape(lo * (1.0 - u) + hi * u, p1, p2)
    elif family is NonlinearityFamily.KUMARASWAMY:
        t = _kumaraswamy_icdf(u, p1, p2, fast_math)
        x = lo * (1.0 - t) + hi * t
    else:
        x = _scaled_inverse(family, p1, p2, lo, hi, u, fast_math)
    x = np.where(u <= 0, lo, np.where(u >= 1, hi, x))
    return np.clip(x, lo, hi)


def check_feasible(params: NonlinearityParams, iv: Interval) -> None:
    """Raise ConstraintError unless params lie in the family's feasible set."""
    if params.family is NonlinearityFamily.UNIFORM:
        return
    if not (np.isfinite(params.p1) and np.isfinite(params.p2)):
        raise ConstraintError("parameters must be finite")
    if params.family is NonlinearityFamily.KUMARASWAMY:
        if params.p1 <= 0 or params.p2 <= 0:
            raise ConstraintError(f"Kumaraswamy a={params.p1}, b={params.p2} must be positive")
        return
    if params.p1 < PARAM_FLOOR * (1 - FEASIBILITY_SLACK):
        raise ConstraintError(f"alpha={params.p1} is below {PARAM_FLOOR}")
    if not iv.is_degenerate:
        lo, hi = x0_domain(iv)
        slack = FEASIBILITY_SLACK * max(1.0, abs(lo), abs(hi))
        if not lo - slack <= params.p2 <= hi + slack:
            raise ConstraintError(f"x0={params.p2} outside [{lo}, {hi}]")


def forward(params: NonlinearityParams, iv: Interval, x: ArrayLike, fast_math: Optional[bool] = None) -> ArrayLike:
    """Map values of [x_min, x_max] to [0, 1] through the family's h."""
    _check_interval(iv)
    check_feasible(params, iv)
    values = np.asarray(x, dtype=np.float64)
    _check_in_interval(values, iv)
    result = forward_core(params.family, params.p1, params.p2, iv.x_min, iv.x_max, values, _use_fast(fast_math))
    return _out(result, x)


def inverse(params: NonlinearityParams, iv: Interval, u: ArrayLike, fast_math: Optional[bool] = None) -> ArrayLike:
    """Map [0, 1] back to [x_min, x_max] through the family's h**-1."""
    _check_interval(iv)
    check_feasible(params, iv)
    values = np.asarray(u, dtype=np.float64)
    _check_unit(values, "u")
    result = inverse_core(params.family, params.p1, params.p2, iv.x_min, iv.x_max, values, _use_fast(fast_math))
    return _out(result, u)


# Constraints and initialization


def x0_domain(iv: Interval) -> Tuple[float, float]:
    """Feasible inflection points, in delta**-1 scaled units."""
    if iv.is_degenerate:
        return 0.0, 0.0
    return iv.x_min / iv.delta, iv.x_max / iv.delta


def project_theta(family: NonlinearityFamily, theta: np.ndarray, iv: Interval) -> np.ndarray:
    """Project rows of (p1, p2) onto the feasible set of ``family``."""
    theta = np.array(theta, dtype=np.float64, copy=True)
    if family is NonlinearityFamily.UNIFORM:
        return theta
    if family is NonlinearityFamily.KUMARASWAMY:
        return np.maximum(theta, PARAM_FLOOR)
    lo, hi = x0_domain(iv)
    theta[..., 0] = np.maximum(theta[..., 0], PARAM_FLOOR)
    theta[..., 1] = np.clip(theta[..., 1], lo, hi)
    return theta


def search_offset(family: NonlinearityFamily, iv: Interval) -> np.ndarray:
    """Shift from the fitter's non-negative search coordinates to (p1, p2).

    x0 is searched relative to the lower end of its domain, so the search
    mean's clamp at zero coincides with the domain edge.
    """
    if family in (NonlinearityFamily.LOGLOG, NonlinearityFamily.NQT):
        return np.array([0.0, x0_domain(iv)[0]])
    return np.zeros(2)


def project_params(params: NonlinearityParams, iv: Interval) -> NonlinearityParams:
    """Closest feasible parameters; idempotent."""
    if params.family is NonlinearityFamily.UNIFORM:
        return params
    p1, p2 = project_theta(params.family, np.array([params.p1, params.p2]), iv)
    if p1 == params.p1 and p2 == params.p2:
        return params
    return NonlinearityParams(family=params.family, p1=float(p1), p2=float(p2))


def initial_snes_state(family: NonlinearityFamily) -> Tuple[np.ndarray, np.ndarray]:
    """Initial search mean and step sizes for fitting ``family``."""
    if family is NonlinearityFamily.UNIFORM:
        raise NoFitNeededError("the uniform family has no parameters to fit")
    mu, sigma = _INITIAL_STATES[family]
    return np.array(mu, dtype=np.float64), np.array(sigma, dtype=np.float64)
