"""Encode/decode throughput of the nonlinearity families."""

import logging
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .core.config import settings
from .quantizer import dequantize_core, quantize_core
from .schemas import BenchResult, NonlinearityFamily

logger = logging.getLogger(__name__)

# Fundamental functions and main instructions per scalar; additions and bit operations are not counted
OP_COSTS: Dict[str, Dict[str, Dict[str, int]]] = {
    "kumaraswamy": {
        "encode": {"exp": 2, "log": 2, "fma": 18, "mul": 8, "div": 0},
        "decode": {"exp": 2, "log": 2, "fma": 18, "mul": 8, "div": 0},
    },
    "loglog": {
        "encode": {"exp": 1, "log": 0, "fma": 6, "mul": 2, "div": 1},
        "decode": {"exp": 0, "log": 1, "fma": 7, "mul": 2, "div": 1},
    },
    "nqt": {
        "encode": {"exp": 0, "log": 0, "fma": 2, "mul": 0, "div": 1},
        "decode": {"exp": 0, "log": 0, "fma": 2, "mul": 0, "div": 1},
    },
}

# Representative fitted parameters on [-1, 1]
BENCH_PARAMS = {
    NonlinearityFamily.UNIFORM: (0.0, 0.0),
    NonlinearityFamily.KUMARASWAMY: (1.4, 1.8),
    NonlinearityFamily.LOGLOG: (6.0, 0.0),
    NonlinearityFamily.NQT: (6.0, 0.0),
}
_LO, _HI = -1.0, 1.0


def _timed(fn: Callable[[], object], repeats: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return time.perf_counter() - start


def bench_family(
    family: NonlinearityFamily,
    values: int,
    chunk: int = 1 << 20,
    warmup: int = 1,
    beta: int = 8,
    fast_math: Optional[bool] = None,
    seed: int = 0,
) -> BenchResult:
    """Time ``values`` scalar encodes and decodes of ``family`` in chunks of ``chunk`` values."""
    fast = settings.fast_math if fast_math is None else fast_math
    chunk = max(1, min(chunk, values))
    repeats = max(1, -(-values // chunk))
    rng = np.random.default_rng(seed)
    x = rng.uniform(_LO, _HI, chunk)
    codes = rng.integers(0, 1 << beta, chunk)
    p1, p2 = BENCH_PARAMS[family]

    encode = _timed(lambda: quantize_core(family, p1, p2, _LO, _HI, x, beta, fast), repeats, warmup)
    decode = _timed(lambda: dequantize_core(family, p1, p2, _LO, _HI, codes, beta, fast), repeats, warmup)
    total = repeats * chunk
    result = BenchResult(family=family.value, values=total, encode_rate=total / encode, decode_rate=total / decode)
    logger.info(
        "%s: encode %.3g values/s, decode %.3g values/s", family.value, result.encode_rate, result.decode_rate
    )
    return result


def run_bench(
    families: Sequence[NonlinearityFamily],
    values: int = 100_000_000,
    chunk: int = 1 << 20,
    warmup: int = 1,
    beta: int = 8,
    fast_math: Optional[bool] = None,
) -> List[BenchResult]:
    """Throughput of every family over the same workload."""
    return [bench_family(family, values, chunk, warmup, beta, fast_math) for family in families]


def decode_ordering(results: Sequence[BenchResult]) -> List[str]:
    """Family names from the fastest to the slowest decoder."""
    return [r.family for r in sorted(results, key=lambda r: r.decode_rate, reverse=True)]
