"""Dataset pipeline: centering, subvector partition, per-vector encoding and the NVQ1 container.

Each vector is centered with the dataset mean, permuted with one dataset-wide
permutation and split into ``m`` equal subvectors. Every subvector gets its
own interval and fitted nonlinearity; codes are stored subvector-major in
permuted order.
"""

import logging
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core.config import settings
from .core.errors import ConfigError, ContainerFormatError, ConstraintError, DomainError
from .core.workers import map_chunked
from .nonlinearity import check_feasible, project_params
from .optimizer import child_rng, default_hyperparams, fit_subvector
from .quantizer import dequantize_core, losses_core, pack_codes, quantize_core, ratio, unpack_codes
from .schemas import (
    SUPPORTED_BITS,
    SUPPORTED_SUBVECTORS,
    CodeBlock,
    DatasetMeta,
    EncodedDataset,
    EncodedVector,
    FitResult,
    Interval,
    NonlinearityFamily,
    NonlinearityParams,
    SnesHyperparams,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"NVQ1"
FORMAT_VERSION = 1

FLAG_FELL_BACK = 0x01
FLAG_CONSTANT = 0x02

HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u2"),
        ("d", "<u4"),
        ("n", "<u8"),
        ("m", "<u2"),
        ("beta", "u1"),
        ("family", "u1"),
        ("partition_seed", "<u8"),
    ]
)

SUBVECTOR = np.dtype([("x_min", "<f4"), ("x_max", "<f4"), ("p1", "<f4"), ("p2", "<f4"), ("flags", "u1")])


def code_bytes(d: int, beta: int) -> int:
    return (d * beta + 7) // 8


def record_dtype(m: int, d: int, beta: int) -> np.dtype:
    return np.dtype([("subvectors", SUBVECTOR, (m,)), ("codes", "u1", (code_bytes(d, beta),))])


def container_size(d: int, n: int, m: int, beta: int) -> int:
    """Exact NVQ1 file size in bytes."""
    return HEADER.itemsize + 8 * d + n * (SUBVECTOR.itemsize * m + code_bytes(d, beta))


def fvecs_size(d: int, n: int) -> int:
    """Size of the same dataset stored as raw float32 fvecs."""
    return n * 4 * (d + 1)


# Dataset layout


def compute_mean(dataset: np.ndarray) -> np.ndarray:
    """Arithmetic mean of all vectors, accumulated in double precision."""
    data = np.asarray(dataset)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DomainError("cannot compute the mean of an empty dataset")
    return data.mean(axis=0, dtype=np.float64)


def make_partition(d: int, m: int, seed: int = 0) -> np.ndarray:
    """Seeded permutation of 0..d-1; subvector j takes permuted slots [j*d/m, (j+1)*d/m)."""
    if m not in SUPPORTED_SUBVECTORS:
        raise ConfigError(f"m must be one of {SUPPORTED_SUBVECTORS}, got {m}")
    if d <= 0 or d % m:
        raise ConfigError(f"d={d} is not a positive multiple of m={m}")
    if m == 1:
        return np.arange(d, dtype=np.uint32)
    return np.random.default_rng(seed).permutation(d).astype(np.uint32)


def make_meta(
    dataset: np.ndarray,
    family: NonlinearityFamily,
    beta: int,
    m: int = 1,
    partition_seed: int = 0,
) -> DatasetMeta:
    """Header of an encoded dataset: mean, partition and quantizer choice."""
    data = np.asarray(dataset)
    n, d = data.shape
    permutation = make_partition(d, m, partition_seed)
    mean = compute_mean(data)
    logger.info("computed mean of %d x %d dataset", n, d)
    return DatasetMeta(
        d=d, n=n, m=m, beta=beta, family=family, mean=mean, permutation=permutation, partition_seed=partition_seed
    )


def _split(x: np.ndarray, meta: DatasetMeta) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != meta.d:
        raise DomainError(f"vector has dimension {x.size}, expected {meta.d}")
    centered = x - meta.mean.astype(np.float64)
    return centered[meta.permutation].reshape(meta.m, meta.sub_dim)


def _merge(parts: np.ndarray, meta: DatasetMeta) -> np.ndarray:
    out = np.empty(meta.d, dtype=np.float64)
    out[meta.permutation] = parts.reshape(-1)
    return out + meta.mean.astype(np.float64)


def storable_interval(v: np.ndarray) -> Interval:
    """Smallest single precision interval containing ``v``."""
    lo, hi = float(v.min()), float(v.max())
    lo32, hi32 = np.float32(lo), np.float32(hi)
    if float(lo32) > lo:
        lo32 = np.nextafter(lo32, np.float32(-np.inf))
    if float(hi32) < hi:
        hi32 = np.nextafter(hi32, np.float32(np.inf))
    return Interval(x_min=float(lo32), x_max=float(hi32))


def storable_params(params: NonlinearityParams, iv: Interval) -> NonlinearityParams:
    """Round parameters to single precision, keeping them feasible on ``iv``."""
    if params.family is NonlinearityFamily.UNIFORM:
        return params

    def rounded(p: NonlinearityParams) -> NonlinearityParams:
        return NonlinearityParams(family=p.family, p1=float(np.float32(p.p1)), p2=float(np.float32(p.p2)))

    return rounded(project_params(rounded(params), iv))


# Per-vector encoding


def _uniform_fit() -> FitResult:
    return FitResult(params=NonlinearityParams.uniform(), objective=1.0, iterations=0, converged=True)


def _encode_subvector(
    v: np.ndarray,
    meta: DatasetMeta,
    hp: SnesHyperparams,
    rng: np.random.Generator,
    fast_math: bool,
) -> Tuple[Interval, NonlinearityParams, bool, np.ndarray, FitResult, float, float]:
    if v.min() == v.max():
        value = float(np.float32(v[0]))
        iv = Interval(x_min=value, x_max=value)
        codes = np.zeros(v.size, dtype=np.int64)
        loss = float(losses_core(v, NonlinearityFamily.UNIFORM, 0.0, 0.0, value, value, meta.beta, False))
        fell_back = meta.family is not NonlinearityFamily.UNIFORM
        return iv, NonlinearityParams.uniform(), fell_back, codes, _uniform_fit(), loss, loss

    iv = storable_interval(v)
    uniform = float(losses_core(v, NonlinearityFamily.UNIFORM, 0.0, 0.0, iv.x_min, iv.x_max, meta.beta, False))
    if meta.family is NonlinearityFamily.UNIFORM:
        fit = _uniform_fit()
        params = fit.params
        fell_back = False
    else:
        fit = fit_subvector(v, meta.family, meta.beta, hp, rng, iv=iv, fast_math=fast_math)
        params = storable_params(fit.params, iv)
        fell_back = fit.fell_back_to_uniform

    loss = float(losses_core(v, params.family, params.p1, params.p2, iv.x_min, iv.x_max, meta.beta, fast_math))
    if loss > uniform:
        # single precision rounding cost the advantage
        params, loss, fell_back = NonlinearityParams.uniform(), uniform, True
    codes = quantize_core(params.family, params.p1, params.p2, iv.x_min, iv.x_max, v, meta.beta, fast_math)
    return iv, params, fell_back, codes, fit, uniform, loss


def _encode(
    x: np.ndarray, meta: DatasetMeta, hp: SnesHyperparams, rng: np.random.Generator, fast_math: bool
) -> Tuple[EncodedVector, List[FitResult], float]:
    parts = _split(x, meta)
    intervals, params, fell_back, codes, fits = [], [], [], [], []
    uniform_total = nvq_total = 0.0
    for v in parts:
        iv, p, fb, c, fit, uniform, loss = _encode_subvector(v, meta, hp, rng, fast_math)
        intervals.append(iv)
        params.append(p)
        fell_back.append(fb)
        codes.append(c)
        fits.append(fit)
        uniform_total += uniform
        nvq_total += loss
    ev = EncodedVector(
        intervals=intervals, params=params, fell_back=fell_back, codes=pack_codes(np.concatenate(codes), meta.beta)
    )
    objective = 1.0 if uniform_total == 0 else float(ratio(uniform_total, nvq_total))
    return ev, fits, objective


def encode_vector(
    x: np.ndarray,
    meta: DatasetMeta,
    hp: Optional[SnesHyperparams] = None,
    rng: Optional[np.random.Generator] = None,
    fast_math: Optional[bool] = None,
) -> EncodedVector:
    """Center, permute, split and quantize one vector with per-subvector fitted nonlinearities."""
    hp = hp or default_hyperparams()
    rng = rng if rng is not None else np.random.default_rng(settings.seed)
    fast = settings.fast_math if fast_math is None else fast_math
    ev, _, _ = _encode(x, meta, hp, rng, fast)
    return ev


def _check_layout(ev: EncodedVector, meta: DatasetMeta) -> None:
    if ev.m != meta.m:
        raise DomainError(f"encoded vector has {ev.m} subvectors, expected {meta.m}")
    if ev.codes.count != meta.d or ev.codes.beta != meta.beta:
        raise DomainError(
            f"code block holds {ev.codes.count} {ev.codes.beta}-bit codes, expected {meta.d} {meta.beta}-bit codes"
        )


def _subvector_codes(ev: EncodedVector, meta: DatasetMeta) -> np.ndarray:
    _check_layout(ev, meta)
    return unpack_codes(ev.codes).astype(np.int64).reshape(meta.m, meta.sub_dim)


def decode_parts(ev: EncodedVector, meta: DatasetMeta, fast_math: Optional[bool] = None) -> np.ndarray:
    """Reconstructed centered subvectors, shape (m, d/m), in permuted order."""
    fast = settings.fast_math if fast_math is None else fast_math
    codes = _subvector_codes(ev, meta)
    parts = np.empty((meta.m, meta.sub_dim), dtype=np.float64)
    for j, (iv, params) in enumerate(zip(ev.intervals, ev.params)):
        check_feasible(params, iv)
        parts[j] = dequantize_core(params.family, params.p1, params.p2, iv.x_min, iv.x_max, codes[j], meta.beta, fast)
    return parts


def decode_vector(ev: EncodedVector, meta: DatasetMeta, fast_math: Optional[bool] = None) -> np.ndarray:
    """Reconstruct a vector in its original coordinate order."""
    return _merge(decode_parts(ev, meta, fast_math), meta)


def vector_objective(x: np.ndarray, ev: EncodedVector, meta: DatasetMeta, fast_math: Optional[bool] = None) -> float:
    """Sum of uniform losses over sum of stored-nonlinearity losses on the stored layout."""
    fast = settings.fast_math if fast_math is None else fast_math
    parts = _split(x, meta)
    _check_layout(ev, meta)
    uniform = nvq = 0.0
    for v, iv, params in zip(parts, ev.intervals, ev.params):
        # constant subvectors store their value in single precision
        if not iv.is_degenerate and (np.any(v < iv.x_min) or np.any(v > iv.x_max)):
            raise DomainError("vector does not match the stored intervals")
        uniform += float(losses_core(v, NonlinearityFamily.UNIFORM, 0.0, 0.0, iv.x_min, iv.x_max, meta.beta, False))
        nvq += float(losses_core(v, params.family, params.p1, params.p2, iv.x_min, iv.x_max, meta.beta, fast))
    if uniform == 0:
        return 1.0
    return float(ratio(uniform, nvq))


# Dataset encoding


def _encode_chunk(
    chunk: Tuple[int, Sequence[np.ndarray]],
    meta: DatasetMeta,
    hp: SnesHyperparams,
    seed: int,
    fast_math: bool,
) -> List[Tuple[EncodedVector, List[FitResult], float]]:
    start, rows = chunk
    return [_encode(x, meta, hp, child_rng(seed, start + i), fast_math) for i, x in enumerate(rows)]


def encode_dataset(
    dataset: np.ndarray,
    family: NonlinearityFamily,
    beta: int,
    m: int = 1,
    hp: Optional[SnesHyperparams] = None,
    seed: int = 0,
    threads: int = 1,
    partition_seed: Optional[int] = None,
    fast_math: Optional[bool] = None,
    chunk_size: Optional[int] = None,
) -> EncodedDataset:
    """Encode every row of ``dataset``; the output does not depend on ``threads``.

    Vector ``i`` fits with its own random stream derived from ``seed`` and ``i``.
    The partition is drawn from ``partition_seed``, which defaults to ``seed``.
    """
    data = np.asarray(dataset)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DomainError("cannot encode an empty dataset")
    meta = make_meta(data, family, beta, m, seed if partition_seed is None else partition_seed)
    hp = hp or default_hyperparams()
    fast = settings.fast_math if fast_math is None else fast_math

    rows = list(data)
    results = map_chunked(
        _encode_chunk, rows, threads, chunk_size or settings.chunk_size, meta=meta, hp=hp, seed=seed, fast_math=fast
    )
    encoded = EncodedDataset(
        meta=meta,
        vectors=[ev for ev, _, _ in results],
        fits=[fit for _, fits, _ in results for fit in fits],
        objectives=[objective for _, _, objective in results],
    )
    logger.info(
        "encoded %d vectors (%s, beta=%d, m=%d): mean objective %.4f, fallback fraction %.3f",
        meta.n,
        family.value,
        beta,
        m,
        encoded.mean_objective,
        encoded.fallback_fraction,
    )
    fitted = [fit for fit in encoded.fits if fit.iterations > 0]
    stalled = sum(not fit.converged for fit in fitted)
    if fitted and stalled > 0.1 * len(fitted):
        logger.warning("%d of %d fits stopped at the iteration cap", stalled, len(fitted))
    return encoded


def decode_dataset(meta: DatasetMeta, vectors: Sequence[EncodedVector], fast_math: Optional[bool] = None) -> np.ndarray:
    """Reconstruct all vectors as an (n, d) array."""
    out = np.empty((len(vectors), meta.d), dtype=np.float64)
    for i, ev in enumerate(vectors):
        out[i] = decode_vector(ev, meta, fast_math)
    return out


# NVQ1 container


def serialize_container(meta: DatasetMeta, vectors: Sequence[EncodedVector]) -> bytes:
    if len(vectors) != meta.n:
        raise DomainError(f"meta announces {meta.n} vectors, got {len(vectors)}")
    header = np.zeros((), dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["d"] = meta.d
    header["n"] = meta.n
    header["m"] = meta.m
    header["beta"] = meta.beta
    header["family"] = meta.family.code
    header["partition_seed"] = meta.partition_seed

    records = np.zeros(meta.n, dtype=record_dtype(meta.m, meta.d, meta.beta))
    for i, ev in enumerate(vectors):
        _check_layout(ev, meta)
        for j, (iv, params, fell_back) in enumerate(zip(ev.intervals, ev.params, ev.fell_back)):
            records["subvectors"][i, j] = (
                iv.x_min,
                iv.x_max,
                params.p1,
                params.p2,
                (FLAG_FELL_BACK if fell_back else 0) | (FLAG_CONSTANT if iv.is_degenerate else 0),
            )
        records["codes"][i] = np.frombuffer(ev.codes.data, dtype=np.uint8)

    return b"".join(
        [
            header.tobytes(),
            meta.mean.astype("<f4").tobytes(),
            meta.permutation.astype("<u4").tobytes(),
            records.tobytes(),
        ]
    )


def write_nvq_file(path: PathLike, meta: DatasetMeta, vectors: Sequence[EncodedVector]) -> int:
    """Write an NVQ1 container and return its size in bytes."""
    raw = serialize_container(meta, vectors)
    Path(path).write_bytes(raw)
    logger.info("wrote %d vectors to %s (%d bytes)", meta.n, path, len(raw))
    return len(raw)


def _read_header(raw: bytes) -> Any:
    if len(raw) < HEADER.itemsize:
        raise ContainerFormatError("truncated header", offset=len(raw))
    header = np.frombuffer(raw, dtype=HEADER, count=1)[0]
    if bytes(header["magic"]) != MAGIC:
        raise ContainerFormatError(f"bad magic {bytes(header['magic'])!r}", offset=0)
    if int(header["version"]) != FORMAT_VERSION:
        raise ContainerFormatError(f"unsupported format version {int(header['version'])}", offset=4)
    return header


def _decode_record(record: Any, meta: DatasetMeta, offset: int) -> EncodedVector:
    intervals, params, fell_back = [], [], []
    for j, sub in enumerate(record["subvectors"]):
        at = offset + j * SUBVECTOR.itemsize
        x_min, x_max = float(sub["x_min"]), float(sub["x_max"])
        flags = int(sub["flags"])
        if flags & ~(FLAG_FELL_BACK | FLAG_CONSTANT):
            raise ContainerFormatError(f"unknown subvector flags {flags:#x}", offset=at)
        if not x_min <= x_max or bool(flags & FLAG_CONSTANT) != (x_min == x_max):
            raise ContainerFormatError(f"inconsistent interval [{x_min}, {x_max}]", offset=at)
        iv = Interval(x_min=x_min, x_max=x_max)
        family = NonlinearityFamily.UNIFORM if flags & FLAG_FELL_BACK else meta.family
        p = NonlinearityParams(family=family, p1=float(sub["p1"]), p2=float(sub["p2"]))
        try:
            check_feasible(p, iv)
        except ConstraintError as exc:
            raise ContainerFormatError(f"infeasible parameters: {exc}", offset=at) from None
        intervals.append(iv)
        params.append(p)
        fell_back.append(bool(flags & FLAG_FELL_BACK))
    codes = CodeBlock(data=record["codes"].tobytes(), count=meta.d, beta=meta.beta)
    return EncodedVector(intervals=intervals, params=params, fell_back=fell_back, codes=codes)


def parse_container(raw: bytes) -> Tuple[DatasetMeta, List[EncodedVector]]:
    header = _read_header(raw)
    d, n, m, beta = int(header["d"]), int(header["n"]), int(header["m"]), int(header["beta"])
    try:
        family = NonlinearityFamily.from_code(int(header["family"]))
    except ValueError as exc:
        raise ContainerFormatError(str(exc), offset=21) from None

    if m not in SUPPORTED_SUBVECTORS:
        raise ContainerFormatError(f"unsupported subvector count {m}", offset=18)
    if beta not in SUPPORTED_BITS:
        raise ContainerFormatError(f"unsupported bit depth {beta}", offset=20)
    expected = container_size(d, n, m, beta)
    if len(raw) < expected:
        raise ContainerFormatError(f"truncated container: {len(raw)} of {expected} bytes", offset=len(raw))
    if len(raw) > expected:
        raise ContainerFormatError(f"{len(raw) - expected} trailing bytes", offset=expected)

    offset = HEADER.itemsize
    mean = np.frombuffer(raw, dtype="<f4", count=d, offset=offset)
    permutation = np.frombuffer(raw, dtype="<u4", count=d, offset=offset + 4 * d)
    try:
        meta = DatasetMeta(
            d=d,
            n=n,
            m=m,
            beta=beta,
            family=family,
            mean=mean,
            permutation=permutation,
            partition_seed=int(header["partition_seed"]),
        )
    except ValueError as exc:
        raise ContainerFormatError(f"invalid header: {exc}", offset=0) from None

    offset += 8 * d
    rtype = record_dtype(m, d, beta)
    records = np.frombuffer(raw, dtype=rtype, count=n, offset=offset)
    vectors = [_decode_record(record, meta, offset + i * rtype.itemsize) for i, record in enumerate(records)]
    return meta, vectors


def read_nvq_file(path: PathLike) -> Tuple[DatasetMeta, List[EncodedVector]]:
    """Read an NVQ1 container written by ``write_nvq_file``."""
    meta, vectors = parse_container(Path(path).read_bytes())
    logger.info("read %d vectors of dimension %d from %s", meta.n, meta.d, path)
    return meta, vectors
