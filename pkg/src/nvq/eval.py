"""Similarity search on encoded vectors and the reconstruction/retrieval metric suite."""

import logging
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .codec import container_size, decode_dataset, decode_parts, encode_dataset, fvecs_size, vector_objective
from .core.errors import DomainError
from .schemas import (
    DatasetMeta,
    EncodedDataset,
    EncodedVector,
    FitResult,
    MetricsReport,
    NonlinearityFamily,
    QueryResult,
    SnesHyperparams,
)

logger = logging.getLogger(__name__)

_QUERY_BATCH = 4096


def quantized_dot(q: np.ndarray, ev: EncodedVector, meta: DatasetMeta, fast_math: Optional[bool] = None) -> float:
    """<q, x~> accumulated subvector by subvector from the codes, plus <q, mean>."""
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if q.size != meta.d:
        raise DomainError(f"query has dimension {q.size}, expected {meta.d}")
    parts = decode_parts(ev, meta, fast_math)
    permuted = q[meta.permutation].reshape(meta.m, meta.sub_dim)
    return float(np.einsum("ij,ij->", permuted, parts) + q @ meta.mean.astype(np.float64))


def _as_matrix(values: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.ndim != 2:
        raise DomainError(f"{name} must be a 2-d array")
    return matrix


def _top_k(scores: np.ndarray, k: int) -> QueryResult:
    # stable sort keeps the smaller id first among equal scores
    ids = np.argsort(-scores, kind="stable")[:k]
    return QueryResult(ids=ids, scores=scores[ids])


def exact_knn(queries: np.ndarray, dataset: np.ndarray, k: int) -> List[QueryResult]:
    """Exhaustive top-k by dot product for every query."""
    queries = _as_matrix(queries, "queries")
    data = _as_matrix(dataset, "dataset")
    if k < 1 or k > data.shape[0]:
        raise DomainError(f"k={k} must lie in [1, {data.shape[0]}]")
    if queries.shape[1] != data.shape[1]:
        raise DomainError(f"queries have dimension {queries.shape[1]}, dataset {data.shape[1]}")
    results = []
    for start in range(0, queries.shape[0], _QUERY_BATCH):
        scores = queries[start : start + _QUERY_BATCH] @ data.T
        results.extend(_top_k(row, k) for row in scores)
    return results


def approx_knn(
    queries: np.ndarray,
    vectors: Sequence[EncodedVector],
    meta: DatasetMeta,
    k: int,
    fast_math: Optional[bool] = None,
) -> List[QueryResult]:
    """Full-scan top-k over the reconstructed vectors."""
    return exact_knn(queries, decode_dataset(meta, vectors, fast_math), k)


def ground_truth_results(ids: np.ndarray, queries: np.ndarray, dataset: np.ndarray) -> List[QueryResult]:
    """Wrap precomputed neighbor ids (e.g. from an ivecs file) with their exact scores."""
    ids = np.asarray(ids, dtype=np.int64)
    queries = _as_matrix(queries, "queries")
    data = _as_matrix(dataset, "dataset")
    if ids.shape[0] != queries.shape[0]:
        raise DomainError(f"{ids.shape[0]} ground truth rows for {queries.shape[0]} queries")
    if ids.size and (ids.min() < 0 or ids.max() >= data.shape[0]):
        raise DomainError("ground truth ids outside the dataset")
    return [QueryResult(ids=row, scores=data[row] @ q) for row, q in zip(ids, queries)]


def recall_at_k(
    ground: Sequence[QueryResult], approx: Sequence[QueryResult], k: int, depth: Optional[int] = None
) -> float:
    """Fraction of the exact top-k found in the first ``depth`` (default k) approximate ids."""
    if k < 1:
        raise DomainError("k must be positive")
    depth = depth or k
    if not ground:
        return 0.0
    hits = [len(set(g.ids[:k].tolist()) & set(a.ids[:depth].tolist())) / k for g, a in zip(ground, approx)]
    return float(np.mean(hits))


def average_precision(relevant: Iterable[int], ranking: Sequence[int], k: int) -> float:
    relevant_set = set(relevant)
    found = 0
    total = 0.0
    for i, idx in enumerate(ranking[:k], start=1):
        if int(idx) in relevant_set:
            found += 1
            total += found / i
    return total / k


def map_at_k(ground: Sequence[QueryResult], approx: Sequence[QueryResult], k: int) -> float:
    """Mean average precision of the approximate rankings against the exact top-k sets."""
    if k < 1:
        raise DomainError("k must be positive")
    if not ground:
        return 0.0
    return float(np.mean([average_precision(g.ids[:k].tolist(), a.ids.tolist(), k) for g, a in zip(ground, approx)]))


def dot_error(queries: np.ndarray, dataset: np.ndarray, reconstructed: np.ndarray) -> float:
    """Mean over queries of sum over vectors of (<q, x> - <q, x~>)**2."""
    queries = _as_matrix(queries, "queries")
    residual = _as_matrix(dataset, "dataset") - _as_matrix(reconstructed, "reconstructed")
    total = 0.0
    for start in range(0, queries.shape[0], _QUERY_BATCH):
        total += float(np.square(queries[start : start + _QUERY_BATCH] @ residual.T).sum())
    return total / queries.shape[0]


def mip_identity_ratio(
    x: np.ndarray, x_tilde: np.ndarray, n_queries: int, rng: Optional[np.random.Generator] = None
) -> float:
    """Monte-Carlo E[(<q,x> - <q,x~>)**2] / ||x - x~||**2 over standard Gaussian queries."""
    residual = _as_matrix(x, "x") - _as_matrix(x_tilde, "x_tilde")
    norm = float(np.square(residual).sum(axis=1).mean())
    if norm == 0:
        raise DomainError("x and x_tilde are identical; the ratio is undefined")
    rng = rng if rng is not None else np.random.default_rng(0)
    total = 0.0
    for start in range(0, n_queries, _QUERY_BATCH):
        q = rng.standard_normal((min(_QUERY_BATCH, n_queries - start), residual.shape[1]))
        total += float(np.square(q @ residual.T).sum())
    return total / (n_queries * residual.shape[0]) / norm


def convergence_stats(fits: Sequence[FitResult]) -> Dict[str, float]:
    """Share of fits that met the tolerance and their iteration counts; short-circuited fits are skipped."""
    iterations = np.array([fit.iterations for fit in fits if fit.iterations > 0])
    if iterations.size == 0:
        return {"converged_fraction": 1.0, "mean_iterations": 0.0, "median_iterations": 0.0}
    converged = [fit.converged for fit in fits if fit.iterations > 0]
    return {
        "converged_fraction": float(np.mean(converged)),
        "mean_iterations": float(iterations.mean()),
        "median_iterations": float(np.median(iterations)),
    }


def param_spread(fits: Sequence[FitResult]) -> Dict[str, Dict[str, float]]:
    """Per-parameter mean, std and quantiles across the fits that kept a nonlinearity."""
    kept = [fit.params for fit in fits if fit.params.family is not NonlinearityFamily.UNIFORM]
    if not kept:
        return {}
    spread = {}
    for name in ("p1", "p2"):
        values = np.array([getattr(p, name) for p in kept])
        q05, q50, q95 = np.quantile(values, [0.05, 0.5, 0.95])
        spread[name] = {
            "mean": float(values.mean()),
            "std": float(values.std()),
            "q05": float(q05),
            "median": float(q50),
            "q95": float(q95),
        }
    return spread


def objective_histogram(objectives: Sequence[float], bins: int = 20) -> List[Tuple[float, float, int]]:
    """(lower edge, upper edge, count) rows of the per-vector objective distribution."""
    counts, edges = np.histogram(np.asarray(objectives, dtype=np.float64), bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


def error_stats(
    dataset: np.ndarray,
    meta: DatasetMeta,
    vectors: Sequence[EncodedVector],
    queries: np.ndarray,
    k: int = 10,
    ground: Optional[Sequence[QueryResult]] = None,
    fits: Optional[Sequence[FitResult]] = None,
    objectives: Optional[Sequence[float]] = None,
    fast_math: Optional[bool] = None,
) -> MetricsReport:
    """Reconstruction, dot-product and retrieval quality of an encoded dataset."""
    raw = _as_matrix(dataset, "dataset")
    if raw.shape != (meta.n, meta.d) or len(vectors) != meta.n:
        raise DomainError(f"raw dataset {raw.shape} does not match encoded dataset ({meta.n}, {meta.d})")
    queries = _as_matrix(queries, "queries")
    k = min(k, meta.n)
    reconstructed = decode_dataset(meta, vectors, fast_math)

    ground = ground if ground is not None else exact_knn(queries, raw, k)
    approx = exact_knn(queries, reconstructed, k)
    if objectives is None:
        objectives = [vector_objective(x, ev, meta, fast_math) for x, ev in zip(raw, vectors)]
    flags = [flag for ev in vectors for flag in ev.fell_back]

    report = {
        "family": meta.family.value,
        "beta": meta.beta,
        "m": meta.m,
        "k": k,
        "mean_recon_error": float(np.square(raw - reconstructed).sum(axis=1).mean()),
        "mean_dot_error": dot_error(queries, raw, reconstructed),
        "map_at_k": map_at_k(ground, approx, k),
        "recall_at_k": recall_at_k(ground, approx, k),
        "mean_objective": float(np.mean(objectives)),
        "fallback_fraction": float(np.mean(flags)) if flags else 0.0,
        "compression_ratio": fvecs_size(meta.d, meta.n) / container_size(meta.d, meta.n, meta.m, meta.beta),
    }
    if fits:
        report.update(convergence_stats(fits))
        for name, stats in param_spread(fits).items():
            report[f"{name}_mean"] = stats["mean"]
            report[f"{name}_std"] = stats["std"]
    return MetricsReport(**report)


def evaluate_encoded(
    dataset: np.ndarray,
    encoded: EncodedDataset,
    queries: np.ndarray,
    k: int = 10,
    ground: Optional[Sequence[QueryResult]] = None,
    fast_math: Optional[bool] = None,
) -> MetricsReport:
    return error_stats(
        dataset,
        encoded.meta,
        encoded.vectors,
        queries,
        k,
        ground,
        fits=encoded.fits,
        objectives=encoded.objectives,
        fast_math=fast_math,
    )


def iter_sweep(
    dataset: np.ndarray,
    queries: np.ndarray,
    families: Sequence[NonlinearityFamily],
    bits: Sequence[int],
    subvectors: Sequence[int],
    k: int = 10,
    hp: Optional[SnesHyperparams] = None,
    seed: int = 0,
    threads: int = 1,
    ground: Optional[Sequence[QueryResult]] = None,
    fast_math: Optional[bool] = None,
) -> Iterator[Tuple[EncodedDataset, MetricsReport]]:
    """Encode and evaluate every (family, beta, m) combination, in that nesting order."""
    raw = _as_matrix(dataset, "dataset")
    k = min(k, raw.shape[0])
    ground = ground if ground is not None else exact_knn(queries, raw, k)
    for family in families:
        for beta in bits:
            for m in subvectors:
                encoded = encode_dataset(raw, family, beta, m, hp=hp, seed=seed, threads=threads, fast_math=fast_math)
                report = evaluate_encoded(raw, encoded, queries, k, ground, fast_math)
                logger.info(
                    "%s beta=%d m=%d: mse=%.4g map@%d=%.4f recall@%d=%.4f",
                    family.value,
                    beta,
                    m,
                    report.mean_recon_error,
                    k,
                    report.map_at_k,
                    k,
                    report.recall_at_k,
                )
                yield encoded, report


def sweep(
    dataset: np.ndarray,
    queries: np.ndarray,
    families: Sequence[NonlinearityFamily],
    bits: Sequence[int],
    subvectors: Sequence[int],
    k: int = 10,
    hp: Optional[SnesHyperparams] = None,
    seed: int = 0,
    threads: int = 1,
    ground: Optional[Sequence[QueryResult]] = None,
    fast_math: Optional[bool] = None,
) -> List[MetricsReport]:
    """Metrics of every swept configuration."""
    runs = iter_sweep(dataset, queries, families, bits, subvectors, k, hp, seed, threads, ground, fast_math)
    return [report for _, report in runs]
