"""Constrained separable natural evolution strategy fitting one (sub)vector at a time.

Each fit owns its search state and random stream, so fits of different
(sub)vectors are independent and can run in any order or process.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core.config import settings
from .core.errors import ConstantVectorError, DomainError, FitError, NoFitNeededError
from .core.workers import map_chunked
from .nonlinearity import initial_snes_state, project_theta, search_offset
from .quantizer import check_beta, losses_core, ratio
from .schemas import FitResult, Interval, NonlinearityFamily, NonlinearityParams, SnesHyperparams, SnesState

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], np.ndarray]
Projection = Callable[[np.ndarray], np.ndarray]


def default_hyperparams(
    param_dim: int = 2, *, tol: float = 1e-4, min_iters: int = 10, max_iters: int = 100
) -> SnesHyperparams:
    """Sample count and learning rates recommended for a ``param_dim``-dimensional search."""
    if param_dim < 1:
        raise DomainError("param_dim must be at least 1")
    return SnesHyperparams(
        T=2 * (4 + int(math.floor(3 * math.log(param_dim)))),
        eta_mu=1.0,
        eta_sigma=(3 + math.log(param_dim)) / (5 * math.sqrt(param_dim)),
        tol=tol,
        min_iters=min(min_iters, max_iters),
        max_iters=max_iters,
    )


def snes_utilities(T: int) -> np.ndarray:
    """Rank-based fitness shaping; entry k is the utility of the k-th best sample."""
    if T < 2:
        raise DomainError("T must be at least 2")
    ranks = np.arange(1, T + 1)
    raw = np.maximum(0.0, math.log(T / 2 + 1) - np.log(ranks))
    return raw / raw.sum() - 1.0 / T


def _sample_utilities(fitness: np.ndarray, shaped: np.ndarray) -> np.ndarray:
    # Stable order by sample index; samples of equal fitness share their mean utility
    order = np.argsort(-fitness, kind="stable")
    ranked = fitness[order]
    utilities = np.empty_like(shaped)
    start = 0
    while start < ranked.size:
        stop = start + 1
        while stop < ranked.size and ranked[stop] == ranked[start]:
            stop += 1
        utilities[order[start:stop]] = shaped[start:stop].mean()
        start = stop
    return utilities


def _iterate(
    state: SnesState,
    objective: Objective,
    project: Projection,
    hp: SnesHyperparams,
    rng: np.random.Generator,
    shaped: np.ndarray,
) -> Tuple[SnesState, np.ndarray, np.ndarray]:
    samples = rng.standard_normal((hp.T, state.mu.size))
    candidates = project(state.mu + state.sigma * samples)
    fitness = np.asarray(objective(candidates), dtype=np.float64)
    if fitness.shape != (hp.T,) or not np.all(np.isfinite(fitness)):
        raise FitError(f"objective returned non-finite values at iteration {state.iteration + 1}: {fitness}")

    utilities = _sample_utilities(fitness, shaped)
    grad_mu = utilities @ samples
    grad_sigma = utilities @ (samples**2 - 1.0)
    mu = np.maximum(state.mu + hp.eta_mu * state.sigma * grad_mu, 0.0)
    sigma = state.sigma * np.exp(hp.eta_sigma / 2 * grad_sigma)
    return SnesState(mu=mu, sigma=sigma, iteration=state.iteration + 1), candidates, fitness


def snes_step(
    state: SnesState, objective: Objective, project: Projection, hp: SnesHyperparams, rng: np.random.Generator
) -> SnesState:
    """One iteration: sample, project, rank, and take the natural-gradient step.

    ``objective`` maps a (T, p) array of projected parameter rows to T fitness
    values, higher being better.
    """
    new_state, _, _ = _iterate(state, objective, project, hp, rng, snes_utilities(hp.T))
    return new_state


def batch_objective(
    v: np.ndarray,
    family: NonlinearityFamily,
    thetas: np.ndarray,
    iv: Interval,
    beta: int,
    fast_math: bool = False,
    baseline: Optional[float] = None,
) -> np.ndarray:
    """Objective ratio of ``v`` for every parameter row of ``thetas``."""
    v = np.asarray(v, dtype=np.float64)
    thetas = np.atleast_2d(thetas)
    if baseline is None:
        baseline = float(losses_core(v, NonlinearityFamily.UNIFORM, 0.0, 0.0, iv.x_min, iv.x_max, beta, False))
    losses = losses_core(v, family, thetas[:, :1], thetas[:, 1:2], iv.x_min, iv.x_max, beta, fast_math)
    return np.asarray(ratio(baseline, losses), dtype=np.float64)


def _uniform_result(iterations: int = 0) -> FitResult:
    return FitResult(
        params=NonlinearityParams.uniform(),
        objective=1.0,
        iterations=iterations,
        fell_back_to_uniform=True,
        converged=True,
    )


def fit_subvector(
    v: np.ndarray,
    family: NonlinearityFamily,
    beta: int,
    hp: Optional[SnesHyperparams] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    iv: Optional[Interval] = None,
    fast_math: Optional[bool] = None,
) -> FitResult:
    """Fit the parameters of ``family`` that maximize the objective ratio of ``v``.

    Returns the best parameters evaluated during the search; when none beats
    the uniform quantizer the uniform fallback is returned with objective 1.
    """
    if family is NonlinearityFamily.UNIFORM:
        raise NoFitNeededError("the uniform family has no parameters to fit")
    check_beta(beta)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise DomainError("cannot fit an empty vector")
    iv = iv or Interval(x_min=float(v.min()), x_max=float(v.max()))
    if iv.is_degenerate:
        raise ConstantVectorError("constant (sub)vector has nothing to fit")
    hp = hp or default_hyperparams()
    rng = rng if rng is not None else np.random.default_rng(settings.seed)
    fast = settings.fast_math if fast_math is None else fast_math

    baseline = float(losses_core(v, NonlinearityFamily.UNIFORM, 0.0, 0.0, iv.x_min, iv.x_max, beta, False))
    if baseline == 0:
        logger.debug("zero uniform loss, skipping fit")
        return _uniform_result()

    offset = search_offset(family, iv)

    def objective(thetas: np.ndarray) -> np.ndarray:
        return batch_objective(v, family, thetas + offset, iv, beta, fast, baseline)

    def project(thetas: np.ndarray) -> np.ndarray:
        return project_theta(family, thetas + offset, iv) - offset

    mu, sigma = initial_snes_state(family)
    state = SnesState(mu=project(mu - offset), sigma=sigma)
    shaped = snes_utilities(hp.T)

    best_theta = project(state.mu)
    best = float(objective(best_theta)[0])
    converged = False
    while state.iteration < hp.max_iters:
        previous = state.mu
        state, candidates, fitness = _iterate(state, objective, project, hp, rng, shaped)
        top = int(np.argmax(fitness))
        if fitness[top] > best:
            best, best_theta = float(fitness[top]), candidates[top]
        at_mean = project(state.mu)
        value = float(objective(at_mean)[0])
        if value > best:
            best, best_theta = value, at_mean
        if state.iteration >= hp.min_iters and np.max(np.abs(state.mu - previous)) < hp.tol:
            converged = True
            break

    logger.debug(
        "fit %s: objective=%.4f after %d iterations (converged=%s)", family.value, best, state.iteration, converged
    )
    if best < 1.0:
        return FitResult(
            params=NonlinearityParams.uniform(),
            objective=1.0,
            iterations=state.iteration,
            fell_back_to_uniform=True,
            converged=converged,
        )
    natural = best_theta + offset
    return FitResult(
        params=NonlinearityParams(family=family, p1=float(natural[0]), p2=float(natural[1])),
        objective=best,
        iterations=state.iteration,
        converged=converged,
    )


def child_rng(seed: int, index: int) -> np.random.Generator:
    """Independent random stream of work item ``index`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _fit_chunk(
    chunk: Tuple[int, Sequence[np.ndarray]],
    family: NonlinearityFamily,
    beta: int,
    hp: SnesHyperparams,
    seed: int,
    fast_math: bool,
) -> List[FitResult]:
    start, vectors = chunk
    results = []
    for offset, v in enumerate(vectors):
        try:
            results.append(fit_subvector(v, family, beta, hp, child_rng(seed, start + offset), fast_math=fast_math))
        except ConstantVectorError:
            results.append(_uniform_result())
    return results


def fit_many(
    vectors: Sequence[np.ndarray],
    family: NonlinearityFamily,
    beta: int,
    hp: Optional[SnesHyperparams] = None,
    seed: int = 0,
    threads: int = 1,
    fast_math: Optional[bool] = None,
) -> List[FitResult]:
    """Fit every vector independently; results do not depend on ``threads``."""
    hp = hp or default_hyperparams()
    fast = settings.fast_math if fast_math is None else fast_math
    return map_chunked(
        _fit_chunk,
        list(vectors),
        threads,
        settings.chunk_size,
        family=family,
        beta=beta,
        hp=hp,
        seed=seed,
        fast_math=fast,
    )
