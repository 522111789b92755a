"""Chunked map over independent work items, optionally in a process pool."""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Callable, List, Sequence, Tuple, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

ChunkFn = Callable[..., List[R]]


def chunked(items: Sequence[T], size: int) -> List[Tuple[int, Sequence[T]]]:
    """Split ``items`` into (start index, slice) pairs of at most ``size`` items."""
    size = max(1, size)
    return [(start, items[start : start + size]) for start in range(0, len(items), size)]


def map_chunked(fn: ChunkFn, items: Sequence[T], threads: int, chunk_size: int, **kwargs: Any) -> List[R]:
    """Apply ``fn`` to every chunk of ``items`` and concatenate the results in order.

    ``fn`` receives a (start, items) pair plus ``kwargs`` and must be a
    module-level function so that it pickles. Results do not depend on
    ``threads`` as long as ``fn`` derives any randomness from the start index.
    """
    chunks = chunked(items, chunk_size)
    work = partial(fn, **kwargs)
    if threads <= 1 or len(chunks) <= 1:
        parts = [work(chunk) for chunk in chunks]
    else:
        logger.debug("dispatching %d chunks to %d worker processes", len(chunks), threads)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    return [result for part in parts for result in part]
