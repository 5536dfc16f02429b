"""Process-pool fan-out for sweeps; results come back in submission order
whatever the worker count."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from zsync import settings

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int | None = None) -> list[R]:
    """map(fn, items) over up to `jobs` worker processes (fn must be picklable)."""
    items = list(items)
    jobs = settings.DEFAULT_JOBS if jobs is None else int(jobs)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * jobs))
    log.debug("fanning %d jobs over %d workers (chunk %d)", len(items), jobs, chunk)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
