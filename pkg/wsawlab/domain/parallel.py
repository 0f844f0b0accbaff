"""Ordered fan-out over worker processes.

Results always come back in input order so reductions are deterministic
regardless of the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

import structlog

T = TypeVar("T")
R = TypeVar("R")

logger = structlog.get_logger()


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply ``fn`` to every item, in a process pool when ``workers > 1``.

    ``fn`` and the items must be picklable when a pool is used.
    """
    tasks = list(items)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    logger.debug("process_pool_started", workers=workers, tasks=len(tasks))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
