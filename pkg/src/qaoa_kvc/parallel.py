"""Order-preserving process pool map with single-threaded BLAS in every worker."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from threadpoolctl import threadpool_limits

T = TypeVar("T")
R = TypeVar("R")


def _init_worker():
    threadpool_limits(1)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        with threadpool_limits(1):
            return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker) as ex:
        return list(ex.map(fn, items, chunksize=1))
