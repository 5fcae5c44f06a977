"""Order-preserving map over a process pool; serial when threads <= 1."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> Iterator[R]:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return map(fn, items)
    chunk = max(1, len(items) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return iter(list(ex.map(fn, items, chunksize=chunk)))
