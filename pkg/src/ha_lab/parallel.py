"""Order-preserving parallel map capped by ``HA_LAB_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count(default: int | None = None) -> int:
    """Worker count from ``HA_LAB_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("HA_LAB_THREADS", "")
    try:
        n = int(raw) if raw.strip() else 0
    except ValueError:
        n = 0
    if n <= 0:
        n = default if default is not None else (os.cpu_count() or 1)
    return max(1, n)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    items = list(items)
    n = threads if threads is not None else thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
