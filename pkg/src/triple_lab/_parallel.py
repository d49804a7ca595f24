"""Deterministic task fan-out helper.

``TRIPLE_LAB_THREADS`` caps the worker count (0 or unset means auto).
Results are returned in submission order, so output is identical for any
worker count; tasks must draw randomness only from per-task seeds.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

_T = TypeVar("_T")
_R = TypeVar("_R")

_ENV_VAR = "TRIPLE_LAB_THREADS"


def worker_count() -> int:
    raw = os.environ.get(_ENV_VAR, "0")
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"{_ENV_VAR} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError(f"{_ENV_VAR} must be >= 0, got {requested}")
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def worker_map(fn: Callable[[_T], _R], items: Sequence[_T] | Iterable[_T]) -> list[_R]:
    """Map ``fn`` over ``items``, preserving order regardless of scheduling."""
    items = list(items)
    workers = min(worker_count(), max(len(items), 1))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
