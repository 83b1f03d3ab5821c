"""Worker-count plumbing with order-preserving reductions.

Results are always combined in submission order, so outputs are byte-identical
for any worker count (the documented fixed-summation-order guarantee).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_workers = 1


def set_workers(n: int | None):
    global _workers
    if n is None:
        env = os.environ.get("CONIC_EM_THREADS")
        n = int(env) if env else 1
    _workers = max(1, int(n))


def get_workers() -> int:
    return _workers


def ordered_map(fn, items, workers: int | None = None):
    """Map preserving input order; runs serially when one worker is configured."""
    n = _workers if workers is None else max(1, int(workers))
    items = list(items)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
