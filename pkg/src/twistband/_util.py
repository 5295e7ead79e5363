"""Small shared utilities: ordered parallel map with env-controlled workers."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "TWISTBAND_THREADS"


def thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn, items):
    """Map preserving input order; parallel when TWISTBAND_THREADS > 1."""
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
