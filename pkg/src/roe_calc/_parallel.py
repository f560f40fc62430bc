import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap():
    """Worker count, capped by ROE_CALC_THREADS when set."""
    raw = os.environ.get("ROE_CALC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Ordered map; results never depend on scheduling."""
    items = list(items)
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
