"""Index-ordered parallel map shared by the replica-heavy pipelines."""

from concurrent.futures import ThreadPoolExecutor

_threads = 1


def set_threads(n: int) -> None:
    """Cap the worker threads used by :func:`pmap` (1 means sequential)."""
    global _threads
    if n < 1:
        raise ValueError("thread count must be at least 1")
    _threads = int(n)


def get_threads() -> int:
    return _threads


def pmap(fn, items, threads=None):
    """``[fn(x) for x in items]`` with results in input order.

    Every item is computed independently, so the output does not depend on
    the thread count.
    """
    items = list(items)
    threads = _threads if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
