from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
        fn: Callable[[T], R],
        items: Sequence[T],
        threads: int = 1,
        timeout: Optional[float] = None,
) -> List[R]:
    """
    Apply ``fn`` to every item, results in input order.

    ``threads <= 1`` runs inline on the calling thread, which keeps
    single-threaded runs free of executor overhead and fully deterministic.
    """
    if not items:
        return []

    if threads <= 1 or len(items) == 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [f.result(timeout=timeout) for f in futures]

