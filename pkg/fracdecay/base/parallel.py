import logging

from multiprocessing.pool import ThreadPool

logger = logging.getLogger(__name__)

def ordered_map(func, items, threads=1):
    """Apply ``func`` to every item and return the results in input order.

    With ``threads > 1`` the calls are spread over a thread pool. numpy and
    scipy release the GIL inside their linear algebra, so eigensolves overlap.
    Reductions over the returned list always run in index order, which keeps
    outputs bit-identical for any thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug("mapping %d items over %d threads", len(items), threads)
    with ThreadPool(processes=threads) as pool:
        return pool.map(func, items, chunksize=1)
