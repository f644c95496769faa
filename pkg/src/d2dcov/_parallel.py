from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable


def _run_block(fn: Callable, args: tuple, start: int, stop: int) -> list:
    return [fn(*args, rep) for rep in range(start, stop)]


def map_replications(fn: Callable, args: tuple, replications: int, workers: int = 1) -> list:
    """``[fn(*args, rep) for rep in range(replications)]``, optionally in processes.

    Blocks are contiguous and reassembled in replication order, so results
    do not depend on ``workers``.
    """
    if workers <= 1 or replications < 2:
        return _run_block(fn, args, 0, replications)
    nblocks = min(replications, 4 * workers)
    bounds = [replications * i // nblocks for i in range(nblocks + 1)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_block, fn, args, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        out: list = []
        for fut in futures:
            out.extend(fut.result())
    return out

