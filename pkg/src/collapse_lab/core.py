"""Worker pool and seeded random streams shared by the ensemble runners."""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import hashlib
import os
import pickle
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

MAX_WORKERS_ENVAR_NAME = "COLLAPSE_LAB_THREADS"
DEFAULT_MAX_WORKERS = 8

T = TypeVar("T")
R = TypeVar("R")


def _max_workers() -> int:
    return int(os.environ.get(MAX_WORKERS_ENVAR_NAME, DEFAULT_MAX_WORKERS))


def _set_max_workers(max_workers: int) -> None:
    os.environ[MAX_WORKERS_ENVAR_NAME] = str(max_workers)
    _get_executor(True)


def _get_executor(reset=False) -> ThreadPoolExecutor:
    if reset or not hasattr(_get_executor, "executor"):
        _get_executor.executor = ThreadPoolExecutor(_max_workers())
    return _get_executor.executor


def _stream_key(seed: int, index: int) -> int:
    # Hash the pickled pair so that neighbouring seeds/indices land far apart
    serialized = pickle.dumps((int(seed), int(index)))
    return int(hashlib.sha256(serialized).hexdigest()[:32], 16)


def run_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the independent random stream of run ``index`` under ``seed``.

    Streams are counter-based (Philox) and keyed by a hash of the pair, so a
    run's draws depend only on ``(seed, index)``, never on scheduling.

    """
    return np.random.Generator(np.random.Philox(_stream_key(seed, index)))


def run_streams(seed: int, start: int, count: int) -> List[np.random.Generator]:
    """Return the streams of runs ``start .. start + count - 1``."""
    return [run_stream(seed, start + i) for i in range(count)]


def split_blocks(n_items: int, block_size: int) -> List[range]:
    """Split ``range(n_items)`` into consecutive blocks of ``block_size``."""
    return [
        range(start, min(start + block_size, n_items))
        for start in range(0, n_items, block_size)
    ]


def map_ordered(func: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """Map ``func`` over ``items`` on the shared pool, keeping input order."""
    if len(items) <= 1:
        return [func(item) for item in items]
    futures = [_get_executor().submit(func, item) for item in items]
    return [future.result() for future in futures]
