"""
Seed-per-task helpers for Monte Carlo work.

Every task owns a generator derived from (master_seed, stream, index), so
results are identical for any thread count or scheduling order.
"""

import zlib
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def _stream_key(stream: str) -> int:
    return zlib.crc32(stream.encode("utf-8"))


def derive_seed(master_seed: int, stream: str, index: int = 0) -> np.random.SeedSequence:
    """Independent seed sequence for one task."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(_stream_key(stream), index))


def derive_rng(master_seed: int, stream: str, index: int = 0) -> np.random.Generator:
    """Independent generator for one task."""
    return np.random.default_rng(derive_seed(master_seed, stream, index))


def parallel_map(fn: Callable[[T], R], tasks: Iterable[T], threads: int = 1) -> list[R]:
    """Order-preserving map over tasks, optionally on a thread pool."""
    items = list(tasks)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
