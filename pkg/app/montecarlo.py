from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .config import DEFAULT_THREADS, MC_CHUNK_SIZE

logger = logging.getLogger(__name__)

ChunkFn = Callable[[np.random.Generator, int], np.ndarray]


def stream_tag(*parts: str | int) -> Tuple[int, ...]:
    """Turn a mixed label into the integer spawn key of a random stream."""
    key: List[int] = []
    for part in parts:
        if isinstance(part, int):
            key.append(part)
        else:
            h = hashlib.sha256(str(part).encode("utf-8")).hexdigest()
            key.append(int(h[:8], 16))
    return tuple(key)


def chunk_rng(master_seed: int, tag: Sequence[int], chunk_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(tag) + (chunk_index,))
    return np.random.default_rng(seq)


def chunk_plan(replications: int, chunk_size: int = MC_CHUNK_SIZE) -> List[Tuple[int, int]]:
    full, rest = divmod(int(replications), chunk_size)
    plan = [(c, chunk_size) for c in range(full)]
    if rest:
        plan.append((full, rest))
    return plan


def run_chunked(
    fn: ChunkFn,
    replications: int,
    master_seed: int,
    tag: Sequence[int],
    threads: int | None = None,
    chunk_size: int = MC_CHUNK_SIZE,
) -> np.ndarray:
    """Evaluate ``fn`` on fixed-size chunks, each with its own seeded stream.

    The chunk partition does not depend on ``threads``, so the concatenated
    result is identical for any worker count.
    """
    plan = chunk_plan(replications, chunk_size)
    workers = max(1, min(int(threads or DEFAULT_THREADS), len(plan) or 1))

    def _one(item: Tuple[int, int]) -> np.ndarray:
        index, size = item
        out = np.asarray(fn(chunk_rng(master_seed, tag, index), size))
        logger.debug("chunk %d (%d reps) done", index, size)
        return out

    if workers == 1:
        parts = [_one(item) for item in plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_one, plan))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts, axis=0)


def empirical_quantile(values: np.ndarray, alpha: float) -> float:
    """Linear interpolation between order statistics."""
    return float(np.quantile(np.asarray(values, dtype=float), alpha))


def quantile_standard_error(values: np.ndarray, alpha: float) -> float:
    """Half the spread of the order statistics one binomial SD either side of the quantile."""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    if n < 2:
        return 0.0
    spread = math.sqrt(n * alpha * (1.0 - alpha))
    lo = int(np.clip(math.floor(n * alpha - spread) - 1, 0, n - 1))
    hi = int(np.clip(math.ceil(n * alpha + spread) - 1, 0, n - 1))
    return float(max(ordered[hi] - ordered[lo], 0.0) / 2.0)


def cdf_slice(values: np.ndarray, alpha: float, width: int = 20) -> List[float]:
    """The ``width`` order statistics bracketing the alpha-quantile."""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    if n <= width:
        return [float(v) for v in ordered]
    center = int(math.floor((n - 1) * alpha))
    start = int(np.clip(center - width // 2 + 1, 0, n - width))
    return [float(v) for v in ordered[start : start + width]]


def binomial_se(p: float, n: int) -> float:
    if n <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)
