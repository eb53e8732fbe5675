from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, NamedTuple, Tuple

import numpy as np

from .errors import InvalidRequest

ALL = "all"
MULTI = "multi"
NO_SINGLETONS = ",nosingletons"


class IndexInterval(NamedTuple):
    """1-based inclusive index range [lo, hi] into a grid."""

    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class IntervalScheme:
    kind: str = MULTI
    lam: float = 2.0
    include_singletons: bool = True

    def __post_init__(self) -> None:
        if self.kind not in (ALL, MULTI):
            raise InvalidRequest(f"unknown interval scheme kind {self.kind!r}")
        if self.kind == MULTI and not self.lam > 1.0:
            raise InvalidRequest(f"multiscale factor must exceed 1, got {self.lam!r}")

    @classmethod
    def all_intervals(cls) -> "IntervalScheme":
        return cls(kind=ALL, lam=0.0)

    @classmethod
    def multiscale(cls, lam: float = 2.0, include_singletons: bool = True) -> "IntervalScheme":
        return cls(kind=MULTI, lam=float(lam), include_singletons=include_singletons)

    @classmethod
    def parse(cls, text: str, include_singletons: bool = True) -> "IntervalScheme":
        """Parse ``all`` or ``multi:<lambda>[,nosingletons]`` (``multi`` alone means lambda 2)."""
        value = text.strip().lower()
        if value.endswith(NO_SINGLETONS):
            value = value[: -len(NO_SINGLETONS)]
            include_singletons = False
        if value == ALL:
            return cls.all_intervals()
        if value == MULTI:
            return cls.multiscale(2.0, include_singletons)
        if value.startswith(MULTI + ":"):
            try:
                lam = float(value.split(":", 1)[1])
            except ValueError:
                raise InvalidRequest(f"bad scheme {text!r}")
            return cls.multiscale(lam, include_singletons)
        raise InvalidRequest(f"bad scheme {text!r}; expected 'all' or 'multi:<lambda>'")

    def label(self) -> str:
        if self.kind == ALL:
            return ALL
        suffix = "" if self.include_singletons else NO_SINGLETONS
        return f"{MULTI}:{self.lam:g}{suffix}"


def _levels(n: int, lam: float) -> int:
    # smallest k >= 1 with lam**k >= n, i.e. ceil(log n / log lam) without rounding trouble
    if n <= 1:
        return 0
    k = 1
    while lam**k < n:
        k += 1
    return k


def _multiscale_pairs(n: int, lam: float, include_singletons: bool) -> List[Tuple[int, int]]:
    seen = set()
    pairs: List[Tuple[int, int]] = []
    for k in range(1, _levels(n, lam) + 1):
        width = lam**k
        for j in range(1, math.ceil(n / width) + 1):
            lo = math.floor((j - 1) * width + 1)
            hi = min(math.floor(j * width), n)
            if lo > hi or lo > n or (lo, hi) in seen:
                continue
            seen.add((lo, hi))
            pairs.append((lo, hi))
    if include_singletons or n == 1:
        for i in range(1, n + 1):
            if (i, i) not in seen:
                seen.add((i, i))
                pairs.append((i, i))
    return pairs


@lru_cache(maxsize=64)
def interval_bounds(n: int, scheme: IntervalScheme) -> Tuple[np.ndarray, np.ndarray]:
    """Return read-only arrays (lo, hi) of 1-based bounds in enumeration order."""
    if n < 1:
        raise InvalidRequest(f"grid size must be positive, got {n}")
    if scheme.kind == ALL:
        lo0, hi0 = np.triu_indices(n)
        lo, hi = lo0 + 1, hi0 + 1
    else:
        pairs = _multiscale_pairs(n, scheme.lam, scheme.include_singletons)
        arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        lo, hi = arr[:, 0], arr[:, 1]
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


def enumerate_intervals(n: int, scheme: IntervalScheme) -> List[IndexInterval]:
    lo, hi = interval_bounds(n, scheme)
    return [IndexInterval(int(a), int(b)) for a, b in zip(lo, hi)]


def interval_count(n: int, scheme: IntervalScheme) -> int:
    if scheme.kind == ALL:
        return n * (n + 1) // 2
    return int(interval_bounds(n, scheme)[0].shape[0])
