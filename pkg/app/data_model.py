from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import (
    DesignPointOutOfRange,
    DuplicateDesignPoint,
    EmptyInput,
    InvalidRequest,
    LengthMismatch,
    ScaleNotPositive,
    TooFewPoints,
)

logger = logging.getLogger(__name__)


def _frozen(values: Iterable[float], dtype: type = float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sample:
    """One ordered regression sample (t_j, y_j) with t in [0, 1]."""

    t: np.ndarray
    y: np.ndarray
    label: str = ""

    @property
    def n(self) -> int:
        return int(self.t.shape[0])

    def points(self) -> List[Tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.t, self.y)]


def validate_sample(raw_points: Sequence[Tuple[float, float]], label: str = "") -> Sample:
    """Sort raw (t, y) pairs by t and check the design.

    Duplicate t values inside one sample are rejected, never averaged.
    """
    if raw_points is None or len(raw_points) == 0:
        raise EmptyInput(f"sample {label!r} has no points")
    arr = np.asarray(raw_points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidRequest(f"sample {label!r}: expected (t, y) pairs")
    if not np.all(np.isfinite(arr)):
        raise InvalidRequest(f"sample {label!r} contains non-finite values")

    order = np.argsort(arr[:, 0], kind="stable")
    t = arr[order, 0]
    y = arr[order, 1]

    dup = np.flatnonzero(np.diff(t) == 0.0)
    if dup.size:
        raise DuplicateDesignPoint(f"sample {label!r}: t={t[dup[0]]!r} appears more than once")
    bad = np.flatnonzero((t < 0.0) | (t > 1.0))
    if bad.size:
        raise DesignPointOutOfRange(f"sample {label!r}: t={t[bad[0]]!r} outside [0, 1]")
    if t.shape[0] < 2:
        raise TooFewPoints(f"sample {label!r} needs at least 2 points")

    return Sample(t=_frozen(t), y=_frozen(y), label=label)


def sample_from_arrays(t: Sequence[float], y: Sequence[float], label: str = "") -> Sample:
    if len(t) != len(y):
        raise LengthMismatch(f"sample {label!r}: {len(t)} t values but {len(y)} y values")
    return validate_sample(list(zip(t, y)), label=label)


@dataclass(frozen=True)
class MergedGrid:
    """Union support of k samples with precision-weighted responses.

    ``cum_y`` and ``cum_w`` have length n + 1 and start at 0.
    ``sample_positions[i]`` maps sample i's points to grid indices (0-based).
    """

    t: np.ndarray
    y: np.ndarray
    sigma_weight: np.ndarray
    cum_y: np.ndarray
    cum_w: np.ndarray
    source_map: Tuple[Tuple[Tuple[int, int], ...], ...]
    sample_positions: Tuple[np.ndarray, ...] = field(default=())

    @property
    def n(self) -> int:
        return int(self.t.shape[0])


def merge_samples(samples: Sequence[Sample], scales: Sequence[float]) -> MergedGrid:
    if not samples:
        raise EmptyInput("no samples to merge")
    if len(scales) != len(samples):
        raise LengthMismatch(f"{len(samples)} samples but {len(scales)} scales")
    for s, sigma in zip(samples, scales):
        if not (sigma > 0.0) or not np.isfinite(sigma):
            raise ScaleNotPositive(f"scale for sample {s.label!r} must be positive, got {sigma!r}")

    t_all = np.concatenate([s.t for s in samples])
    y_all = np.concatenate([s.y for s in samples])
    w_all = np.concatenate([np.full(s.n, 1.0 / float(sig) ** 2) for s, sig in zip(samples, scales)])
    src_sample = np.concatenate([np.full(s.n, i, dtype=int) for i, s in enumerate(samples)])
    src_index = np.concatenate([np.arange(s.n, dtype=int) for s in samples])

    # ties are exact float equality; sum order is canonical so sample order cannot matter
    order = np.lexsort((w_all, y_all, t_all))
    grid_t, inverse_sorted, counts = np.unique(t_all[order], return_inverse=True, return_counts=True)
    inverse = np.empty_like(inverse_sorted)
    inverse[order] = inverse_sorted

    sigma_weight = np.bincount(inverse_sorted, weights=w_all[order], minlength=grid_t.size)
    weighted = np.bincount(inverse_sorted, weights=(w_all * y_all)[order], minlength=grid_t.size)
    grid_y = weighted / sigma_weight
    single = counts == 1
    grid_y[inverse[single[inverse]]] = y_all[single[inverse]]

    cum_y = np.concatenate([[0.0], np.cumsum(sigma_weight * grid_y)])
    cum_w = np.concatenate([[0.0], np.cumsum(sigma_weight)])

    contributors: List[List[Tuple[int, int]]] = [[] for _ in range(grid_t.size)]
    for pos in order:
        contributors[int(inverse[pos])].append((int(src_sample[pos]), int(src_index[pos])))
    source_map = tuple(tuple(sorted(c)) for c in contributors)

    offsets = np.cumsum([0] + [s.n for s in samples])
    positions = tuple(
        _frozen(inverse[offsets[i] : offsets[i + 1]], dtype=int) for i in range(len(samples))
    )
    logger.debug("merged %d samples onto %d grid points", len(samples), grid_t.size)
    return MergedGrid(
        t=_frozen(grid_t),
        y=_frozen(grid_y),
        sigma_weight=_frozen(sigma_weight),
        cum_y=_frozen(cum_y),
        cum_w=_frozen(cum_w),
        source_map=source_map,
        sample_positions=positions,
    )
