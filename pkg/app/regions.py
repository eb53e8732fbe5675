from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Sequence, Union

import numpy as np
from pydantic import BaseModel

from .config import COMPENSATED_SUM_THRESHOLD
from .data_model import Sample
from .errors import IndexOutOfRange, InvalidRequest, LengthMismatch, ScaleNotPositive
from .intervals import IndexInterval, IntervalScheme, interval_bounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tau:
    value: float

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise InvalidRequest(f"tau must be positive, got {self.value!r}")

    kind: Literal["tau"] = "tau"


@dataclass(frozen=True)
class Gamma:
    value: float
    kind: Literal["gamma"] = "gamma"


Threshold = Union[Tau, Gamma]


@dataclass(frozen=True)
class RegionSpec:
    scheme: IntervalScheme
    sigma: float
    threshold: Threshold

    def __post_init__(self) -> None:
        if not self.sigma > 0.0 or not math.isfinite(self.sigma):
            raise ScaleNotPositive(f"region scale must be positive, got {self.sigma!r}")


class Violation(BaseModel):
    lo: int
    hi: int
    value: float
    threshold: float


class MembershipReport(BaseModel):
    label: str = ""
    is_member: bool
    violations: List[Violation]
    max_ratio: float
    n: int
    threshold_kind: Literal["tau", "gamma"]
    threshold_value: float
    sigma: float
    clamped_intervals: int = 0

    def worst(self) -> Violation | None:
        if not self.violations:
            return None
        return max(self.violations, key=lambda v: (_ratio(v.value, v.threshold), -v.lo, -v.hi))


def _ratio(value: float, threshold: float) -> float:
    if threshold > 0.0:
        return value / threshold
    return math.inf if value > 0.0 else 0.0


def cumulative_sums(values: Sequence[float]) -> np.ndarray:
    """Prefix sums S_0 = 0, S_m = S_{m-1} + v_m along the last axis (compensated for long inputs)."""
    v = np.asarray(values, dtype=float)
    if v.shape[-1] <= COMPENSATED_SUM_THRESHOLD:
        pad = [(0, 0)] * (v.ndim - 1) + [(1, 0)]
        return np.pad(np.cumsum(v, axis=-1), pad)
    # Kahan summation, one column at a time across all leading axes
    columns = np.moveaxis(v, -1, 0)
    out = np.zeros((columns.shape[0] + 1,) + columns.shape[1:])
    total = np.zeros(columns.shape[1:])
    carry = np.zeros(columns.shape[1:])
    for i, x in enumerate(columns):
        step = x - carry
        t = total + step
        carry = (t - total) - step
        total = t
        out[i + 1] = total
    return np.moveaxis(out, 0, -1)


def interval_sums(residuals: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Sum of residuals over each 1-based interval, along the last axis."""
    prefix = cumulative_sums(residuals)
    return prefix[..., hi] - prefix[..., lo - 1]


def w_statistic(residuals: Sequence[float], interval: IndexInterval) -> float:
    r = np.asarray(residuals, dtype=float)
    lo, hi = int(interval[0]), int(interval[1])
    if lo < 1 or hi > r.size or lo > hi:
        raise IndexOutOfRange(f"interval [{lo}, {hi}] outside 1..{r.size}")
    return float(np.sum(r[lo - 1 : hi]) / math.sqrt(hi - lo + 1))


def w_statistics(residuals: np.ndarray, scheme: IntervalScheme) -> np.ndarray:
    """|w| over every interval of the scheme; works on (..., n) batches."""
    n = np.shape(residuals)[-1]
    lo, hi = interval_bounds(n, scheme)
    return np.abs(interval_sums(residuals, lo, hi)) / np.sqrt(hi - lo + 1)


def loglog_term(n: int, sizes: np.ndarray) -> np.ndarray:
    # log(log(e^e n/|I|)) written as log(e + log(n/|I|)) to avoid overflow
    return np.log(math.e + np.log(n / sizes))


def gamma_radicand(n: int, sizes: np.ndarray, gamma: float) -> np.ndarray:
    return 2.0 * np.log(n / sizes) + gamma * loglog_term(n, sizes)


def interval_thresholds(n: int, scheme: IntervalScheme, sigma: float, threshold: Threshold) -> np.ndarray:
    lo, hi = interval_bounds(n, scheme)
    sizes = (hi - lo + 1).astype(float)
    if isinstance(threshold, Tau):
        bound = sigma * math.sqrt(threshold.value * math.log(n)) if n > 1 else 0.0
        return np.full(sizes.shape, bound)
    return sigma * np.sqrt(np.maximum(gamma_radicand(n, sizes, threshold.value), 0.0))


def membership(
    residuals: Sequence[float],
    spec: RegionSpec,
    label: str = "",
) -> MembershipReport:
    r = np.asarray(residuals, dtype=float)
    n = r.size
    lo, hi = interval_bounds(n, spec.scheme)
    stats = w_statistics(r, spec.scheme)
    bounds = interval_thresholds(n, spec.scheme, spec.sigma, spec.threshold)
    failing = np.flatnonzero(stats > bounds)

    clamped = 0
    if isinstance(spec.threshold, Gamma):
        sizes = (hi - lo + 1).astype(float)
        clamped = int(np.count_nonzero(gamma_radicand(n, sizes, spec.threshold.value) < 0.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bounds > 0.0, stats / np.where(bounds > 0.0, bounds, 1.0), np.where(stats > 0.0, np.inf, 0.0))
    max_ratio = float(ratios.max()) if ratios.size else 0.0

    order = np.lexsort((hi[failing], lo[failing]))
    violations = [
        Violation(lo=int(lo[i]), hi=int(hi[i]), value=float(stats[i]), threshold=float(bounds[i]))
        for i in failing[order]
    ]
    return MembershipReport(
        label=label,
        is_member=not violations,
        violations=violations,
        max_ratio=max_ratio,
        n=n,
        threshold_kind=spec.threshold.kind,
        threshold_value=float(spec.threshold.value),
        sigma=float(spec.sigma),
        clamped_intervals=clamped,
    )


def _residuals(g: Sequence[float], sample: Sample) -> np.ndarray:
    g_arr = np.asarray(g, dtype=float)
    if g_arr.shape != (sample.n,):
        raise LengthMismatch(f"expected {sample.n} function values, got {g_arr.size}")
    return sample.y - g_arr


def region_contains(g: Sequence[float], sample: Sample, spec: RegionSpec) -> MembershipReport:
    """Membership in the region bounded by sigma * sqrt(tau log n) on every interval."""
    if not isinstance(spec.threshold, Tau):
        raise InvalidRequest("region_contains needs a tau threshold")
    return membership(_residuals(g, sample), spec, label=sample.label)


def region_contains_star(g: Sequence[float], sample: Sample, spec: RegionSpec) -> MembershipReport:
    """Membership with the size-dependent bound; negative radicands give bound 0."""
    if not isinstance(spec.threshold, Gamma):
        raise InvalidRequest("region_contains_star needs a gamma threshold")
    return membership(_residuals(g, sample), spec, label=sample.label)


def check_region(g: Sequence[float], sample: Sample, spec: RegionSpec) -> MembershipReport:
    if isinstance(spec.threshold, Tau):
        return region_contains(g, sample, spec)
    return region_contains_star(g, sample, spec)
