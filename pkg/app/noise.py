"""Noise scale estimators based on absolute successive differences.

Both estimators work along the last axis, so a (replications, n) matrix of
simulated responses is handled in one call.
"""

from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from .data_model import Sample
from .errors import TooFewPoints

logger = logging.getLogger(__name__)

# 1 / Phi^{-1}(3/4), scaled for the difference of two independent errors
MAD_CONSTANT = 1.4826
DIFF_SCALE = MAD_CONSTANT / math.sqrt(2.0)
HONEST_MIN_POINTS = 100
HONEST_SPREAD = 1.814


class ScaleEstimate(BaseModel):
    value: float = Field(..., ge=0.0)
    method: Literal["median", "honest"]
    n: int
    order_index: int | None = Field(None, description="1-based order statistic used (honest only)")
    clamped: bool = False


def sigma_median_values(y: np.ndarray) -> np.ndarray | float:
    """(1.4826/sqrt 2) * median |y_{j+1} - y_j| along the last axis."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] < 2:
        raise TooFewPoints("scale estimation needs at least 2 points")
    est = DIFF_SCALE * np.median(np.abs(np.diff(y, axis=-1)), axis=-1)
    return float(est) if np.ndim(est) == 0 else est


def honest_order_index(n: int) -> int:
    return math.ceil(n / 2.0 + HONEST_SPREAD * math.sqrt(n))


def sigma_median(sample: Sample) -> ScaleEstimate:
    if sample.n < 2:
        raise TooFewPoints(f"sample {sample.label!r} needs at least 2 points")
    return ScaleEstimate(value=float(sigma_median_values(sample.y)), method="median", n=sample.n)


def sigma_honest(sample: Sample) -> ScaleEstimate:
    """Upper order statistic of the scaled differences; P(value >= sigma) >= 0.99 for n >= 100."""
    n = sample.n
    if n < HONEST_MIN_POINTS:
        raise TooFewPoints(f"honest scale needs n >= {HONEST_MIN_POINTS}, got {n}")
    scaled = np.sort(DIFF_SCALE * np.abs(np.diff(sample.y)))
    index = honest_order_index(n)
    clamped = index > scaled.size
    if clamped:
        logger.warning("honest order index %d exceeds %d differences; clamping", index, scaled.size)
        index = scaled.size
    return ScaleEstimate(
        value=float(scaled[index - 1]),
        method="honest",
        n=n,
        order_index=index,
        clamped=clamped,
    )


def estimate_scale(sample: Sample, method: str = "median") -> ScaleEstimate:
    if method == "honest":
        return sigma_honest(sample)
    return sigma_median(sample)
