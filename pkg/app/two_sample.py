"""Equal-support two-sample tests and the closed-form detection bounds.

Statistic helpers take arrays whose last axis runs over design points, so one
call handles a single pair or a (replications, n) batch.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .config import DEFAULT_ALPHA, DELGADO_ASYMPTOTIC_095
from .data_model import Sample
from .errors import DeltaOutOfRange, InvalidRequest, InvalidScenario, SupportMismatch, TooFewPoints
from .intervals import IntervalScheme, interval_bounds
from .noise import sigma_median_values
from .regions import gamma_radicand, interval_sums, loglog_term

logger = logging.getLogger(__name__)

Method = Literal["delgado", "fanlin", "an", "anstar"]


class TestOutcome(BaseModel):
    __test__ = False  # keep pytest from collecting this model

    method: Method
    statistic: float
    critical_value: float
    reject: bool
    alpha: float
    n: int
    worst_interval: Optional[Tuple[int, int]] = None
    details: Dict[str, Any] = Field(default_factory=dict)


def _pair(s1: Sample, s2: Sample) -> Tuple[np.ndarray, np.ndarray]:
    if s1.n != s2.n or not np.array_equal(s1.t, s2.t):
        raise SupportMismatch(f"samples {s1.label!r} and {s2.label!r} do not share their design points")
    if s1.n < 2:
        raise TooFewPoints("two-sample tests need at least 2 points")
    return np.asarray(s1.y), np.asarray(s2.y)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.where(num > 0.0, np.inf, 0.0))
    return out


# ---- Delgado / Neumeyer-Dette cumulative sums ----


def delgado_statistic(d: np.ndarray) -> np.ndarray | float:
    """max_j |sum_{i<=j} D_i| / (sigma_D sqrt n), sigma_D from successive differences of D."""
    d = np.asarray(d, dtype=float)
    n = d.shape[-1]
    peak = np.max(np.abs(np.cumsum(d, axis=-1)), axis=-1)
    sigma = np.asarray(sigma_median_values(d))
    out = _safe_ratio(peak, sigma * math.sqrt(n))
    return float(out) if out.ndim == 0 else out


def delgado_test(s1: Sample, s2: Sample, alpha: float = DEFAULT_ALPHA, critical: float | None = None) -> TestOutcome:
    y1, y2 = _pair(s1, s2)
    stat = float(delgado_statistic(y1 - y2))
    source = "given"
    if critical is None:
        if math.isclose(alpha, 0.95):
            critical, source = DELGADO_ASYMPTOTIC_095, "asymptotic"
        else:
            from .calibration import delgado_threshold  # lazy import, calibration depends on this module

            critical, source = delgado_threshold(s1.n, alpha), "calibrated"
    return TestOutcome(
        method="delgado",
        statistic=stat,
        critical_value=float(critical),
        reject=stat >= critical,
        alpha=alpha,
        n=s1.n,
        details={"critical_source": source},
    )


# ---- Fan-Lin Fourier test ----


def fourier_coefficients(y: np.ndarray) -> np.ndarray:
    """Orthonormal real trigonometric transform: scaled mean first, then cos/sin pairs by frequency."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    spectrum = np.fft.rfft(y, axis=-1)
    out = np.empty(y.shape)
    out[..., 0] = spectrum[..., 0].real / math.sqrt(n)
    pairs = (n - 1) // 2
    scale = math.sqrt(2.0 / n)
    out[..., 1 : 2 * pairs + 1 : 2] = scale * spectrum[..., 1 : pairs + 1].real
    out[..., 2 : 2 * pairs + 2 : 2] = -scale * spectrum[..., 1 : pairs + 1].imag
    if n % 2 == 0 and n > 1:
        out[..., n - 1] = spectrum[..., n // 2].real / math.sqrt(n)
    return out


def fanlin_statistic(d: np.ndarray, sigma_sq: np.ndarray | float) -> np.ndarray | float:
    """max_m |m^{-1/2} sum_{i<=m} (c_i^2 / sigma^2 - 1)| over the transformed differences."""
    coef = fourier_coefficients(d)
    n = coef.shape[-1]
    var = np.asarray(sigma_sq, dtype=float)[..., None]
    terms = _safe_ratio(coef**2, np.broadcast_to(var, coef.shape)) - 1.0
    partial = np.abs(np.cumsum(terms, axis=-1)) / np.sqrt(np.arange(1, n + 1))
    out = np.max(partial, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def fanlin_variance(y1: np.ndarray, y2: np.ndarray) -> np.ndarray | float:
    s1 = np.asarray(sigma_median_values(y1))
    s2 = np.asarray(sigma_median_values(y2))
    out = s1**2 + s2**2
    return float(out) if out.ndim == 0 else out


def fanlin_test(s1: Sample, s2: Sample, alpha: float = DEFAULT_ALPHA, critical: float | None = None) -> TestOutcome:
    y1, y2 = _pair(s1, s2)
    var = float(fanlin_variance(y1, y2))
    stat = float(fanlin_statistic(y2 - y1, var))
    source = "given"
    if critical is None:
        from .calibration import fanlin_threshold

        critical, source = fanlin_threshold(s1.n, alpha), "calibrated"
    return TestOutcome(
        method="fanlin",
        statistic=stat,
        critical_value=float(critical),
        reject=stat > critical,
        alpha=alpha,
        n=s1.n,
        details={"critical_source": source, "sigma_tilde_sq": var},
    )


# ---- region-based tests ----


def an_interval_statistics(y1: np.ndarray, y2: np.ndarray, scheme: IntervalScheme, scale: np.ndarray | float | None = None) -> np.ndarray:
    """|sum_I D| / sqrt|I| / (sigma1 + sigma2) for every interval; ``scale`` overrides the plug-in sum."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    n = y1.shape[-1]
    lo, hi = interval_bounds(n, scheme)
    raw = np.abs(interval_sums(y1 - y2, lo, hi)) / np.sqrt(hi - lo + 1)
    if scale is None:
        scale = np.asarray(sigma_median_values(y1)) + np.asarray(sigma_median_values(y2))
    den = np.broadcast_to(np.asarray(scale, dtype=float)[..., None], raw.shape)
    return _safe_ratio(raw, den)


def realized_tau(stats: np.ndarray, n: int) -> np.ndarray | float:
    out = np.max(stats, axis=-1) ** 2 / math.log(n)
    return float(out) if np.ndim(out) == 0 else out


def realized_gamma(stats: np.ndarray, n: int, scheme: IntervalScheme) -> np.ndarray | float:
    lo, hi = interval_bounds(n, scheme)
    sizes = (hi - lo + 1).astype(float)
    with np.errstate(invalid="ignore"):
        g = (stats**2 - 2.0 * np.log(n / sizes)) / loglog_term(n, sizes)
    out = np.max(g, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def an_two_sample_test(
    s1: Sample,
    s2: Sample,
    kind: Literal["tau", "gamma"] = "tau",
    threshold: float | None = None,
    scheme: IntervalScheme | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> TestOutcome:
    """Reject when no common function can satisfy both samples' interval bounds."""
    scheme = scheme or IntervalScheme.multiscale(2.0)
    y1, y2 = _pair(s1, s2)
    n = s1.n
    source = "given"
    if threshold is None:
        from .calibration import two_sample_threshold

        threshold, source = two_sample_threshold(kind, n, alpha, scheme), "calibrated"

    stats = an_interval_statistics(y1, y2, scheme)
    lo, hi = interval_bounds(n, scheme)
    if kind == "tau":
        if not threshold > 0.0:
            raise InvalidRequest(f"tau must be positive, got {threshold!r}")
        bounds = np.full(stats.shape, math.sqrt(threshold * math.log(n)))
        statistic = float(realized_tau(stats, n))
        method: Method = "an"
    else:
        sizes = (hi - lo + 1).astype(float)
        bounds = np.sqrt(np.maximum(gamma_radicand(n, sizes, threshold), 0.0))
        statistic = float(realized_gamma(stats, n, scheme))
        method = "anstar"

    ratio = _safe_ratio(stats, bounds)
    worst = int(np.argmax(ratio))
    reject = bool(np.any(stats > bounds))
    return TestOutcome(
        method=method,
        statistic=statistic,
        critical_value=float(threshold),
        reject=reject,
        alpha=alpha,
        n=n,
        worst_interval=(int(lo[worst]), int(hi[worst])),
        details={
            "critical_source": source,
            "scheme": scheme.label(),
            "worst_statistic": float(stats[worst]),
            "worst_bound": float(bounds[worst]),
        },
    )


# ---- detection bounds ----

BoundKind = Literal["tau-all", "tau-multi", "gamma", "delgado"]


class DeviationScenario(BaseModel):
    n: int = Field(..., ge=2)
    delta: float
    sigma1: float = Field(..., ge=0.0)
    sigma2: float = Field(..., ge=0.0)
    eta: float | None = Field(None, ge=0.0)
    tau: float | None = None
    gamma: float | None = None
    lam: float = 2.0


def h_function(delta: float, gamma: float) -> float:
    """delta / (2 log(1/delta) + gamma loglog(e^e/delta)), 0 < delta <= 1."""
    denominator = 2.0 * math.log(1.0 / delta) + gamma * math.log(math.e + math.log(1.0 / delta))
    if not denominator > 0.0:
        raise InvalidScenario(f"h({delta!r}) undefined for gamma={gamma!r}: non-positive denominator")
    return delta / denominator


def detection_bound(scenario: DeviationScenario, kind: BoundKind) -> float:
    """Smallest deviation height eta that the chosen procedure is guaranteed to detect."""
    s = scenario
    if not 0.0 < s.delta <= 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1], got {s.delta!r}")
    n = s.n
    if kind in ("tau-all", "tau-multi"):
        if s.tau is None:
            raise InvalidScenario("tau bounds need a tau value")
        eta = 2.0 * (s.sigma1 + s.sigma2) * math.sqrt(s.tau * math.log(n) / n) / math.sqrt(s.delta)
        if kind == "tau-multi":
            if not s.lam > 1.0:
                raise InvalidScenario(f"lambda must exceed 1, got {s.lam!r}")
            eta *= math.sqrt(s.lam)
        return eta
    if kind == "gamma":
        if s.gamma is None:
            raise InvalidScenario("gamma bound needs a gamma value")
        # h takes sqrt(delta), not delta
        h = h_function(math.sqrt(s.delta), s.gamma)
        return 2.0 * (s.sigma1 + s.sigma2) / math.sqrt(n) / h
    if kind == "delgado":
        sigma = math.hypot(s.sigma1, s.sigma2)
        return 4.48 * sigma / (s.delta * math.sqrt(n))
    raise InvalidScenario(f"unknown bound kind {kind!r}")
