"""Monte Carlo calibration of the region thresholds and two-sample critical values.

Every target reduces to: simulate a scalar statistic under pure N(0, 1)
noise, then read off its empirical alpha-quantile. With plug_in_scale (the
default) each replication is standardised by its own median-difference
scale estimate, matching how the regions are built on observed data.
Replications run in fixed-size chunks whose random streams depend only on
the master seed and the (target, n, scheme, plug-in) tag, so results do
not change with the thread count. The stream tag excludes alpha: at a fixed
seed, thresholds are monotone in alpha.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from .cache import CalibrationCache, cache_key
from .config import (
    DEFAULT_REPLICATIONS,
    DEFAULT_SCHEME,
    DEFAULT_SEED,
    DELGADO_WALK_STEPS,
    FORMAT_VERSION,
)
from .errors import InvalidRequest
from .intervals import IntervalScheme, interval_count
from .montecarlo import cdf_slice, empirical_quantile, quantile_standard_error, run_chunked, stream_tag
from .noise import sigma_median_values
from .regions import w_statistics
from .two_sample import (
    an_interval_statistics,
    delgado_statistic,
    fanlin_statistic,
    fanlin_variance,
    realized_gamma,
    realized_tau,
)

logger = logging.getLogger(__name__)

# Cap on floats materialised per block of (replications x intervals)
BLOCK_CELLS = 4_000_000


class Target(str, Enum):
    TAU_SINGLE = "TauSingle"
    GAMMA_SINGLE = "GammaSingle"
    TAU_TWO_SAMPLE = "TauTwoSample"
    GAMMA_TWO_SAMPLE = "GammaTwoSample"
    DELGADO_ASYMPTOTIC = "DelgadoAsymptotic"
    DELGADO_FINITE = "DelgadoFinite"
    FANLIN_FINITE = "FanLinFinite"


class CalibrationRequest(BaseModel):
    target: Target
    n: int = Field(..., ge=2)
    scheme: str = DEFAULT_SCHEME
    alpha: float = Field(..., gt=0.0, lt=1.0)
    replications: int = Field(DEFAULT_REPLICATIONS, ge=100)
    master_seed: int = DEFAULT_SEED
    plug_in_scale: bool = Field(True, description="estimate sigma per sample; False uses the known sigma = 1")
    walk_steps: int = Field(DELGADO_WALK_STEPS, ge=10)

    @field_validator("scheme")
    @classmethod
    def _canonical_scheme(cls, value: str) -> str:
        try:
            return IntervalScheme.parse(value).label()
        except InvalidRequest as exc:
            raise ValueError(str(exc)) from exc

    @property
    def interval_scheme(self) -> IntervalScheme:
        return IntervalScheme.parse(self.scheme)

    @property
    def effective_n(self) -> int:
        return self.walk_steps if self.target == Target.DELGADO_ASYMPTOTIC else self.n

    def key(self) -> str:
        return cache_key(
            self.target.value,
            self.effective_n,
            self.scheme,
            self.alpha,
            self.replications,
            self.master_seed,
            self.plug_in_scale,
        )


class CalibrationResult(BaseModel):
    target: Target
    n: int
    scheme: str
    alpha: float
    threshold: float
    raw_quantile: float = Field(..., description="alpha-quantile of the simulated max statistic")
    standard_error: float = Field(..., ge=0.0)
    replications: int
    seed: int
    plug_in_scale: bool = True
    empirical_cdf_slice: List[float]
    format_version: str = FORMAT_VERSION


def make_request(**kwargs: object) -> CalibrationRequest:
    """Build a request, mapping pydantic validation failures onto InvalidRequest."""
    try:
        return CalibrationRequest(**kwargs)  # type: ignore[arg-type]
    except ValidationError as exc:
        raise InvalidRequest(str(exc)) from exc


def _blockwise(z_rows: int, width: int, compute: Callable[[slice], np.ndarray]) -> np.ndarray:
    step = max(1, BLOCK_CELLS // max(width, 1))
    return np.concatenate([compute(slice(i, i + step)) for i in range(0, z_rows, step)])


def _single_sampler(
    n: int, scheme: IntervalScheme, kind: str, plug_in: bool
) -> Callable[[np.random.Generator, int], np.ndarray]:
    width = interval_count(n, scheme)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, n))

        def block(rows: slice) -> np.ndarray:
            stats = w_statistics(z[rows], scheme)
            if plug_in:
                # same median-difference scale the regions use on real data
                stats = stats / np.asarray(sigma_median_values(z[rows]))[..., None]
            if kind == "tau":
                return np.max(stats, axis=-1)
            return np.asarray(realized_gamma(stats, n, scheme))

        return _blockwise(size, width, block)

    return draw


def _two_sample_sampler(
    n: int, scheme: IntervalScheme, kind: str, plug_in: bool
) -> Callable[[np.random.Generator, int], np.ndarray]:
    width = interval_count(n, scheme)
    known = None if plug_in else 2.0

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z1 = rng.standard_normal((size, n))
        z2 = rng.standard_normal((size, n))

        def block(rows: slice) -> np.ndarray:
            stats = an_interval_statistics(z1[rows], z2[rows], scheme, scale=known)
            if kind == "tau":
                return np.asarray(realized_tau(stats, n))
            return np.asarray(realized_gamma(stats, n, scheme))

        return _blockwise(size, width, block)

    return draw


def _delgado_walk_sampler(steps: int) -> Callable[[np.random.Generator, int], np.ndarray]:
    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        def block(rows: slice) -> np.ndarray:
            count = len(range(*rows.indices(size)))
            walk = np.cumsum(rng.standard_normal((count, steps)), axis=-1)
            return np.max(np.abs(walk), axis=-1) / math.sqrt(steps)

        return _blockwise(size, steps, block)

    return draw


def _delgado_finite_sampler(n: int, plug_in: bool) -> Callable[[np.random.Generator, int], np.ndarray]:
    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        d = rng.standard_normal((size, n)) - rng.standard_normal((size, n))
        if plug_in:
            return np.asarray(delgado_statistic(d))
        return np.max(np.abs(np.cumsum(d, axis=-1)), axis=-1) / math.sqrt(2.0 * n)

    return draw


def _fanlin_sampler(n: int, plug_in: bool) -> Callable[[np.random.Generator, int], np.ndarray]:
    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z1 = rng.standard_normal((size, n))
        z2 = rng.standard_normal((size, n))
        var = fanlin_variance(z1, z2) if plug_in else np.full(size, 2.0)
        return np.asarray(fanlin_statistic(z2 - z1, var))

    return draw


def simulate_statistic(req: CalibrationRequest, threads: int | None = None) -> np.ndarray:
    """Raw null-distribution sample of the target's statistic, one value per replication."""
    scheme = req.interval_scheme
    target = req.target
    if target == Target.TAU_SINGLE:
        draw = _single_sampler(req.n, scheme, "tau", req.plug_in_scale)
    elif target == Target.GAMMA_SINGLE:
        draw = _single_sampler(req.n, scheme, "gamma", req.plug_in_scale)
    elif target == Target.TAU_TWO_SAMPLE:
        draw = _two_sample_sampler(req.n, scheme, "tau", req.plug_in_scale)
    elif target == Target.GAMMA_TWO_SAMPLE:
        draw = _two_sample_sampler(req.n, scheme, "gamma", req.plug_in_scale)
    elif target == Target.DELGADO_ASYMPTOTIC:
        draw = _delgado_walk_sampler(req.walk_steps)
    elif target == Target.DELGADO_FINITE:
        draw = _delgado_finite_sampler(req.n, req.plug_in_scale)
    else:
        draw = _fanlin_sampler(req.n, req.plug_in_scale)
    tag = stream_tag(target.value, req.effective_n, req.scheme, int(req.plug_in_scale))
    return run_chunked(draw, req.replications, req.master_seed, tag, threads=threads)


def _summarise(req: CalibrationRequest, values: np.ndarray) -> CalibrationResult:
    q = empirical_quantile(values, req.alpha)
    se = quantile_standard_error(values, req.alpha)
    threshold = q
    raw = q
    window = cdf_slice(values, req.alpha)
    if req.target == Target.TAU_SINGLE:
        log_n = math.log(req.n)
        threshold = q * q / log_n
        # delta method on q^2 / log n
        se = 2.0 * q * se / log_n
        window = [v * v / log_n for v in window]
    elif req.target == Target.TAU_TWO_SAMPLE:
        raw = math.sqrt(max(q, 0.0) * math.log(req.n))
    return CalibrationResult(
        target=req.target,
        n=req.effective_n,
        scheme=req.scheme,
        alpha=req.alpha,
        threshold=float(threshold),
        raw_quantile=float(raw),
        standard_error=float(abs(se)),
        replications=int(values.size),
        seed=req.master_seed,
        plug_in_scale=req.plug_in_scale,
        empirical_cdf_slice=window,
    )


def calibrate(
    req: CalibrationRequest,
    cache: Optional[CalibrationCache] = None,
    threads: int | None = None,
) -> CalibrationResult:
    key = req.key()
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            try:
                logger.info("calibration cache hit %s", key)
                return CalibrationResult.model_validate(hit)
            except ValidationError:
                logger.warning("discarding malformed cache entry %s", key)
    logger.info("calibrating %s n=%d scheme=%s reps=%d", req.target.value, req.effective_n, req.scheme, req.replications)
    result = _summarise(req, simulate_statistic(req, threads=threads))
    if cache is not None:
        cache.put(key, result.model_dump(mode="json"))
    return result


def _require(req: CalibrationRequest, *targets: Target) -> None:
    if req.target not in targets:
        names = ", ".join(t.value for t in targets)
        raise InvalidRequest(f"target {req.target.value} not handled here; expected one of {names}")


def calibrate_tau(req: CalibrationRequest, cache: CalibrationCache | None = None, threads: int | None = None) -> CalibrationResult:
    _require(req, Target.TAU_SINGLE)
    return calibrate(req, cache, threads)


def calibrate_gamma(req: CalibrationRequest, cache: CalibrationCache | None = None, threads: int | None = None) -> CalibrationResult:
    _require(req, Target.GAMMA_SINGLE)
    return calibrate(req, cache, threads)


def calibrate_delgado(req: CalibrationRequest, cache: CalibrationCache | None = None, threads: int | None = None) -> CalibrationResult:
    _require(req, Target.DELGADO_ASYMPTOTIC, Target.DELGADO_FINITE)
    return calibrate(req, cache, threads)


def calibrate_fanlin(req: CalibrationRequest, cache: CalibrationCache | None = None, threads: int | None = None) -> CalibrationResult:
    _require(req, Target.FANLIN_FINITE)
    return calibrate(req, cache, threads)


def calibrate_two_sample(req: CalibrationRequest, cache: CalibrationCache | None = None, threads: int | None = None) -> CalibrationResult:
    _require(req, Target.TAU_TWO_SAMPLE, Target.GAMMA_TWO_SAMPLE)
    return calibrate(req, cache, threads)


def gamma_approximation(n: int) -> float:
    """Fitted curve for gamma_n(0.95) under the dyadic scheme; a cross-check only."""
    return 5.77 - math.exp(2.89 - 0.6 * math.log(n))


# ---- threshold lookups used by the tests and the joint fit ----


@lru_cache(maxsize=256)
def _lookup(target: str, n: int, scheme: str, alpha: float, replications: int, seed: int, plug_in: bool = True) -> float:
    req = make_request(
        target=target, n=n, scheme=scheme, alpha=alpha, replications=replications, master_seed=seed, plug_in_scale=plug_in
    )
    return calibrate(req).threshold


def tau_threshold(
    n: int,
    alpha: float,
    scheme: IntervalScheme,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED,
    plug_in: bool = True,
) -> float:
    return _lookup(Target.TAU_SINGLE.value, n, scheme.label(), alpha, replications, seed, plug_in)


def gamma_threshold(
    n: int,
    alpha: float,
    scheme: IntervalScheme,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED,
    plug_in: bool = True,
) -> float:
    return _lookup(Target.GAMMA_SINGLE.value, n, scheme.label(), alpha, replications, seed, plug_in)


def two_sample_threshold(
    kind: str, n: int, alpha: float, scheme: IntervalScheme, replications: int = DEFAULT_REPLICATIONS, seed: int = DEFAULT_SEED
) -> float:
    target = Target.TAU_TWO_SAMPLE if kind == "tau" else Target.GAMMA_TWO_SAMPLE
    return _lookup(target.value, n, scheme.label(), alpha, replications, seed)


def delgado_threshold(n: int, alpha: float, replications: int = DEFAULT_REPLICATIONS, seed: int = DEFAULT_SEED) -> float:
    return _lookup(Target.DELGADO_FINITE.value, n, DEFAULT_SCHEME, alpha, replications, seed)


def fanlin_threshold(n: int, alpha: float, replications: int = DEFAULT_REPLICATIONS, seed: int = DEFAULT_SEED) -> float:
    return _lookup(Target.FANLIN_FINITE.value, n, DEFAULT_SCHEME, alpha, replications, seed)
