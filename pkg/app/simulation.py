"""Scenario generation, the two-sample power study and the localized-deviation detection study."""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .calibration import CalibrationRequest, Target, calibrate
from .cache import CalibrationCache
from .config import DEFAULT_ALPHA, DEFAULT_POWER_REPLICATIONS, DEFAULT_SCHEME, DEFAULT_SEED
from .data_model import Sample, sample_from_arrays
from .errors import InvalidScenario, MissingCalibration
from .intervals import IntervalScheme, interval_bounds
from .joint import JointRegionSpec, adjust_level, joint_region_empty
from .montecarlo import binomial_se, run_chunked, stream_tag
from .noise import sigma_median
from .regions import RegionSpec, Tau, gamma_radicand
from .two_sample import (
    an_interval_statistics,
    delgado_statistic,
    fanlin_statistic,
    fanlin_variance,
    realized_tau,
)

logger = logging.getLogger(__name__)

GId = Literal["G1_shift", "G2_split", "G3_bump", "G4_dipole", "Custom"]
G_IDS: Tuple[str, ...] = ("G1_shift", "G2_split", "G3_bump", "G4_dipole")
POWER_METHODS: Tuple[str, ...] = ("delgado", "fanlin", "an", "anstar")
U_MAX = 0.75


def g_id_from_number(number: int) -> str:
    if not 1 <= number <= 4:
        raise InvalidScenario(f"scenario number must be 1..4, got {number}")
    return G_IDS[number - 1]


def design(n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float) / n


def g_values(g_id: str, eta: float, t: np.ndarray, u: np.ndarray | float = 0.0) -> np.ndarray:
    """Deviation g on grid ``t``; a vector ``u`` yields one row per draw."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)[..., None]
    if g_id == "G1_shift":
        out = np.full(np.broadcast_shapes(u.shape, t.shape), eta)
    elif g_id == "G2_split":
        out = np.broadcast_to(np.where(t <= 0.5, eta, -eta), np.broadcast_shapes(u.shape, t.shape)).copy()
    elif g_id == "G3_bump":
        out = np.where((t > u) & (t <= u + 0.25), eta, 0.0)
    elif g_id == "G4_dipole":
        out = np.where((t > u) & (t <= u + 0.125), eta, 0.0)
        out = np.where((t > u + 0.125) & (t <= u + 0.25), -eta, out)
    else:
        raise InvalidScenario(f"no built-in deviation for {g_id!r}")
    return out


def uses_shift(g_id: str) -> bool:
    return g_id in ("G3_bump", "G4_dipole")


class Scenario(BaseModel):
    g_id: GId
    eta: float
    n: int = Field(..., ge=2)
    seed: int = DEFAULT_SEED
    u_draw: Optional[float] = Field(None, ge=0.0, le=U_MAX)
    custom_values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _custom_has_values(self) -> "Scenario":
        if self.g_id == "Custom":
            if self.custom_values is None or len(self.custom_values) != self.n:
                raise ValueError("Custom scenarios need custom_values of length n")
        return self


def generate_scenario(
    scenario: Scenario,
    noise: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
) -> Tuple[Sample, Sample]:
    """Y1 = Z1 and Y2 = g + Z2 on t_i = i/n; ``noise`` replaces the seeded draws."""
    n = scenario.n
    t = design(n)
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed, spawn_key=stream_tag("scenario", scenario.g_id)))
    u = scenario.u_draw
    if u is None and uses_shift(scenario.g_id):
        u = float(rng.uniform(0.0, U_MAX))
    if noise is None:
        z1 = rng.standard_normal(n)
        z2 = rng.standard_normal(n)
    else:
        z1 = np.asarray(noise[0], dtype=float)
        z2 = np.asarray(noise[1], dtype=float)
    if scenario.g_id == "Custom":
        g = np.asarray(scenario.custom_values, dtype=float)
    else:
        g = g_values(scenario.g_id, scenario.eta, t, 0.0 if u is None else u)
    return sample_from_arrays(t, z1, label="Y1"), sample_from_arrays(t, g + z2, label="Y2")


# ---- power study ----


class PowerStudyConfig(BaseModel):
    methods: List[str] = Field(default_factory=lambda: list(POWER_METHODS))
    g_ids: List[str] = Field(default_factory=lambda: list(G_IDS))
    etas: List[float]
    n: int = Field(500, ge=2)
    replications: int = Field(DEFAULT_POWER_REPLICATIONS, ge=1)
    master_seed: int = DEFAULT_SEED
    scheme: str = DEFAULT_SCHEME
    criticals: Dict[str, float] = Field(default_factory=dict)


class PowerRow(BaseModel):
    g_id: str
    eta: float
    method: str
    power: float = Field(..., ge=0.0, le=1.0)
    replications: int
    se: float


class PowerResult(BaseModel):
    n: int
    master_seed: int
    criticals: Dict[str, float]
    rows: List[PowerRow]

    def curve(self, g_id: str, method: str) -> List[PowerRow]:
        return sorted((r for r in self.rows if r.g_id == g_id and r.method == method), key=lambda r: r.eta)

    def power(self, g_id: str, method: str, eta: float) -> float:
        for r in self.rows:
            if r.g_id == g_id and r.method == method and math.isclose(r.eta, eta):
                return r.power
        raise KeyError((g_id, method, eta))


def _rejections(
    y1: np.ndarray, y2: np.ndarray, methods: Sequence[str], criticals: Dict[str, float], scheme: IntervalScheme
) -> np.ndarray:
    n = y1.shape[-1]
    cols = []
    stats = None
    for method in methods:
        crit = criticals[method]
        if method == "delgado":
            cols.append(np.asarray(delgado_statistic(y1 - y2)) >= crit)
        elif method == "fanlin":
            cols.append(np.asarray(fanlin_statistic(y2 - y1, fanlin_variance(y1, y2))) > crit)
        else:
            if stats is None:
                stats = an_interval_statistics(y1, y2, scheme)
            if method == "an":
                cols.append(np.asarray(realized_tau(stats, n)) > crit)
            else:
                lo, hi = interval_bounds(n, scheme)
                bounds = np.sqrt(np.maximum(gamma_radicand(n, (hi - lo + 1).astype(float), crit), 0.0))
                cols.append(np.any(stats > bounds, axis=-1))
    return np.stack(cols, axis=-1)


def calibrate_power_criticals(
    n: int,
    alpha: float,
    scheme: str = DEFAULT_SCHEME,
    replications: int = 10_000,
    seed: int = DEFAULT_SEED,
    cache: CalibrationCache | None = None,
    threads: int | None = None,
) -> Dict[str, float]:
    """Size-calibrated critical values for all four methods at grid size ``n``."""
    targets = {
        "delgado": Target.DELGADO_FINITE,
        "fanlin": Target.FANLIN_FINITE,
        "an": Target.TAU_TWO_SAMPLE,
        "anstar": Target.GAMMA_TWO_SAMPLE,
    }
    out: Dict[str, float] = {}
    for method, target in targets.items():
        req = CalibrationRequest(target=target, n=n, scheme=scheme, alpha=alpha, replications=replications, master_seed=seed)
        out[method] = calibrate(req, cache=cache, threads=threads).threshold
    return out


def run_power_study(config: PowerStudyConfig, threads: int | None = None) -> PowerResult:
    """Rejection frequencies per (g, eta, method); all methods see the same sample pairs."""
    missing = [m for m in config.methods if m not in config.criticals]
    if missing:
        raise MissingCalibration(f"no critical value for {', '.join(missing)} at n={config.n}")
    unknown = [g for g in config.g_ids if g not in G_IDS]
    if unknown:
        raise InvalidScenario(f"unknown scenario(s) {unknown}")
    scheme = IntervalScheme.parse(config.scheme)
    n = config.n
    t = design(n)
    rows: List[PowerRow] = []
    for g_id in config.g_ids:
        for e_idx, eta in enumerate(config.etas):

            def draw(rng: np.random.Generator, size: int, g_id: str = g_id, eta: float = eta) -> np.ndarray:
                u = rng.uniform(0.0, U_MAX, size) if uses_shift(g_id) else np.zeros(size)
                y1 = rng.standard_normal((size, n))
                y2 = g_values(g_id, eta, t, u) + rng.standard_normal((size, n))
                return _rejections(y1, y2, config.methods, config.criticals, scheme)

            tag = stream_tag("power", g_id, e_idx, n)
            hits = run_chunked(draw, config.replications, config.master_seed, tag, threads=threads)
            freq = hits.mean(axis=0)
            for m_idx, method in enumerate(config.methods):
                p = float(freq[m_idx])
                rows.append(
                    PowerRow(
                        g_id=g_id,
                        eta=float(eta),
                        method=method,
                        power=p,
                        replications=config.replications,
                        se=binomial_se(p, config.replications),
                    )
                )
            logger.info("power %s eta=%.4g: %s", g_id, eta, ", ".join(f"{m}={f:.3f}" for m, f in zip(config.methods, freq)))
    return PowerResult(n=n, master_seed=config.master_seed, criticals=dict(config.criticals), rows=rows)


# ---- detection of a localized deviation ----


class DetectionRow(BaseModel):
    eta: float
    detection_rate: float = Field(..., ge=0.0, le=1.0)
    replications: int
    se: float


class DetectionResult(BaseModel):
    n: int
    interval: Tuple[float, float]
    sigma: float
    tau: float
    rows: List[DetectionRow]


def base_function(t: np.ndarray) -> np.ndarray:
    return np.exp(1.5 * np.asarray(t, dtype=float))


def run_detection_study(
    etas: Sequence[float],
    n: int = 500,
    interval: Tuple[float, float] = (0.402, 0.440),
    sigma: float = 0.25,
    tau: float = 2.973,
    replications: int = 500,
    seed: int = DEFAULT_SEED,
    scheme: str = DEFAULT_SCHEME,
    threads: int | None = None,
) -> DetectionResult:
    """Fraction of replications in which no joint approximation of f and f + eta 1_interval exists."""
    a, b = interval
    if not 0.0 <= a < b <= 1.0:
        raise InvalidScenario(f"bad deviation interval {interval!r}")
    parsed = IntervalScheme.parse(scheme)
    t = design(n)
    f = base_function(t)
    bump = ((t >= a) & (t <= b)).astype(float)
    rows: List[DetectionRow] = []
    for e_idx, eta in enumerate(etas):

        def draw(rng: np.random.Generator, size: int, eta: float = eta) -> np.ndarray:
            out = np.zeros(size, dtype=bool)
            for r in range(size):
                s1 = sample_from_arrays(t, f + sigma * rng.standard_normal(n), label="f")
                s2 = sample_from_arrays(t, f + eta * bump + sigma * rng.standard_normal(n), label="f+g")
                specs = tuple(RegionSpec(parsed, max(sigma_median(s).value, 1e-12), Tau(tau)) for s in (s1, s2))
                out[r] = joint_region_empty([s1, s2], JointRegionSpec(specs=specs, alpha=DEFAULT_ALPHA, alpha_k=adjust_level(DEFAULT_ALPHA, 2))).empty
            return out

        hits = run_chunked(draw, replications, seed, stream_tag("detect", e_idx, n), threads=threads)
        rate = float(hits.mean())
        rows.append(DetectionRow(eta=float(eta), detection_rate=rate, replications=replications, se=binomial_se(rate, replications)))
        logger.info("detection eta=%.4g rate=%.3f", eta, rate)
    return DetectionResult(n=n, interval=(a, b), sigma=sigma, tau=tau, rows=rows)


# ---- synthetic stand-in for the thin-film diffraction pair ----


def xray_like_fixture(n: int = 4806, seed: int = DEFAULT_SEED) -> Tuple[Sample, Sample]:
    """Two integer-valued count curves on a shared grid, noise near 8.3, with three local differences."""
    if n < 200:
        raise InvalidScenario(f"fixture needs n >= 200, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=stream_tag("xray", n)))
    t = design(n)
    profile = (
        120.0
        + 900.0 * np.exp(-(((t - 0.30) / 0.012) ** 2))
        + 400.0 * np.exp(-(((t - 0.55) / 0.020) ** 2))
        + 250.0 * np.exp(-(((t - 0.78) / 0.010) ** 2))
        - 60.0 * t
    )
    width = 40.0 / n
    diff = np.zeros(n)
    for centre, height in ((0.31, 45.0), (0.56, -35.0), (0.785, 30.0)):
        diff += height * np.exp(-(((t - centre) / (width / 2.0)) ** 2))
    y1 = np.rint(profile + 8.3 * rng.standard_normal(n))
    y2 = np.rint(profile + diff + 8.3 * rng.standard_normal(n))
    return sample_from_arrays(t, y1, label="film_a"), sample_from_arrays(t, y2, label="film_b")
