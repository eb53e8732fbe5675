from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .data_model import MergedGrid, Sample, merge_samples
from .errors import InvalidRequest, LengthMismatch
from .intervals import IntervalScheme
from .noise import estimate_scale
from .regions import Gamma, MembershipReport, RegionSpec, Tau, check_region

logger = logging.getLogger(__name__)

ThresholdLookup = Callable[[int, float], float]


def adjust_level(alpha: float, k: int) -> float:
    """Per-sample level alpha**(1/k) so that k independent regions cover jointly with alpha."""
    if not 0.0 < alpha < 1.0:
        raise InvalidRequest(f"alpha must lie in (0, 1), got {alpha!r}")
    if k < 1:
        raise InvalidRequest(f"need at least one sample, got k={k}")
    return float(alpha ** (1.0 / k))


@dataclass(frozen=True)
class JointRegionSpec:
    specs: Tuple[RegionSpec, ...]
    alpha: float
    alpha_k: float

    @property
    def k(self) -> int:
        return len(self.specs)


def build_joint_spec(
    samples: Sequence[Sample],
    alpha: float,
    scheme: IntervalScheme,
    kind: Literal["tau", "gamma"],
    threshold_for: ThresholdLookup,
    sigma_method: str = "median",
) -> JointRegionSpec:
    """Per-sample specs at level alpha_k, with thresholds from ``threshold_for(n_i, alpha_k)``."""
    alpha_k = adjust_level(alpha, len(samples))
    specs = []
    for s in samples:
        sigma = estimate_scale(s, sigma_method).value
        value = threshold_for(s.n, alpha_k)
        threshold = Tau(value) if kind == "tau" else Gamma(value)
        specs.append(RegionSpec(scheme=scheme, sigma=sigma, threshold=threshold))
    return JointRegionSpec(specs=tuple(specs), alpha=alpha, alpha_k=alpha_k)


class JointMembership(BaseModel):
    is_member: bool
    reports: List[MembershipReport]


def _grid(samples: Sequence[Sample], spec: JointRegionSpec) -> MergedGrid:
    if len(samples) != spec.k:
        raise LengthMismatch(f"{len(samples)} samples but {spec.k} region specs")
    return merge_samples(samples, [s.sigma for s in spec.specs])


def _contains_on_grid(values: np.ndarray, grid: MergedGrid, samples: Sequence[Sample], spec: JointRegionSpec) -> JointMembership:
    reports = [
        check_region(values[grid.sample_positions[i]], s, region)
        for i, (s, region) in enumerate(zip(samples, spec.specs))
    ]
    return JointMembership(is_member=all(r.is_member for r in reports), reports=reports)


def joint_contains(g: Sequence[float], samples: Sequence[Sample], spec: JointRegionSpec) -> JointMembership:
    """g, given on the merged grid, restricted to each support must lie in that sample's region."""
    grid = _grid(samples, spec)
    values = np.asarray(g, dtype=float)
    if values.shape != (grid.n,):
        raise LengthMismatch(f"expected {grid.n} merged-grid values, got {values.size}")
    return _contains_on_grid(values, grid, samples, spec)


SupportLayout = Literal["single", "disjoint", "equal", "overlapping"]


def support_layout(samples: Sequence[Sample]) -> SupportLayout:
    if len(samples) == 1:
        return "single"
    first = samples[0].t
    if all(s.n == first.size and np.array_equal(s.t, first) for s in samples[1:]):
        return "equal"
    total = sum(s.n for s in samples)
    if np.unique(np.concatenate([s.t for s in samples])).size == total:
        return "disjoint"
    return "overlapping"


class EmptinessResult(BaseModel):
    empty: bool
    status: Literal["nonempty", "empty", "interpolant_infeasible"]
    layout: SupportLayout
    witness: Optional[List[float]] = None
    membership: JointMembership


def joint_region_empty(samples: Sequence[Sample], spec: JointRegionSpec) -> EmptinessResult:
    """Certify non-emptiness with the merged weighted interpolant.

    Failure of the interpolant is reported as ``empty`` for equal supports and
    as ``interpolant_infeasible`` when supports only partly overlap.
    """
    grid = _grid(samples, spec)
    membership = _contains_on_grid(np.asarray(grid.y), grid, samples, spec)
    layout = support_layout(samples)
    if membership.is_member:
        return EmptinessResult(
            empty=False,
            status="nonempty",
            layout=layout,
            witness=[float(v) for v in grid.y],
            membership=membership,
        )
    status: Literal["empty", "interpolant_infeasible"] = "empty" if layout in ("equal", "single") else "interpolant_infeasible"
    logger.info("joint region check: %s (%s supports)", status, layout)
    return EmptinessResult(empty=True, status=status, layout=layout, membership=membership)
