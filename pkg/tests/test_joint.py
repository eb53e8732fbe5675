from __future__ import annotations

import math
from typing import List

import numpy as np
import pytest

from app.calibration import tau_threshold
from app.data_model import merge_samples, sample_from_arrays
from app.errors import InvalidRequest, LengthMismatch
from app.intervals import IntervalScheme
from app.joint import (
    JointRegionSpec,
    adjust_level,
    build_joint_spec,
    joint_contains,
    joint_region_empty,
    support_layout,
)
from app.regions import Gamma, RegionSpec, Tau

MULTI = IntervalScheme.multiscale(2.0)


def test_adjust_level() -> None:
    assert adjust_level(0.95, 1) == pytest.approx(0.95)
    assert adjust_level(0.95, 2) == pytest.approx(math.sqrt(0.95))
    assert adjust_level(0.95, 4) == pytest.approx(0.987259, abs=1e-6)
    with pytest.raises(InvalidRequest):
        adjust_level(1.0, 2)
    with pytest.raises(InvalidRequest):
        adjust_level(0.95, 0)


def test_build_joint_spec_uses_adjusted_level(make_sample, rng: np.random.Generator) -> None:
    seen: List[tuple] = []

    def lookup(n: int, alpha_k: float) -> float:
        seen.append((n, alpha_k))
        return 2.5

    samples = [make_sample(rng.normal(size=50), label="a"), make_sample(rng.normal(size=80), label="b")]
    spec = build_joint_spec(samples, 0.9, MULTI, "gamma", lookup)
    assert spec.k == 2
    assert spec.alpha_k == pytest.approx(math.sqrt(0.9))
    assert [n for n, _ in seen] == [50, 80]
    assert all(isinstance(s.threshold, Gamma) and s.threshold.value == 2.5 for s in spec.specs)
    assert all(s.sigma > 0 for s in spec.specs)


def test_support_layout(make_sample) -> None:
    a = make_sample([0.0, 1.0, 2.0, 3.0])
    assert support_layout([a]) == "single"
    assert support_layout([a, make_sample([3.0, 2.0, 1.0, 0.0])]) == "equal"
    b = make_sample([0.0, 1.0], t=[0.05, 0.55])
    assert support_layout([a, b]) == "disjoint"
    c = make_sample([0.0, 1.0], t=[0.25, 0.55])
    assert support_layout([a, c]) == "overlapping"


def _spec(k: int, sigma: float = 1.0, tau: float = 2.0) -> JointRegionSpec:
    region = RegionSpec(MULTI, sigma, Tau(tau))
    return JointRegionSpec(specs=(region,) * k, alpha=0.95, alpha_k=adjust_level(0.95, k))


def test_joint_contains_restricts_to_each_support(make_sample) -> None:
    a = make_sample([0.0, 0.0, 0.0, 0.0], t=[0.1, 0.3, 0.5, 0.7])
    b = make_sample([5.0, 5.0, 5.0, 5.0], t=[0.2, 0.4, 0.6, 0.8])
    spec = _spec(2, sigma=0.1)
    zigzag = [0.0, 5.0] * 4
    assert joint_contains(zigzag, [a, b], spec).is_member
    flat = joint_contains([2.5] * 8, [a, b], spec)
    assert not flat.is_member
    assert [r.label for r in flat.reports] == ["s", "s"]
    with pytest.raises(LengthMismatch):
        joint_contains([0.0] * 4, [a, b], spec)


def test_disjoint_supports_are_never_empty(make_sample, rng: np.random.Generator) -> None:
    a = make_sample(rng.normal(size=20), t=np.linspace(0.01, 0.39, 20))
    b = make_sample(100 + rng.normal(size=20), t=np.linspace(0.41, 0.99, 20))
    result = joint_region_empty([a, b], _spec(2, sigma=0.01))
    assert not result.empty
    assert result.status == "nonempty"
    assert result.layout == "disjoint"
    assert result.witness is not None and len(result.witness) == 40


def test_equal_supports_far_apart_are_empty(make_sample) -> None:
    a = make_sample(np.zeros(64))
    b = make_sample(np.full(64, 3.0))
    result = joint_region_empty([a, b], _spec(2))
    assert result.empty
    assert result.status == "empty"
    assert result.witness is None


def test_partial_overlap_reports_interpolant_status() -> None:
    t1 = np.arange(1, 41) / 40
    t2 = np.concatenate([t1[::2], np.arange(1, 21) / 20 - 0.0125])
    t2 = np.unique(t2[(t2 > 0) & (t2 <= 1)])
    a = sample_from_arrays(t1, np.zeros(t1.size))
    b = sample_from_arrays(t2, np.full(t2.size, 4.0))
    result = joint_region_empty([a, b], _spec(2, sigma=0.2))
    assert result.layout == "overlapping"
    assert result.status == "interpolant_infeasible"


def test_identical_samples_are_member(make_sample, rng: np.random.Generator) -> None:
    y = rng.normal(size=100)
    a, b = make_sample(y, label="a"), make_sample(y, label="b")
    result = joint_region_empty([a, b], _spec(2, sigma=0.5))
    assert not result.empty
    assert np.allclose(result.witness, y)


@pytest.mark.slow
def test_joint_coverage_of_true_function() -> None:
    n, alpha = 200, 0.95
    alpha_k = adjust_level(alpha, 2)
    tau = tau_threshold(n, alpha_k, MULTI, replications=4000)
    rng = np.random.default_rng(99)
    reps, hits = 2000, 0
    for _ in range(reps):
        t1 = np.sort(rng.uniform(0, 1, n))
        t2 = np.sort(rng.uniform(0, 1, n))
        samples = [
            sample_from_arrays(t1, np.sin(4 * t1) + rng.normal(size=n), "a"),
            sample_from_arrays(t2, np.sin(4 * t2) + rng.normal(size=n), "b"),
        ]
        spec = build_joint_spec(samples, alpha, MULTI, "tau", lambda _n, _a: tau)
        grid = merge_samples(samples, [s.sigma for s in spec.specs])
        hits += joint_contains(np.sin(4 * grid.t), samples, spec).is_member
    assert hits / reps >= alpha - 0.02
