from __future__ import annotations

import numpy as np
import pytest

from app.data_model import merge_samples, sample_from_arrays, validate_sample
from app.errors import (
    DesignPointOutOfRange,
    DuplicateDesignPoint,
    EmptyInput,
    ScaleNotPositive,
    TooFewPoints,
)


def test_validate_sorts_by_t() -> None:
    s = validate_sample([(0.2, 1.0), (0.1, 2.0)], label="a")
    assert s.t.tolist() == [0.1, 0.2]
    assert s.y.tolist() == [2.0, 1.0]
    assert s.label == "a"


def test_validate_rejects_duplicate_t() -> None:
    with pytest.raises(DuplicateDesignPoint):
        validate_sample([(0.5, 1.0), (0.5, 2.0)])


def test_validate_accepts_boundary_points() -> None:
    s = validate_sample([(0.0, 0.0), (1.0, 1.0)])
    assert s.n == 2


def test_validate_errors() -> None:
    with pytest.raises(EmptyInput):
        validate_sample([])
    with pytest.raises(DesignPointOutOfRange):
        validate_sample([(0.5, 1.0), (1.5, 2.0)])
    with pytest.raises(TooFewPoints):
        validate_sample([(0.5, 1.0)])


def test_sample_arrays_are_read_only() -> None:
    s = sample_from_arrays([0.1, 0.2], [1.0, 2.0])
    with pytest.raises(ValueError):
        s.y[0] = 5.0


def test_merge_equal_weights_averages() -> None:
    a = validate_sample([(0.5, 0.0), (0.9, 1.0)], "a")
    b = validate_sample([(0.5, 3.0), (0.7, 1.0)], "b")
    grid = merge_samples([a, b], [1.0, 1.0])
    assert grid.t.tolist() == [0.5, 0.7, 0.9]
    assert grid.y[0] == pytest.approx(1.5)


def test_merge_precision_weights() -> None:
    a = validate_sample([(0.5, 0.0), (0.9, 1.0)], "a")
    b = validate_sample([(0.5, 3.0), (0.7, 1.0)], "b")
    grid = merge_samples([a, b], [1.0, 2.0])
    assert grid.y[0] == pytest.approx(0.6)
    assert grid.sigma_weight[0] == pytest.approx(1.25)


def test_merge_disjoint_supports_keeps_values() -> None:
    a = validate_sample([(0.1, 5.0), (0.5, -1.0)], "a")
    b = validate_sample([(0.3, 2.5), (0.8, 7.25)], "b")
    grid = merge_samples([a, b], [0.3, 1.7])
    assert grid.t.tolist() == [0.1, 0.3, 0.5, 0.8]
    assert grid.y.tolist() == [5.0, 2.5, -1.0, 7.25]
    assert grid.source_map == (((0, 0),), ((1, 0),), ((0, 1),), ((1, 1),))
    assert grid.sample_positions[0].tolist() == [0, 2]
    assert grid.sample_positions[1].tolist() == [1, 3]


def test_merge_single_sample_is_identity(rng: np.random.Generator) -> None:
    t = np.sort(rng.uniform(0, 1, 40))
    s = sample_from_arrays(t, rng.normal(size=40))
    grid = merge_samples([s], [0.37])
    assert np.array_equal(grid.y, s.y)
    assert np.array_equal(grid.t, s.t)


def test_merge_cumulative_sums() -> None:
    a = validate_sample([(0.2, 1.0), (0.4, 2.0)], "a")
    b = validate_sample([(0.2, 3.0), (0.6, 4.0)], "b")
    grid = merge_samples([a, b], [1.0, 1.0])
    assert grid.cum_w[0] == 0.0 and grid.cum_y[0] == 0.0
    assert grid.cum_w.size == grid.n + 1
    assert np.all(np.diff(grid.cum_w) > 0)
    assert grid.cum_w[-1] == pytest.approx(grid.sigma_weight.sum())
    assert grid.cum_y[-1] == pytest.approx(1.0 + 2.0 + 3.0 + 4.0)


def test_merge_is_permutation_invariant(rng: np.random.Generator) -> None:
    shared = np.round(rng.uniform(0, 1, 30), 2)
    samples = []
    for i in range(3):
        t = np.unique(np.concatenate([shared[:10], rng.uniform(0, 1, 15)]))
        samples.append(sample_from_arrays(t, rng.normal(size=t.size), label=str(i)))
    scales = [0.5, 1.0, 2.0]
    forward = merge_samples(samples, scales)
    backward = merge_samples(samples[::-1], scales[::-1])
    assert np.array_equal(forward.t, backward.t)
    assert np.array_equal(forward.y, backward.y)
    assert np.array_equal(forward.sigma_weight, backward.sigma_weight)


def test_merge_common_scale_factor(rng: np.random.Generator) -> None:
    t = np.linspace(0.05, 0.95, 10)
    a = sample_from_arrays(t, rng.normal(size=10), "a")
    b = sample_from_arrays(t, rng.normal(size=10), "b")
    base = merge_samples([a, b], [1.0, 2.0])
    scaled = merge_samples([a, b], [3.0, 6.0])
    assert np.allclose(base.y, scaled.y)
    assert np.allclose(scaled.cum_w, base.cum_w / 9.0)


def test_merge_rejects_bad_scale() -> None:
    a = validate_sample([(0.2, 1.0), (0.4, 2.0)], "a")
    with pytest.raises(ScaleNotPositive):
        merge_samples([a], [0.0])
    with pytest.raises(ScaleNotPositive):
        merge_samples([a], [float("nan")])
