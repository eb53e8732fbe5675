from __future__ import annotations

import numpy as np
import pytest

from app.montecarlo import (
    binomial_se,
    cdf_slice,
    chunk_plan,
    empirical_quantile,
    quantile_standard_error,
    run_chunked,
    stream_tag,
)


def _normals(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.normal(size=size)


def test_chunk_plan() -> None:
    assert chunk_plan(600, 250) == [(0, 250), (1, 250), (2, 100)]
    assert chunk_plan(500, 250) == [(0, 250), (1, 250)]
    assert chunk_plan(0, 250) == []


def test_run_chunked_independent_of_threads() -> None:
    tag = stream_tag("unit", 3)
    one = run_chunked(_normals, 1100, 42, tag, threads=1)
    many = run_chunked(_normals, 1100, 42, tag, threads=4)
    assert one.shape == (1100,)
    assert np.array_equal(one, many)


def test_streams_differ_by_seed_and_tag() -> None:
    base = run_chunked(_normals, 300, 42, stream_tag("a"), threads=1)
    assert not np.array_equal(base, run_chunked(_normals, 300, 43, stream_tag("a"), threads=1))
    assert not np.array_equal(base, run_chunked(_normals, 300, 42, stream_tag("b"), threads=1))


def test_prefix_stability() -> None:
    tag = stream_tag("prefix")
    short = run_chunked(_normals, 500, 9, tag, threads=2)
    long = run_chunked(_normals, 1000, 9, tag, threads=2)
    assert np.array_equal(short, long[:500])


def test_stream_tag_is_stable() -> None:
    assert stream_tag("TauSingle", 500) == stream_tag("TauSingle", 500)
    assert stream_tag("TauSingle", 500) != stream_tag("GammaSingle", 500)
    assert stream_tag(7) == (7,)


def test_empirical_quantile_interpolates() -> None:
    assert empirical_quantile(np.array([1.0, 2.0, 3.0, 4.0]), 0.5) == pytest.approx(2.5)
    assert empirical_quantile(np.arange(101.0), 0.95) == pytest.approx(95.0)


def test_quantile_standard_error(rng: np.random.Generator) -> None:
    values = rng.normal(size=10_000)
    se = quantile_standard_error(values, 0.95)
    # asymptotic sd of the normal 0.95 quantile at 10^4 draws is about 0.021
    assert 0.01 < se < 0.04
    assert quantile_standard_error(np.array([1.0]), 0.5) == 0.0


def test_cdf_slice() -> None:
    values = np.arange(1000.0)[::-1]
    window = cdf_slice(values, 0.95, width=20)
    assert len(window) == 20
    assert window == sorted(window)
    assert window[0] <= 949.0 <= window[-1]
    assert cdf_slice(np.array([3.0, 1.0]), 0.5) == [1.0, 3.0]


def test_binomial_se() -> None:
    assert binomial_se(0.5, 100) == pytest.approx(0.05)
    assert binomial_se(0.5, 0) == 0.0
