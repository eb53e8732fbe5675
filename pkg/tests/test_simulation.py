from __future__ import annotations

import math

import numpy as np
import pytest

from app.errors import InvalidScenario, MissingCalibration
from app.intervals import IntervalScheme
from app.montecarlo import binomial_se
from app.noise import sigma_median
from app.simulation import (
    PowerStudyConfig,
    Scenario,
    _rejections,
    calibrate_power_criticals,
    design,
    g_id_from_number,
    g_values,
    generate_scenario,
    run_detection_study,
    run_power_study,
    xray_like_fixture,
)
from app.two_sample import an_two_sample_test, delgado_test


def test_g_values_shapes() -> None:
    t = design(8)
    assert t.tolist() == [i / 8 for i in range(1, 9)]
    assert g_values("G1_shift", 0.5, t).tolist() == [0.5] * 8
    assert g_values("G2_split", 1.0, t).tolist() == [1.0] * 4 + [-1.0] * 4
    bump = g_values("G3_bump", 2.0, t, 0.25)
    assert bump.tolist() == [0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0]
    dipole = g_values("G4_dipole", 1.0, design(16), np.array([0.0, 0.5]))
    assert dipole.shape == (2, 16)
    assert dipole[0, :4].tolist() == [1.0, 1.0, -1.0, -1.0]
    assert dipole[1, 8:12].tolist() == [1.0, 1.0, -1.0, -1.0]
    assert np.all(dipole[1, :8] == 0.0)


def test_g_id_numbers() -> None:
    assert g_id_from_number(3) == "G3_bump"
    with pytest.raises(InvalidScenario):
        g_id_from_number(5)
    with pytest.raises(InvalidScenario):
        g_values("Custom", 1.0, design(4))


def test_generate_scenario_is_seeded() -> None:
    first = generate_scenario(Scenario(g_id="G3_bump", eta=1.0, n=64, seed=3))
    second = generate_scenario(Scenario(g_id="G3_bump", eta=1.0, n=64, seed=3))
    assert np.array_equal(first[1].y, second[1].y)
    assert [s.label for s in first] == ["Y1", "Y2"]


def test_generate_scenario_with_given_noise() -> None:
    zeros = (np.zeros(8), np.zeros(8))
    y1, y2 = generate_scenario(Scenario(g_id="G2_split", eta=0.5, n=8), noise=zeros)
    assert np.all(y1.y == 0.0)
    assert y2.y.tolist() == [0.5] * 4 + [-0.5] * 4
    custom = Scenario(g_id="Custom", eta=0.0, n=4, custom_values=[0.0, 1.0, 0.0, 1.0])
    assert generate_scenario(custom, noise=(np.zeros(4), np.zeros(4)))[1].y.tolist() == [0.0, 1.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        Scenario(g_id="Custom", eta=0.0, n=4)


def test_power_study_needs_criticals() -> None:
    with pytest.raises(MissingCalibration):
        run_power_study(PowerStudyConfig(etas=[0.0], n=32, replications=10, criticals={"delgado": 2.2}))
    with pytest.raises(InvalidScenario):
        run_power_study(
            PowerStudyConfig(methods=["delgado"], g_ids=["G9"], etas=[0.0], n=32, replications=10, criticals={"delgado": 2.2})
        )


def test_power_study_is_reproducible() -> None:
    config = PowerStudyConfig(
        methods=["delgado", "an"],
        g_ids=["G3_bump"],
        etas=[0.0, 1.0],
        n=64,
        replications=300,
        master_seed=5,
        criticals={"delgado": 2.2, "an": 1.5},
    )
    first = run_power_study(config, threads=1)
    second = run_power_study(config, threads=4)
    assert first == second
    assert len(first.rows) == 4
    assert [r.eta for r in first.curve("G3_bump", "an")] == [0.0, 1.0]


def test_rejections_match_single_tests() -> None:
    # the vectorized rejection rule agrees with the per-pair test functions
    s1, s2 = generate_scenario(Scenario(g_id="G4_dipole", eta=1.5, n=128, seed=11))
    config = PowerStudyConfig(
        methods=["delgado", "an"], g_ids=["G4_dipole"], etas=[1.5], n=128, replications=1, criticals={"delgado": 2.2, "an": 1.5}
    )
    hits = _rejections(s1.y[None, :], s2.y[None, :], config.methods, config.criticals, IntervalScheme.parse(config.scheme))
    assert bool(hits[0, 0]) == delgado_test(s1, s2, critical=2.2).reject
    assert bool(hits[0, 1]) == an_two_sample_test(s1, s2, threshold=1.5).reject


def test_xray_like_fixture() -> None:
    a, b = xray_like_fixture(n=1000, seed=1)
    assert a.n == b.n == 1000
    assert np.array_equal(a.t, b.t)
    assert np.all(a.y == np.round(a.y))
    assert 6.0 < sigma_median(a).value < 11.0
    assert delgado_test(a, b, alpha=0.95, critical=1.90).statistic >= 0.0
    with pytest.raises(InvalidScenario):
        xray_like_fixture(n=50)


def test_detection_study_rejects_bad_interval() -> None:
    with pytest.raises(InvalidScenario):
        run_detection_study([1.0], interval=(0.5, 0.4), replications=1)


@pytest.mark.slow
def test_detection_at_closed_form_bound() -> None:
    result = run_detection_study([1.359], replications=500, threads=2)
    assert result.rows[0].detection_rate >= 0.95


@pytest.mark.slow
def test_detection_rate_is_monotone() -> None:
    etas = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    result = run_detection_study(etas, replications=200)
    rates = [r.detection_rate for r in result.rows]
    ses = [r.se for r in result.rows]
    for i in range(1, len(rates)):
        assert rates[i] >= rates[i - 1] - 2 * max(ses[i], ses[i - 1], 0.01)


POWER_N = 500
POWER_REPS = 1000
CRITICAL_REPS = 10_000


@pytest.fixture(scope="module")
def power_setup():
    criticals = calibrate_power_criticals(POWER_N, 0.95, replications=CRITICAL_REPS, seed=17)
    return POWER_N, criticals


def _study(setup, g_id: str, etas, reps: int = POWER_REPS):
    n, criticals = setup
    config = PowerStudyConfig(g_ids=[g_id], etas=etas, n=n, replications=reps, master_seed=23, criticals=criticals)
    return run_power_study(config)


def _rows_at_half_power(result, g_id: str, reference: str):
    """Rows of every method at the eta where ``reference`` has power closest to 0.5."""
    best = min(result.curve(g_id, reference), key=lambda r: abs(r.power - 0.5))
    return {r.method: r for r in result.rows if r.g_id == g_id and r.eta == best.eta}


@pytest.mark.slow
def test_power_size_under_null(power_setup) -> None:
    result = _study(power_setup, "G1_shift", [0.0])
    # power estimate and critical value each carry Monte Carlo error
    se = math.sqrt(binomial_se(0.05, POWER_REPS) ** 2 + binomial_se(0.05, CRITICAL_REPS) ** 2)
    for row in result.rows:
        assert abs(row.power - 0.05) <= 2.5 * se, row.method


@pytest.mark.slow
def test_global_shift_favours_cumulative_tests(power_setup) -> None:
    result = _study(power_setup, "G1_shift", [0.08, 0.11, 0.14, 0.17, 0.2])
    get = _rows_at_half_power(result, "G1_shift", "delgado")
    slack = 2 * max(r.se for r in get.values())
    assert min(get["delgado"].power, get["fanlin"].power) >= max(get["an"].power, get["anstar"].power) - slack


@pytest.mark.slow
def test_split_favours_gamma_region(power_setup) -> None:
    result = _study(power_setup, "G2_split", [0.15, 0.2, 0.25, 0.3, 0.35])
    get = _rows_at_half_power(result, "G2_split", "anstar")
    slack = 2 * max(get["anstar"].se, get["delgado"].se)
    assert get["anstar"].power >= get["delgado"].power - slack


@pytest.mark.slow
def test_bump_favours_gamma_region(power_setup) -> None:
    result = _study(power_setup, "G3_bump", [0.3, 0.4, 0.5, 0.6, 0.7])
    get = _rows_at_half_power(result, "G3_bump", "anstar")
    slack = 2 * max(get["anstar"].se, get["delgado"].se)
    assert get["anstar"].power >= get["delgado"].power - slack


@pytest.mark.slow
def test_dipole_favours_region_tests(power_setup) -> None:
    result = _study(power_setup, "G4_dipole", [0.5, 0.75, 1.0, 1.25, 1.5])
    get = _rows_at_half_power(result, "G4_dipole", "anstar")
    slack = 2 * max(r.se for r in get.values())
    assert get["an"].power >= get["delgado"].power - slack
    assert get["anstar"].power >= get["delgado"].power - slack


@pytest.mark.slow
def test_bump_power_grows_with_height(power_setup) -> None:
    result = _study(power_setup, "G3_bump", [0.0, 0.4, 0.8])
    for method in ("delgado", "an", "anstar"):
        curve = result.curve("G3_bump", method)
        assert curve[0].power <= curve[1].power + 2 * curve[1].se + 0.01
        assert curve[1].power <= curve[2].power + 2 * curve[2].se + 0.01
