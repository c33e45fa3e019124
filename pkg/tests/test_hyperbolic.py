import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thermolab.errors import BadParameters, OrbitHitsCriticalSet, PreconditionViolation
from thermolab.hyperbolic import (HyperbolicParams, brute_force_times, detect_hyperbolic_times, frequency_field,
                                  lyapunov_sigma, pre_ball_check, truncated_distance)
from thermolab.maps import DoublingMap, NonDegeneracyData, QuadraticMap

Q = QuadraticMap(2.0)
ND = NonDegeneracyData(8.0, 1.0)


def _times(x, p, n):
    try:
        return detect_hyperbolic_times(Q, ND, x, p, n).times
    except OrbitHitsCriticalSet:
        assume(False)


def test_doubling_trivial_cases():
    D = DoublingMap()
    assert detect_hyperbolic_times(D, None, 0.3, HyperbolicParams(0.75), 20).times == list(range(1, 21))
    assert detect_hyperbolic_times(D, None, 0.3, HyperbolicParams(0.4), 20).times == []


def test_quadratic_example_matches_brute_force():
    p = HyperbolicParams(0.9, 0.1)
    assert detect_hyperbolic_times(Q, ND, 0.1, p, 30).times == [3, 4, 5]
    assert brute_force_times(Q, ND, 0.1, p, 30) == [3, 4, 5]


def test_params_validation():
    for bad in ({"sigma": 1.0}, {"sigma": 0.5, "epsilon": -1}, {"sigma": 0.5, "delta_ball": 0}):
        with pytest.raises(BadParameters):
            HyperbolicParams(**bad)


def test_truncated_distance():
    d = np.array([0.01, 0.5, 2.0])
    np.testing.assert_array_equal(truncated_distance(d, 0.1), [0.01, 1.0, 1.0])
    np.testing.assert_array_equal(truncated_distance(d, 0.0), [1.0, 1.0, 1.0])


def test_lyapunov_quadratic():
    lam, sigma = lyapunov_sigma(Q, 0.123)
    assert lam == pytest.approx(np.log(2.0), abs=0.01)
    assert sigma == pytest.approx(np.exp(-lam / 4))


def test_frequency_field_independent_of_jobs():
    grid = np.linspace(-1.9, 1.9, 12)
    p = HyperbolicParams(0.85)
    a = frequency_field(Q, ND, p, grid, 100, jobs=1)
    b = frequency_field(Q, ND, p, grid, 100, jobs=2)
    assert a == b
    assert a["summary"]["points"] == 12


def test_pre_ball_doubling_and_precondition():
    D = DoublingMap()
    r = pre_ball_check(D, None, 0.3, 5, HyperbolicParams(0.75, 0.0, 0.1), 50)
    assert r["pass"]
    with pytest.raises(PreconditionViolation):
        pre_ball_check(D, None, 0.3, 5, HyperbolicParams(0.4), 10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.5, 0.99), st.sampled_from([0.0, 0.05, 0.5, 3.0]))
def test_streaming_equals_brute_force(x, sigma, eps):
    p = HyperbolicParams(sigma, eps)
    assert _times(x, p, 40) == brute_force_times(Q, ND, x, p, 40)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.5, 0.98), st.floats(0.001, 0.02))
def test_times_monotone_in_sigma_without_recurrence(x, s, ds):
    lo = set(_times(x, HyperbolicParams(s), 80))
    hi = set(_times(x, HyperbolicParams(s + ds), 80))
    assert lo <= hi


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 50))
def test_frequency_in_unit_interval(x, n):
    f = detect_hyperbolic_times(DoublingMap(), None, x, HyperbolicParams(0.6), n).frequency
    assert 0.0 <= f <= 1.0
