import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolab.errors import BadParameters, EvalAtSingularity, OutOfDomain
from thermolab.maps import (DoublingMap, NonDegeneracyData, QuadraticMap, RovellaMap, VianaMap, bc_certificate,
                            check_nondegeneracy, derivative_data, eval_map, make_map, misiurewicz_parameter,
                            orbit, rovella_certificate, trajectory)

BC = {"kappa": 1.01, "beta": 0.1, "lambda": math.log(4.0), "sigma": math.log(4.0) / 6, "delta": 0.1}


def test_eval_examples():
    assert eval_map(DoublingMap(), 0.3) == pytest.approx(0.6)
    assert eval_map(QuadraticMap(2.0), 0.0) == 2.0
    np.testing.assert_allclose(eval_map(VianaMap(a0=1.8), [0.25, 0.5]), [0.0, 1.56], atol=1e-12)


def test_derivative_data():
    d = derivative_data(QuadraticMap(2.0), 0.5)
    assert (d.norm_Df, d.det_Df, d.dist_to_critical) == (1.0, -1.0, 0.5)
    assert derivative_data(DoublingMap(), 0.2).det_Df == 2.0
    assert derivative_data(RovellaMap(2, 1.5), 1.0).norm_Df == pytest.approx(3.0)


def test_singularities_and_domain():
    with pytest.raises(EvalAtSingularity):
        eval_map(RovellaMap(2, 1.5), 0.0)
    with pytest.raises(EvalAtSingularity):
        derivative_data(QuadraticMap(2.0), 0.0)
    with pytest.raises(OutOfDomain):
        eval_map(QuadraticMap(2.0), 3.0)


def test_make_map_rejects_unknown():
    with pytest.raises(BadParameters):
        make_map("henon")
    with pytest.raises(BadParameters):
        make_map("doubling", a=1)
    with pytest.raises(BadParameters):
        make_map("quadratic", bogus=1)


def test_misiurewicz_preperiodic():
    a = misiurewicz_parameter()
    assert a == pytest.approx(1.5436890126920764, abs=1e-12)
    o = orbit(QuadraticMap(a), 0.0, 5)
    assert abs(o[3] - o[4]) < 1e-12


def test_nondegeneracy():
    Q = QuadraticMap(2.0)
    # B = 4 is too small near the edge x ~ 2 where |f'| ~ 4
    assert not check_nondegeneracy(Q, NonDegeneracyData(4, 1))["pass"]
    assert check_nondegeneracy(Q, NonDegeneracyData(8, 1))["pass"]
    r = check_nondegeneracy(DoublingMap(), NonDegeneracyData(1, 1))
    assert r["pass"] and r["vacuous"]


def test_bc_certificate():
    assert bc_certificate(QuadraticMap(2.0), BC, 100)["pass"]
    bad = bc_certificate(QuadraticMap(1.5), BC, 50)
    assert not bad["pass"]
    assert {v["condition"] for v in bad["violations"]} >= {"expansion"}


def test_rovella_certificate():
    ok = rovella_certificate(2, 1.5, {"lambda_c": 1.1, "alpha": 0.1}, 100)
    assert ok["pass"] and ok["K1"] == pytest.approx(3.0) and ok["K2"] == pytest.approx(3.0)
    assert not rovella_certificate(1.2, 1.5, {"lambda_c": 2.9, "alpha": 0.1}, 20)["pass"]


@pytest.mark.parametrize("m,x", [(DoublingMap(), 0.1234), (QuadraticMap(2.0), 0.321),
                                 (VianaMap(), [0.123, 0.3])])
def test_trajectory_matches_orbit(m, x):
    np.testing.assert_array_equal(trajectory(m, x, 200), orbit(m, x, 200))


def test_viana_orbit_stays_bounded():
    V = VianaMap()
    o = trajectory(V, [0.123, 0.3], 20000)
    assert np.all((o[:, 0] >= 0) & (o[:, 0] < 1))
    assert -0.9 < o[:, 1].min() and o[:, 1].max() < 1.6


def test_doubling_orbit_is_exact_on_lattice():
    # a float orbit of 0.3 collapses to 0 after ~55 steps; the lattice one does not
    o = orbit(DoublingMap(), 0.3, 200)
    assert np.count_nonzero(o[100:] == 0.0) == 0


@given(st.floats(0.0, 1.0, exclude_max=True))
def test_doubling_maps_into_circle(x):
    y = eval_map(DoublingMap(), x)
    assert 0.0 <= y < 1.0


@given(st.floats(-2.0, 2.0))
def test_quadratic_two_preserves_interval(x):
    assert -2.0 <= eval_map(QuadraticMap(2.0), x) <= 2.0


@settings(max_examples=30)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(1, 60))
def test_orbit_deterministic(x, n):
    np.testing.assert_array_equal(orbit(DoublingMap(), x, n), orbit(DoublingMap(), x, n))
