import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolab.errors import BaseBallEscapes, NoBranchesFound
from thermolab.hyperbolic import HyperbolicParams, detect_hyperbolic_times
from thermolab.inducing import (InducingScheme, build_scheme, code_orbit, induced_potential,
                                inducing_time_potential, tau_integral, variation_estimate)
from thermolab.maps import DoublingMap, NonDegeneracyData, QuadraticMap, orbit
from thermolab.potentials import coordinate


@pytest.fixture(scope="module")
def first_return():
    return build_scheme(DoublingMap(), None, None, None, 12, 1e-7, [[0.0, 0.5]])


@pytest.fixture(scope="module")
def quad_scheme():
    q, nd = QuadraticMap(2.0), NonDegeneracyData(8.0, 1.0)
    p = HyperbolicParams(2 ** -0.25, 0.01, 0.5)
    return build_scheme(q, nd, p, -1.5, 12, 1e-6)


def test_first_return_branches(first_return):
    s = first_return
    assert s.n_branches == 12
    np.testing.assert_array_equal(s.taus, np.arange(1, 13))
    np.testing.assert_allclose(s.masses, 0.5 ** np.arange(1, 13))
    assert s.branches[1].cell == [0.25, 0.375]
    assert s.completeness_mass == pytest.approx(1 - 2.0 ** -12)


def test_kac_mean_return_time(first_return):
    # Leb(U) = 1/2, so the mean return time tends to 2
    assert tau_integral(first_return, first_return.lebesgue_measure()) == pytest.approx(2.0, abs=5e-3)
    assert tau_integral(first_return, first_return.lebesgue_measure(), 3) < 1.8


def test_code_orbit(first_return):
    # 0.1 -> 0.2 -> 0.4 -> 0.2 -> ...
    assert code_orbit(first_return, 0.1, 5) == [0, 0, 2, 0, 2]


def test_round_trip_and_truncation(first_return):
    s2 = InducingScheme.from_dict(first_return.to_dict())
    assert s2.n_branches == first_return.n_branches
    np.testing.assert_array_equal(s2.taus, first_return.taus)
    assert first_return.truncated(3).n_branches == 3


def test_induced_constants_and_variation(first_return):
    phi = coordinate()
    Phi = induced_potential(first_return, phi, sigma=0.5)
    assert (Phi.A, Phi.theta) == (1.0, 0.5)
    for n in (1, 4, 8):
        assert variation_estimate(Phi, first_return, n, 50, phi=phi)["pass"]


def test_inducing_time_potential(first_return):
    t = inducing_time_potential(first_return)
    np.testing.assert_array_equal(t.func(np.array([[0], [5]])), [1.0, 6.0])


def test_errors():
    with pytest.raises(NoBranchesFound):
        build_scheme(DoublingMap(), None, None, None, 0, 1e-6, [[0.0, 0.5]])
    with pytest.raises(BaseBallEscapes):
        build_scheme(QuadraticMap(2.0), None, None, None, 5, 1e-6, [[3.0, 4.0]])


def test_hyperbolic_returns_are_hyperbolic(quad_scheme):
    s = quad_scheme
    assert s.n_branches > 10
    q, nd = s.map, NonDegeneracyData(8.0, 1.0)
    p = HyperbolicParams(2 ** -0.25, 0.01, 0.5)
    for b in s.branches[:: max(1, s.n_branches // 25)]:
        c = 0.5 * (b.cell[0] + b.cell[1])
        assert b.tau in detect_hyperbolic_times(q, nd, c, p, b.tau).times


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 11), st.floats(0.0, 0.5, exclude_max=True))
def test_pullback_lands_in_cell_and_returns(s, u):
    sch = build_scheme(DoublingMap(), None, None, None, 12, 1e-7, [[0.0, 0.5]])
    y = sch.pullback([[s]], np.array([u]))[0]
    lo, hi = sch.branches[s].cell
    assert lo - 1e-12 <= y <= hi + 1e-12
    end = orbit(sch.map, y, sch.branches[s].tau)[-1]
    assert sch.map.distance(np.array([end]), np.array([u]))[0] < 1e-9
