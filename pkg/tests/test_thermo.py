import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolab.errors import EmptySample, GeometryViolated, NonPositiveIntegral, ThermoBadParameters
from thermolab.inducing import build_scheme
from thermolab.hyperbolic import HyperbolicParams
from thermolab.maps import DoublingMap, NonDegeneracyData, QuadraticMap, VianaMap
from thermolab.potentials import constant, coordinate
from thermolab.thermo import (_grid_sample, birkhoff_average, caratheodory_pressure, choose_gamma, sharp_p_form,
                              equilibrium_state, finiteness_gap, normalize_potential, variational_pressure,
                              viana_hyperbolic_potential)

D = DoublingMap()
LOG2 = math.log(2.0)


@pytest.fixture(scope="module")
def first_return():
    return build_scheme(D, None, None, None, 30, 1e-9, [[0.0, 0.5]])


def test_caratheodory_doubling_grid():
    est = caratheodory_pressure(D, None, _grid_sample(D, 200), 0.05)
    assert est.value == pytest.approx(LOG2, abs=1e-12)
    assert est.method == "caratheodory"
    assert all(r["mean_group"] >= 4 for r in est.diagnostics["rows"] if r["n"] in (0, 1, 2))


def test_caratheodory_constant_shift():
    G = _grid_sample(D, 200)
    base = caratheodory_pressure(D, None, G, 0.05).value
    assert caratheodory_pressure(D, 0.7, G, 0.05).value - base == pytest.approx(0.7, abs=1e-12)


def test_caratheodory_empty():
    with pytest.raises(EmptySample):
        caratheodory_pressure(D, None, np.empty(0), 0.05)


def test_variational_pressure_first_return(first_return):
    assert variational_pressure(first_return, constant(0.0)).value == pytest.approx(LOG2, abs=1e-8)


def test_normalized_equilibrium_has_zero_free_energy(first_return):
    phi, est = normalize_potential(D, coordinate(), "variational_truncation", scheme=first_return)
    assert est.value > LOG2
    proj, rep = equilibrium_state(D, phi, first_return)
    assert abs(rep["free_energy"]) < 1e-10
    assert rep["defect"] < 1e-10
    assert proj.total == pytest.approx(1.0)
    pts = proj.sample(50, np.random.default_rng(0))
    assert pts.shape == (50,) and np.all((pts >= 0) & (pts < 1))


def test_normalize_by_number():
    phi, est = normalize_potential(D, coordinate(), 0.25)
    assert est.value == 0.25
    assert phi(np.array([0.5]))[0] == pytest.approx(0.25)


def test_birkhoff_average_lebesgue():
    assert birkhoff_average(D, coordinate(), 0.123, 100_000) == pytest.approx(0.5, abs=5e-3)


def test_finiteness_gap_example():
    r = finiteness_gap(1.0, 2.0, 0.9, 1, 0.01, 0.01)
    assert r["delta_flat"] == pytest.approx(-0.00671490112387225, abs=1e-15)
    # the two denominators agree at n = 1
    assert r["delta_flat_A"] == r["delta_flat_B"]
    r2 = finiteness_gap(1.0, 2.0, 0.9, 2, 0.01, 0.01)
    assert r2["delta_flat_A"] != r2["delta_flat_B"]


@pytest.mark.parametrize("kw", [{"gamma": 0.0}, {"gamma": 1.0}, {"K": 0.5}, {"n": 0}, {"m_Cn": 1.0},
                                {"reading": "C"}, {"lam": math.nan}])
def test_finiteness_gap_rejects(kw):
    args = {"K": 1.0, "lam": 2.0, "gamma": 0.5, "n": 1, "m_Cn": 0.01, "mu_Cn": 0.01, "reading": "B"}
    args.update(kw)
    with pytest.raises(ThermoBadParameters) as e:
        finiteness_gap(**args)
    assert e.value.code == "thermo.BadParameters"


def test_choose_gamma_feasible_for_k1():
    for lam in (2.0, 3.0, 4.0):
        for flavor in ("flat", "sharp"):
            g, worst = choose_gamma(1.0, lam, flavor, grid=400)
            assert 0 < g < 1 and worst < 0


def test_viana_certificate_small():
    V = VianaMap()
    _, cert = viana_hyperbolic_potential(V, L=100_000, claim_orbits=10, claim_length=200, hc_sample=100)
    assert cert["integral_estimate"] > 0
    assert cert["claim_pass"]
    assert cert["k"] > 0


def test_viana_geometry_and_sign_errors():
    V = VianaMap()
    # critical values x = a(theta) fall inside this box
    with pytest.raises(GeometryViolated):
        viana_hyperbolic_potential(V, ((0.0, 1.0), (1.4, 1.6)), L=1000)
    # below the attractor: never visited
    with pytest.raises(NonPositiveIntegral):
        viana_hyperbolic_potential(V, ((0.25, 0.30), (-1.05, -0.95)), L=20_000)


@settings(max_examples=100)
@given(st.floats(1.0, 3.0), st.floats(1.0, 5.0), st.floats(0.01, 20.0), st.integers(1, 10))
def test_p_form_identity(K, lam, p, n):
    m = math.exp(-lam * n)
    direct = finiteness_gap(K, lam, p / (p + 1), n, m, m)["delta_sharp"]
    assert direct == pytest.approx(sharp_p_form(K, lam, p, n, m), abs=1e-12)


@settings(max_examples=100)
@given(st.floats(1.0, 3.0), st.floats(0.01, 0.99), st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
def test_readings_agree_at_depth_one(K, gamma, m, mu):
    r = finiteness_gap(K, 2.0, gamma, 1, m, mu)
    assert r["delta_flat_A"] == pytest.approx(r["delta_flat_B"], abs=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2.0, 2.0))
def test_caratheodory_shift_property(c):
    G = _grid_sample(D, 120)
    a = caratheodory_pressure(D, None, G, 0.05).value
    b = caratheodory_pressure(D, c, G, 0.05).value
    assert b - a == pytest.approx(c, abs=1e-9)


def test_quadratic_max_entropy_measure():
    # phi = 0 on the full quadratic: the projected measure should carry entropy close to log 2
    q, nd = QuadraticMap(2.0), NonDegeneracyData(8.0, 1.0)
    p = HyperbolicParams(2 ** -0.25, 0.01, 0.5)
    sch = build_scheme(q, nd, p, -1.5, 25, 1e-7)
    phi, est = normalize_potential(q, 0.0, "variational_truncation", scheme=sch, N=64)
    proj, rep = equilibrium_state(q, phi, sch, N=64, params=p, nd=nd, support_samples=50)
    assert abs(rep["h_mu"] - LOG2) <= 0.05
    assert abs(est.value - LOG2) <= 0.05
    assert rep["diagnostics"]["expanding"]
