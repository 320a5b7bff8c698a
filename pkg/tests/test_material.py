import math

import numpy as np
import pytest
from scipy.integrate import quad

from fadforge.material import (DomainError, HydrogenParams, MaterialParams, PointState,
                               critical_stress_1d, degradation_g, degradation_g_derivative,
                               degradation_gp, elastic_driving_energy, flow_stress,
                               homogeneous_1d_response, hydrogen_toughness_factor,
                               length_scale_for_ductility, plastic_energy, return_mapping,
                               sievert_concentration, stress_update, to_mandel, von_mises)


def test_degradation_values():
    assert degradation_g(0.0) == 1.0
    assert degradation_g(1.0) == 0.0
    assert degradation_g(0.5) == 0.25
    assert degradation_g_derivative(0.25) == -1.5
    assert degradation_gp(0.0, 0.1) == 1.0
    assert degradation_gp(1.0, 0.1) == pytest.approx(0.9)
    assert degradation_gp(0.5, 0.1) == pytest.approx(0.925)


@pytest.mark.parametrize("phi", [-0.1, 1.2, float("nan")])
def test_degradation_rejects_out_of_range(phi):
    with pytest.raises(DomainError):
        degradation_g(phi)


def test_params_validation():
    with pytest.raises(DomainError):
        MaterialParams(nu=0.5)
    with pytest.raises(DomainError):
        MaterialParams(Gc=0.0)
    with pytest.raises(DomainError):
        HydrogenParams(f_min=0.0)
    # perfect plasticity is allowed for limit-load work
    assert MaterialParams(n=0.0).n == 0.0


def test_plastic_energy_is_integral_of_flow_stress():
    p = MaterialParams()
    for ep in (1e-6, 1e-3, 0.05, 0.4):
        ref, _ = quad(lambda e: flow_stress(e, p.sigma_y0, p.E, p.n), 0.0, ep, epsabs=0, epsrel=1e-12)
        assert plastic_energy(ep, p) == pytest.approx(ref, rel=1e-9)
    assert plastic_energy(0.0, p) == 0.0


def test_elastic_driving_energy_split():
    p = MaterialParams()
    # pure compression stores no tensile energy in the volumetric part
    eps = np.diag([-1e-3, -1e-3, -1e-3])
    assert elastic_driving_energy(eps, p) == pytest.approx(0.0, abs=1e-15)
    # uniaxial tension: volumetric + deviatoric parts
    e = np.diag([1e-3, 0.0, 0.0])
    vol = 1e-3
    dev = np.diag([2e-3 / 3, -1e-3 / 3, -1e-3 / 3])
    ref = 0.5 * p.bulk * vol**2 + p.shear * np.sum(dev * dev)
    assert elastic_driving_energy(e, p) == pytest.approx(ref, rel=1e-12)


def test_critical_stress_matches_closed_form():
    p = MaterialParams(Gc=5.0, ell=0.4)
    assert critical_stress_1d(p) == pytest.approx(math.sqrt(27 * 200000 * 5 / (256 * 0.4)), rel=1e-12)
    ell = length_scale_for_ductility(1.5, p)
    assert critical_stress_1d(p.with_(ell=ell)) == pytest.approx(1200.0, rel=1e-12)


def test_hydrogen_factor_and_sievert():
    h = HydrogenParams()
    assert hydrogen_toughness_factor(0.0, h) == 1.0
    assert hydrogen_toughness_factor(1e6, h) == pytest.approx(0.65)
    assert hydrogen_toughness_factor(0.17, h) == pytest.approx(0.65 + 0.35 * math.exp(-5.1), rel=1e-12)
    assert hydrogen_toughness_factor(0.17, h) == pytest.approx(0.652, abs=5e-4)
    assert sievert_concentration(16.0, 0.077) == pytest.approx(0.308)
    with pytest.raises(DomainError):
        sievert_concentration(-1.0, 0.077)


def test_elastic_return_is_hooke():
    p = MaterialParams()
    eps = np.array([1e-4, -2e-4, 0.0, 1e-4])
    r = return_mapping(eps, np.zeros(4), 0.0, 0.0, p.E, p.nu, p.sigma_y0, p.n, p.beta)
    lam = p.E * p.nu / ((1 + p.nu) * (1 - 2 * p.nu))
    mu = p.shear
    ref = lam * eps[:3].sum() * np.array([1, 1, 1, 0]) + 2 * mu * eps
    np.testing.assert_allclose(r.sigma, ref, rtol=1e-12, atol=1e-9)
    assert r.eps_p_eq == 0.0


def test_return_mapping_lands_on_yield_surface():
    p = MaterialParams()
    eps = np.array([0.0, 0.02, 0.0, 0.005])
    r = return_mapping(eps, np.zeros(4), 0.0, 0.3, p.E, p.nu, p.sigma_y0, p.n, p.beta)
    gp = degradation_gp(0.3, p.beta)
    assert von_mises(r.sigma) == pytest.approx(gp * flow_stress(r.eps_p_eq, p.sigma_y0, p.E, p.n), rel=1e-9)
    assert float(r.eps_p_eq) > 0
    # plastic flow is deviatoric
    assert abs(r.eps_p[:3].sum()) < 1e-14


def test_consistent_tangent_matches_finite_differences():
    p = MaterialParams()
    eps = np.array([0.001, 0.006, 0.0, 0.002])
    ep0 = np.array([0.0, 0.001, -0.001, 0.0])
    args = (ep0, 0.001, 0.2, p.E, p.nu, p.sigma_y0, p.n, p.beta)
    D = return_mapping(eps, *args).tangent
    h = 1e-8
    fd = np.empty((4, 4))
    for j in range(4):
        d = np.zeros(4)
        d[j] = h
        fd[:, j] = (return_mapping(eps + d, *args).sigma - return_mapping(eps - d, *args).sigma) / (2 * h)
    np.testing.assert_allclose(D, fd, rtol=1e-5, atol=1e-3)


def test_stress_update_accepts_tensor():
    p = MaterialParams()
    eps = np.diag([0.0, 0.01, 0.0])
    sig, st = stress_update(eps, PointState(), p)
    assert st.eps_p_eq > 0
    assert st.H > 0
    np.testing.assert_allclose(sig, return_mapping(to_mandel(eps), np.zeros(4), 0.0, 0.0, p.E, p.nu,
                                                   p.sigma_y0, p.n, p.beta).sigma)


def test_1d_brittle_peak_is_critical_stress():
    p = MaterialParams(Gc=5.0, ell=0.4)
    r = homogeneous_1d_response(p)
    assert r.sigma_u == pytest.approx(critical_stress_1d(p), rel=2e-3)
    assert r.eps_p_eq_at_peak == 0.0


def test_1d_ductile_peak_above_yield():
    p = MaterialParams(Gc=88.0)
    p = p.with_(ell=length_scale_for_ductility(1.5, p))
    r = homogeneous_1d_response(p)
    assert p.sigma_y0 < r.sigma_u < 1.5 * p.sigma_y0
    assert r.eps_p_eq_at_peak > 0


def test_1d_grid_validation():
    with pytest.raises(ValueError):
        homogeneous_1d_response(MaterialParams(), strain_grid=[0.0, 0.2, 0.1])
    with pytest.raises(ValueError):
        homogeneous_1d_response(MaterialParams(), mode="biaxial")
