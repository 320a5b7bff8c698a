"""Randomised invariants of the material update, the solver and the FAD tools."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fadforge.assembly import Constraints
from fadforge.fad import (AssessmentPoint, FailureAssessmentLine, LoadingPath, assessment_point,
                          safety_factor)
from fadforge.fem import MaterialField, Simulation, SolverConfig, reaction
from fadforge.material import (MaterialParams, degradation_gp, flow_stress, plastic_energy,
                               return_mapping, von_mises)
from fadforge.meshgen import generate_rectangle_mesh

strain = st.floats(-0.02, 0.02, allow_nan=False)
unit = st.floats(0.0, 0.999)


@settings(max_examples=200, deadline=None)
@given(e=st.lists(strain, min_size=4, max_size=4), ep=st.lists(st.floats(-2e-3, 2e-3), min_size=3, max_size=3),
       p0=st.floats(0.0, 0.05), phi=unit, n=st.floats(0.0, 0.3), sy=st.floats(200.0, 1200.0))
def test_return_mapping_kkt(e, ep, p0, phi, n, sy):
    eps_p = np.array([ep[0], ep[1], -ep[0] - ep[1], ep[2]])
    P = MaterialParams(sigma_y0=sy, n=n)
    r = return_mapping(np.array(e), eps_p, p0, phi, P.E, P.nu, sy, n, P.beta)
    gp = degradation_gp(phi, P.beta)
    f = von_mises(r.sigma) - gp * flow_stress(r.eps_p_eq, sy, P.E, n)
    dp = float(r.eps_p_eq) - p0
    scale = gp * sy
    assert dp >= 0.0
    assert f <= 1e-8 * scale
    assert abs(dp * f) <= 1e-8 * scale * max(dp, 1e-12)
    # plastic strain stays deviatoric
    assert abs(r.eps_p[:3].sum()) < 1e-12


@settings(max_examples=100, deadline=None)
@given(p=st.lists(st.floats(0.0, 0.5), min_size=2, max_size=2), n=st.floats(0.0, 0.3))
def test_plastic_energy_monotone(p, n):
    P = MaterialParams(n=n)
    lo, hi = sorted(p)
    assert plastic_energy(hi, P) >= plastic_energy(lo, P)


def _small_model(Gc):
    m = generate_rectangle_mesh(1.0, 1.0, 3, 3)
    top = m.node_sets["top"]
    c = (Constraints(m.n_nodes).fix(m.node_sets["bottom"], [1]).fix(m.node_sets["left"], [0])
         .prescribe(top, 1, 1.0))
    P = MaterialParams(Gc=Gc, ell=0.4)
    cfg = SolverConfig(advance_length=1e9, max_stagger=200)
    return Simulation(m, MaterialField.uniform(m, P), c, cfg, load_measure=lambda f: reaction(f, top, (0, 1)))


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(Gc=st.floats(2.0, 60.0), incs=st.lists(st.floats(-1e-3, 4e-3), min_size=4, max_size=8))
def test_history_variables_and_phase_field_bounds(Gc, incs):
    sim = _small_model(Gc)
    lam = 0.0
    prev = sim.state
    for d in incs:
        lam = max(lam + d, 0.0)
        new, _ = sim.staggered_step(lam)
        assert np.all(new.phi >= -1e-9) and np.all(new.phi <= 1 + 1e-9)
        assert np.all(new.H >= prev.H)
        assert np.all(new.p >= prev.p)
        assert np.all(new.psi_p >= prev.psi_p - 1e-12)
        sim.state = prev = new


@settings(max_examples=50, deadline=None)
@given(E=st.floats(5e4, 3e5), sy=st.floats(200.0, 1200.0), n=st.floats(0.02, 0.3),
       lr_max=st.floats(1.0, 1.6), opt=st.sampled_from(["1", "2"]))
def test_fal_shape(E, sy, n, lr_max, opt):
    fal = (FailureAssessmentLine.option1(E, sy, lr_max) if opt == "1"
           else FailureAssessmentLine.option2(E, sy, n, lr_max))
    assert abs(fal(0.0) - 1.0) <= 1e-9
    assert np.all(np.diff(fal.Lr) > 0)
    assert np.all(np.diff(fal.f) <= 1e-12)
    assert np.all((fal.f > 0) & (fal.f <= 1))
    x = np.linspace(0.0, lr_max, 300)
    assert np.all(np.diff(fal(x)) <= 1e-12)


@settings(max_examples=100, deadline=None)
@given(K=st.floats(1.0, 1e4), Kc=st.floats(10.0, 1e4), P=st.floats(1.0, 1e5), Py=st.floats(10.0, 1e5),
       scales=st.lists(st.floats(0.05, 3.0), min_size=3, max_size=6, unique=True))
def test_air_paths_are_rays(K, Kc, P, Py, scales):
    pts = [assessment_point(s * K, Kc, s * P, Py, load=s * P) for s in sorted(scales)]
    assert LoadingPath(pts).is_ray(1e-9)


@pytest.fixture(scope="module")
def fal1():
    return FailureAssessmentLine.option1(2e5, 800.0, 1.114)


@settings(max_examples=200, deadline=None)
@given(Lr=st.floats(0.0, 1.5), Kr=st.floats(0.0, 1.5), scale=st.floats(0.1, 10.0))
def test_safety_factor_ray_scaling(fal1, Lr, Kr, scale):
    if math.hypot(Lr, Kr) < 1e-3:
        return
    a = AssessmentPoint(Lr, Kr)
    b = AssessmentPoint(scale * Lr, scale * Kr)
    assert safety_factor(b, fal1) == pytest.approx(safety_factor(a, fal1) / scale, rel=1e-9)
