import numpy as np
import pytest

from fadforge.assembly import Constraints, QuadSpace
from fadforge.fem import (MaterialField, Simulation, SolverConfig, limit_load_analysis, reaction)
from fadforge.material import MaterialParams, homogeneous_1d_response
from fadforge.mesh import Mesh, MeshError
from fadforge.meshgen import generate_rectangle_mesh

ELASTIC = MaterialParams(sigma_y0=1e12)


def _distorted_patch():
    nodes = np.array([[0, 0], [2, 0], [2, 2], [0, 2],
                      [0.6, 0.5], [1.4, 0.7], [1.3, 1.5], [0.5, 1.2]], float)
    elements = np.array([[0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7], [4, 5, 6, 7]])
    return Mesh(nodes, elements)


@pytest.mark.parametrize("bbar", [True, False])
def test_patch_test_linear_field_is_exact(bbar):
    m = _distorted_patch()
    m.validate()
    outer = np.arange(4)
    G = np.array([[1e-3, 4e-4], [-2e-4, 5e-4]])
    c = Constraints(m.n_nodes).prescribe_vector(outer, m.nodes[outer] @ G.T)
    sim = Simulation(m, MaterialField.uniform(m, ELASTIC), c,
                     SolverConfig(phase_field=False, residual_stiffness=0.0))
    if not bbar:
        sim.space = QuadSpace(m, bbar=False)
    st, _ = sim.staggered_step(1.0)
    u = st.u.reshape(-1, 2)
    np.testing.assert_allclose(u, m.nodes @ G.T, atol=1e-14)
    eps = st.eps
    ref = np.array([G[0, 0], G[1, 1], 0.0, np.sqrt(2) * 0.5 * (G[0, 1] + G[1, 0])])
    # either Mandel or engineering shear; compare normal parts exactly
    np.testing.assert_allclose(eps[..., :3], np.broadcast_to(ref[:3], eps[..., :3].shape), atol=1e-14)
    assert np.ptp(eps[..., 3]) < 1e-14


def test_inclined_roller_constraint():
    m = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    d = np.array([1.0, 1.0]) / np.sqrt(2)
    c = Constraints(m.n_nodes).fix(m.node_sets["left"]).prescribe(m.node_sets["right"], d, 1e-3)
    sim = Simulation(m, MaterialField.uniform(m, ELASTIC), c, SolverConfig(phase_field=False))
    st, _ = sim.staggered_step(1.0)
    u = st.u.reshape(-1, 2)[m.node_sets["right"]]
    np.testing.assert_allclose(u @ d, 1e-3, rtol=1e-12)


def test_rigid_edge_transmits_resultant():
    m = generate_rectangle_mesh(1.0, 2.0, 2, 4)
    top = m.node_sets["top"]
    c = Constraints(m.n_nodes).fix(m.node_sets["bottom"], [1]).fix(m.node_sets["bottom"][:1], [0])
    c.rigid_edge(top, axis=1, value=1.0)
    sim = Simulation(m, MaterialField.uniform(m, ELASTIC), c,
                     SolverConfig(phase_field=False, residual_stiffness=0.0),
                     load_measure=lambda f: reaction(f, top, (0, 1)))
    st, _ = sim.staggered_step(1e-3)
    # plane-strain uniaxial stress: sigma_yy = E/(1 - nu^2) eps_yy
    E, nu = ELASTIC.E, ELASTIC.nu
    assert st.load == pytest.approx(E / (1 - nu**2) * 0.5e-3 * 1.0, rel=1e-9)


def test_conflicting_constraints_rejected():
    m = generate_rectangle_mesh(1.0, 1.0)
    c = Constraints(m.n_nodes).prescribe([0], 0, 1.0).prescribe([0], 0, 2.0)
    with pytest.raises(MeshError):
        c.build(m.nodes)


def _single_element(p, cfg, lam_max, dlam):
    m = generate_rectangle_mesh(1.0, 1.0, 1, 1)
    c = (Constraints(m.n_nodes).fix(m.node_sets["bottom"], [1]).fix(m.node_sets["left"], [0])
         .prescribe(m.node_sets["top"], 1, 1.0))
    top = m.node_sets["top"]
    sim = Simulation(m, MaterialField.uniform(m, p), c, cfg, load_measure=lambda f: reaction(f, top, (0, 1)))
    return sim, sim.run(lam_max, dlam, dlam_max=5 * dlam)


def test_single_element_brittle_matches_1d():
    p = MaterialParams(Gc=5.0, ell=0.4)
    cfg = SolverConfig(kinematics="plane_stress", stagger_tol=1e-8, residual_stiffness=0.0,
                       advance_length=1e9)
    sim, r = _single_element(p, cfg, 0.02, 2e-5)
    o = homogeneous_1d_response(p)
    assert r.max_load == pytest.approx(o.sigma_u, rel=0.01)
    assert r.max_load == pytest.approx(513.0, rel=0.02)
    assert sim.state.p.max() == 0.0


def test_limit_load_of_plate_in_tension():
    m = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    top = m.node_sets["top"]
    c = (Constraints(m.n_nodes).fix(m.node_sets["bottom"], [1]).fix(m.node_sets["left"], [0])
         .prescribe(top, 1, 1.0))
    p = MaterialParams(sigma_y0=500.0)
    ll = limit_load_analysis(m, MaterialField.uniform(m, p), c, lambda f: reaction(f, top, (0, 1)),
                             lam_max=0.02, n_steps=40)
    # plane-strain uniaxial stress state: von Mises limit 2/sqrt(3) sigma_y0
    assert ll.Py == pytest.approx(2 / np.sqrt(3) * 500.0, rel=0.01)


def test_elastic_predictor_handles_local_loading():
    # a prescribed displacement on one edge with plastic flow from the first step
    m = generate_rectangle_mesh(4.0, 1.0, 16, 4)
    c = Constraints(m.n_nodes).fix(m.node_sets["left"]).prescribe(m.node_sets["right"], 0, 1.0)
    p = MaterialParams(sigma_y0=300.0, n=0.0)
    sim = Simulation(m, MaterialField.uniform(m, p), c,
                     SolverConfig(phase_field=False, residual_stiffness=0.0, max_newton=25))
    st, info = sim.staggered_step(0.02)
    assert info["newton_iterations"] < 25
    assert st.p.max() > 0
