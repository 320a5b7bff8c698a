import numpy as np
import pytest

from fadforge.assembly import QuadSpace
from fadforge.hydrogen import (BAINITIC, FERRITIC_PEARLITIC, DiffusionBC, blend_degradation,
                               diffusion_step, stationary_concentration, toughness_field,
                               total_hydrogen)
from fadforge.material import DomainError, HydrogenParams
from fadforge.meshgen import generate_rectangle_mesh

H = HydrogenParams()


@pytest.fixture(scope="module")
def strip():
    mesh = generate_rectangle_mesh(10.0, 0.1, 1000, 1)
    return mesh, QuadSpace(mesh)


def test_drift_steady_state_is_boltzmann(strip):
    mesh, space = strip
    sh = 100.0 * mesh.nodes[:, 0]
    C = stationary_concentration(space, H, DiffusionBC({"left": 0.17}), sh)
    ref = 0.17 * np.exp(H.Vh * sh / (H.R * H.T))
    np.testing.assert_allclose(C, ref, rtol=1e-6)


def test_zero_stress_steady_state_is_linear(strip):
    mesh, space = strip
    C = stationary_concentration(space, H, DiffusionBC({"left": 0.3, "right": 0.1}), np.zeros(mesh.n_nodes))
    x = mesh.nodes[:, 0]
    np.testing.assert_allclose(C, 0.3 - 0.02 * x, rtol=0, atol=1e-10)


def test_transient_conserves_mass():
    mesh = generate_rectangle_mesh(2.0, 1.0, 20, 10)
    space = QuadSpace(mesh)
    rng = np.random.default_rng(3)
    C = rng.uniform(0.0, 1.0, mesh.n_nodes)
    sh = 300.0 * np.sin(mesh.nodes[:, 0]) * mesh.nodes[:, 1]
    m0 = total_hydrogen(space, C)
    for _ in range(5):
        C_new = diffusion_step(space, H, 50.0, DiffusionBC(), C, sh)
        assert total_hydrogen(space, C_new) == pytest.approx(total_hydrogen(space, C), rel=1e-8)
        C = C_new
    assert total_hydrogen(space, C) == pytest.approx(m0, rel=1e-8)


def test_transient_approaches_steady_state():
    mesh = generate_rectangle_mesh(1.0, 0.1, 40, 1)
    space = QuadSpace(mesh)
    bc = DiffusionBC({"left": 1.0, "right": 0.0})
    sh = np.zeros(mesh.n_nodes)
    C = np.zeros(mesh.n_nodes)
    for _ in range(200):
        C = diffusion_step(space, H, 1e4, bc, C, sh)
    np.testing.assert_allclose(C, stationary_concentration(space, H, bc, sh), atol=1e-8)


def test_sievert_boundary_needs_pressure():
    mesh = generate_rectangle_mesh(1.0, 1.0, 4, 4)
    space = QuadSpace(mesh)
    bc = DiffusionBC({"left": "sievert"})
    with pytest.raises(DomainError):
        stationary_concentration(space, H, bc, np.zeros(mesh.n_nodes))
    C = stationary_concentration(space, H, bc, np.zeros(mesh.n_nodes), pressure=16.0)
    np.testing.assert_allclose(C, 0.077 * 4.0)


def test_bc_validation():
    with pytest.raises(DomainError):
        DiffusionBC({"left": -0.1})
    with pytest.raises(DomainError):
        DiffusionBC({"left": "henry"})
    with pytest.raises(DomainError):
        diffusion_step(QuadSpace(generate_rectangle_mesh(1, 1)), H, 0.0, DiffusionBC(), np.zeros(4), np.zeros(4))


def test_blended_degradation_laws():
    f_min, q1, q2 = blend_degradation([0.0, 1.0, 0.5])
    np.testing.assert_allclose(f_min, [FERRITIC_PEARLITIC.f_min, BAINITIC.f_min, 0.425])
    np.testing.assert_allclose(q1, [10.0, 30.0, 20.0])
    with pytest.raises(DomainError):
        blend_degradation([1.2])
    G = toughness_field([0.0, 0.17, 1e3], 5.0, 0.65, 30.0, 1.0)
    np.testing.assert_allclose(G, [5.0, 5.0 * (0.65 + 0.35 * np.exp(-5.1)), 3.25])
