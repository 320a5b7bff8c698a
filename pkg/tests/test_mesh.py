import math

import numpy as np
import pytest

from fadforge.mesh import (Mesh, MeshError, boundary_edges, element_areas, merge_meshes, mirror_y,
                           split_seam)
from fadforge.meshgen import (DefectSpec, VGroove, defect_preset, generate_boundary_layer_mesh,
                              generate_center_crack_mesh, generate_pipe_section_mesh,
                              generate_rectangle_mesh, generate_sent_mesh, pipe_local_coordinates)


def test_rectangle_sets_and_area():
    m = generate_rectangle_mesh(2.0, 3.0, 4, 6)
    m.validate()
    assert element_areas(m).sum() == pytest.approx(6.0)
    assert m.node_sets["left"].size == 7
    assert len(boundary_edges(m)) == 2 * (4 + 6)


def test_validate_catches_bad_meshes():
    m = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    flipped = Mesh(m.nodes, m.elements[:, ::-1])
    with pytest.raises(MeshError):
        flipped.validate()
    with pytest.raises(MeshError):
        Mesh(m.nodes, m.elements, node_ids=np.ones(m.n_nodes, int)).validate()
    with pytest.raises(MeshError):
        Mesh(m.nodes, m.elements, {"x": [99]}).validate()


def test_sent_mesh_crack_and_resolution():
    m = generate_sent_mesh(W=5.0, L=50.0, a0=1.5, h=0.1)
    m.validate()
    x = m.nodes[:, 0]
    assert np.all(x[m.node_sets["crack_face"]] < 1.5)
    assert np.all(x[m.node_sets["ligament"]] >= 1.5 - 1e-9)
    assert element_areas(m).sum() == pytest.approx(5.0 * 25.0)
    assert m.check_resolution(0.4, m.element_sets["refined"])
    with pytest.raises(MeshError):
        generate_sent_mesh(a0=6.0)


def test_full_sent_mesh_has_open_seam():
    m = generate_sent_mesh(W=5.0, L=20.0, a0=1.5, h=0.25, half=False)
    m.validate()
    assert m.seams.shape[0] > 0
    a, b = m.seams.T
    np.testing.assert_allclose(m.nodes[a], m.nodes[b])
    assert np.all(m.nodes[a, 0] < 1.5)
    assert element_areas(m).sum() == pytest.approx(100.0)


def test_mirror_keeps_orientation():
    m = mirror_y(generate_rectangle_mesh(1.0, 1.0, 3, 3))
    m.validate()


def test_merge_glues_shared_edge():
    a = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    b = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    b.nodes[:, 0] += 1.0
    m = merge_meshes(a, b)
    assert m.n_nodes == 9 + 9 - 3
    assert m.seams.shape[0] == 0


def test_split_seam_duplicates_nodes():
    m = generate_rectangle_mesh(2.0, 2.0, 2, 2)
    line = np.nonzero((np.abs(m.nodes[:, 1] - 1.0) < 1e-12) & (m.nodes[:, 0] < 1.5))[0]
    upper = np.nonzero(m.centroids()[:, 1] > 1.0)[0]
    s = split_seam(m, line, upper)
    assert s.n_nodes == m.n_nodes + line.size
    s.validate()


def test_center_crack_mesh():
    m = generate_center_crack_mesh(20.0, 2.0, 0.25)
    m.validate()
    assert len(m.tips) == 2
    assert np.all(np.abs(m.nodes[m.seams[:, 0], 0]) < 2.0)


def test_boundary_layer_mesh():
    m = generate_boundary_layer_mesh(R=20.0, h=0.25, window=5.0)
    m.validate()
    assert element_areas(m).sum() == pytest.approx(2 * 20.0 * 20.0)
    x = m.nodes[:, 0]
    assert np.all(x[m.node_sets["crack_face"]] < 0)


@pytest.mark.parametrize("name", list("ABCDEF"))
def test_pipe_presets_mesh(name):
    spec = defect_preset(name, 2.0)
    m = generate_pipe_section_mesh(defect=spec, h=0.5)
    m.validate()
    s, rho = pipe_local_coordinates(m.nodes, 762.0, 12.7)
    assert rho.min() == pytest.approx(0.0, abs=1e-9)
    assert rho.max() == pytest.approx(12.7, rel=1e-9)
    assert m.seams.shape[0] > 0
    # the seam lies along the defect line
    ss, rr = pipe_local_coordinates(m.nodes[m.seams[:, 0]], 762.0, 12.7)
    ref, lo, hi = spec.rho_range(12.7)
    assert np.all((rr >= lo - 1e-6) & (rr <= hi + 1e-6))


def test_defect_validation():
    with pytest.raises(MeshError):
        DefectSpec("x", "side", 0.0, 1.0)
    with pytest.raises(MeshError):
        DefectSpec("x", "inner", 0.0, 20.0).rho_range(12.7)
    with pytest.raises(MeshError):
        DefectSpec("x", "embedded", 0.0, 2.0).rho_range(12.7)
    with pytest.raises(MeshError):
        defect_preset("Z", 2.0)


def test_groove_fusion_line():
    g = VGroove(root_half_width=1.0, bevel_deg=30.0)
    assert g.fusion_s(12.7) == pytest.approx(1.0 + 12.7 * math.tan(math.radians(30.0)))
