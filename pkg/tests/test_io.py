import numpy as np
import pytest

from fadforge.assembly import Constraints
from fadforge.fad import AssessmentPoint, FailureAssessmentLine, LoadingPath
from fadforge.fem import MaterialField, Simulation, SolverConfig
from fadforge.io import (FADTable, FormatError, PropertyFieldMap, RunConfig, apply_property_field,
                         equilibrate_residual_stress, load_property_field, load_run_config,
                         read_fad_csv, read_mesh, read_summary, synthetic_weld_field,
                         write_fad_csv, write_field_csv, write_mesh, write_property_field,
                         write_run_config, write_summary)
from fadforge.material import DomainError, HydrogenParams, MaterialParams
from fadforge.mesh import MeshError
from fadforge.meshgen import (defect_preset, generate_pipe_section_mesh, generate_rectangle_mesh,
                              generate_sent_mesh)


def test_mesh_round_trip_is_exact(tmp_path):
    m = generate_sent_mesh(W=5.0, L=20.0, a0=1.5, h=0.25, half=False)
    m.nodes[:, 0] += 1e-3 * np.sin(7 * m.nodes[:, 1])
    path = tmp_path / "m.mesh"
    write_mesh(path, m)
    r = read_mesh(path)
    assert np.array_equal(r.nodes, m.nodes)
    assert np.array_equal(r.elements, m.elements)
    assert np.array_equal(r.seams, m.seams)
    assert set(r.node_sets) == set(m.node_sets)
    for k in m.node_sets:
        assert np.array_equal(np.sort(r.node_sets[k]), np.sort(m.node_sets[k]))
    assert r.tips[0].x == m.tips[0].x


def test_mesh_reader_errors(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("# something else\n")
    with pytest.raises(FormatError):
        read_mesh(p)
    with pytest.raises(FormatError):
        read_mesh(tmp_path / "missing.mesh")


def test_property_field_round_trip(tmp_path):
    pf = PropertyFieldMap({"sigma_y0": {1: 900.0, 3: 0.1 + 0.2}, "x_b": {2: 0.25}})
    path = tmp_path / "pf.csv"
    write_property_field(path, pf)
    assert load_property_field(path).values == pf.values


def test_property_field_validation():
    m = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    with pytest.raises(MeshError):
        PropertyFieldMap({"Gc": {99: 1.0}}).validate(m)
    with pytest.raises(DomainError):
        PropertyFieldMap({"x_b": {1: 1.5}})
    with pytest.raises(FormatError):
        PropertyFieldMap({"colour": {1: 1.0}})


def test_empty_map_is_homogeneous():
    m = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    base = MaterialField.uniform(m, MaterialParams())
    mat, corr = apply_property_field(PropertyFieldMap(), m, base)
    assert corr == 0.0
    np.testing.assert_array_equal(mat.sigma_y0, base.sigma_y0)
    np.testing.assert_array_equal(mat.Gc, base.Gc)


def test_residual_stress_equilibration():
    m = generate_rectangle_mesh(4.0, 1.0, 16, 4)
    c = Constraints(m.n_nodes).fix(m.node_sets["left"])
    ne = m.n_elements
    E = np.full(ne, 2e5)
    nu = np.full(ne, 0.3)
    # a self-equilibrated field needs no correction
    zero = np.zeros((ne, 4))
    assert equilibrate_residual_stress(m, zero, E, nu, c).correction == 0.0
    # a uniform stress on free edges cannot be balanced
    s = np.zeros((ne, 4))
    s[:, 0] = 200.0
    with pytest.raises(DomainError):
        equilibrate_residual_stress(m, s, E, nu, c)


def test_synthetic_weld_field_features():
    m = generate_pipe_section_mesh(defect=defect_preset("A", 2.0), h=0.5)
    base = MaterialParams(sigma_y0=450.0)
    pf = synthetic_weld_field(m, 762.0, 12.7, base, residual_amplitude=0.0)
    xb = pf.array(m, "x_b", 0.0)
    sy = pf.array(m, "sigma_y0", base.sigma_y0)
    assert xb.max() == 1.0 and 0.0 < np.unique(xb)[1] < 1.0
    np.testing.assert_allclose(sy[xb > 0], 1.4 * 450.0)
    np.testing.assert_allclose(sy[xb == 0], 450.0)


def test_fad_table_round_trip(tmp_path):
    fal = FailureAssessmentLine.option1(2e5, 800.0, 1.11)
    pts = [AssessmentPoint(0.1 * k, 0.2 * k, "", float(k)) for k in range(1, 4)]
    table = FADTable({"option1": fal}, {"g5": LoadingPath(pts, 2)},
                     [AssessmentPoint(0.3, 0.6, "g5", 3.0)], {"note": "x"})
    path = tmp_path / "fad.csv"
    write_fad_csv(path, table)
    r = read_fad_csv(path)
    np.testing.assert_array_equal(r.fals["option1"].Lr, fal.Lr)
    np.testing.assert_array_equal(r.fals["option1"].f, fal.f)
    assert r.fals["option1"].Lr_max == fal.Lr_max
    assert r.paths["g5"].failure_index == 2
    assert [(p.Lr, p.Kr, p.load) for p in r.paths["g5"].points] == [(p.Lr, p.Kr, p.load) for p in pts]
    assert r.points[0].label == "g5"
    assert r.meta == {"note": "x"}


def test_summary_defaults_to_not_failed(tmp_path):
    path = tmp_path / "s.json"
    write_summary(path, {"max_load": np.float64(3.5), "bad": float("nan")})
    s = read_summary(path)
    assert s["failed"] is False
    assert s["max_load"] == 3.5
    assert s["bad"] is None


def test_field_csv(tmp_path):
    m = generate_rectangle_mesh(1.0, 1.0, 2, 2)
    c = Constraints(m.n_nodes).fix(m.node_sets["left"]).prescribe(m.node_sets["right"], 0, 1e-3)
    sim = Simulation(m, MaterialField.uniform(m, MaterialParams()), c, SolverConfig(phase_field=False))
    st, _ = sim.staggered_step(1.0)
    path = tmp_path / "f.csv"
    write_field_csv(path, m, st)
    lines = path.read_text().splitlines()
    assert len(lines) == 3 + m.n_nodes


def test_run_config_round_trip(tmp_path):
    cfg = RunConfig(geometry="sent", out="runs/a", material=MaterialParams(Gc=0.1 + 0.2),
                    hydrogen=HydrogenParams(f_min=0.5), solver={"stagger_tol": 1e-5},
                    sweep={"Gc": [5.0, 10.0]}, bc={"left": 0.17})
    path = tmp_path / "run.ini"
    write_run_config(path, cfg)
    r = load_run_config(path)
    assert r == cfg


def test_run_config_rejects_unknown(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("# FADFORGE-v1 config\n[run]\ngeometry = sent\n[extra]\na = 1\n")
    with pytest.raises(FormatError):
        load_run_config(path)
    path.write_text("# FADFORGE-v1 config\n[solver]\nnewton_tolerance = 1\n")
    with pytest.raises(FormatError):
        load_run_config(path)
    path.write_text("# FADFORGE-v1 config\n[material]\nGc = abc\n")
    with pytest.raises(FormatError):
        load_run_config(path)
    with pytest.raises(FormatError):
        RunConfig(geometry="custom")


def test_crack_face_relief_is_not_counted_as_imbalance():
    # the synthetic hoop field is balanced in the uncracked wall; a surface
    # crack where it is tensile must not push it over the rejection limit
    from fadforge.campaigns import X65_LIKE, pipe_model
    model = pipe_model(defect_preset("A", 2.0))
    pf = synthetic_weld_field(model.mesh, 762.0, 12.7, X65_LIKE)
    res = equilibrate_residual_stress(model.mesh, pf.residual_stress(model.mesh), 2e5, 0.3,
                                      model.constraints)
    assert res.correction < 0.10
