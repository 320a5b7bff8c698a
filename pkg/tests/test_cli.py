import json

import pytest

from fadforge.cli import main
from fadforge.io import RunConfig, read_fad_csv, write_run_config
from fadforge.material import MaterialParams


def test_fal_writes_option1(tmp_path):
    assert main(["fal", "--option", "1", "--E", "200000", "--sy0", "800", "--out", str(tmp_path)]) == 0
    t = read_fad_csv(tmp_path / "fal_option1.csv")
    fal = t.fals["option1"]
    assert fal.Lr_max == 1.0
    assert fal(0.0) == pytest.approx(1.0)


def test_fal_cutoff_from_ultimate_strength(tmp_path):
    assert main(["fal", "--option", "2", "--su", "981.8", "--out", str(tmp_path)]) == 0
    fal = read_fad_csv(tmp_path / "fal_option2.csv").fals["option2"]
    assert fal.Lr_max == pytest.approx((800 + 981.8) / 1600)


def test_fal_output_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["fal", "--option", "1", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "fal_option1.csv").read_bytes() == (tmp_path / "b" / "fal_option1.csv").read_bytes()


def test_onedim_peak(tmp_path):
    assert main(["onedim", "--Gc", "5", "--ell", "0.4", "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "onedim_summary.json").read_text())
    assert s["sigma_u"] == pytest.approx(513.0, rel=0.02)
    assert s["failed"] is False


def test_assess_single_point(tmp_path):
    assert main(["assess", "--K", "300", "--Kc", "600", "--P", "1", "--Py", "2", "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "assessment_summary.json").read_text())
    assert (s["Lr"], s["Kr"]) == (0.5, 0.5)
    assert s["safety_factor_option1"] > 1.0


def test_config_supplies_material_and_flags_override(tmp_path):
    cfg = tmp_path / "run.ini"
    write_run_config(cfg, RunConfig(out=str(tmp_path / "from_cfg"), material=MaterialParams(sigma_y0=500.0)))
    assert main(["fal", "--option", "1", "--config", str(cfg)]) == 0
    fal = read_fad_csv(tmp_path / "from_cfg" / "fal_option1.csv").fals["option1"]
    assert fal.provenance["sigma_y0"] == 500.0
    assert main(["fal", "--option", "1", "--config", str(cfg), "--sy0", "700", "--out", str(tmp_path)]) == 0
    fal = read_fad_csv(tmp_path / "fal_option1.csv").fals["option1"]
    assert fal.provenance["sigma_y0"] == 700.0


@pytest.mark.parametrize("argv", [
    ["fal", "--option", "3"],
    ["fal"],
    ["onedim", "--Gc", "-1"],
    ["assess", "--K", "1", "--P", "1", "--Py", "0"],
    ["nonsense"],
])
def test_invalid_input_exit_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "nonsense" else argv) == 2


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("# FADFORGE-v1 config\n[solver]\nnot_a_key = 1\n")
    assert main(["fal", "--option", "1", "--config", str(bad)]) == 2
