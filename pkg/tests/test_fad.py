import math

import numpy as np
import pytest

from fadforge.fad import (AssessmentPoint, FailureAssessmentLine, FALOption, LoadingPath,
                          assessment_point, cutoff_lr_max, fal_option1, fal_option2, fal_option3,
                          fit_ramberg_osgood, option1_mu, power_law_reference_strain,
                          ramberg_osgood_strain, required_safety_factor, safety_factor,
                          sent_geometry_factor, sent_sif, sent_yield_load, thin_wall_pressure,
                          toughness_from_Gc)
from fadforge.material import DomainError

E, SY, N = 200000.0, 800.0, 0.1


def test_option1_mu_rule():
    assert option1_mu(E, SY) == pytest.approx(0.25)
    assert option1_mu(E, 200.0) == 0.6


def test_option1_values():
    assert fal_option1(0.0, E, SY) == 1.0
    Lr = 0.7
    ref = (1 + 0.5 * Lr**2) ** -0.5 * (0.3 + 0.7 * math.exp(-0.25 * Lr**6))
    assert fal_option1(Lr, E, SY) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(DomainError):
        fal_option1(-0.1, E, SY)


def test_option2_against_direct_formula():
    Lr = 1.1
    s = Lr * SY
    eps = s / E + SY / E * ((s / SY) ** (1 / N) - 1)
    ref = (E * eps / (Lr * SY) + Lr**3 * SY / (2 * E * eps)) ** -0.5
    assert fal_option2(Lr, E, SY, n=N) == pytest.approx(ref, rel=1e-12)
    # below yield only the elastic part of the reference strain remains
    Lr = 0.5
    assert fal_option2(Lr, E, SY, n=N) == pytest.approx((1 + Lr**2 / 2) ** -0.5, rel=1e-12)


def test_option1_conservative_against_option2():
    Lr = np.linspace(0.0, 1.2, 200)
    assert np.all(fal_option1(Lr, E, SY) <= fal_option2(Lr, E, SY, n=N) + 1e-12)


def test_option1_conservative_with_cutoff():
    # the raw formulas cross just above Lr = 1.12; the cutoff lines do not
    Lr_max = cutoff_lr_max(SY, 981.8)
    assert Lr_max < 1.12
    f1 = FailureAssessmentLine.option1(E, SY, Lr_max)
    f2 = FailureAssessmentLine.option2(E, SY, N, Lr_max)
    Lr = np.linspace(0.0, 1.2, 200)
    assert np.all(f1(Lr) <= f2(Lr) + 1e-9)


def test_option3():
    assert fal_option3(4.0, 1.0) == 0.5
    with pytest.raises(DomainError):
        fal_option3(0.5, 1.0)


def test_cutoff():
    assert cutoff_lr_max(800.0, 982.0) == pytest.approx(1.11375)
    with pytest.raises(DomainError):
        cutoff_lr_max(800.0, 700.0)


def test_ramberg_osgood_fit_recovers_parameters():
    s = np.linspace(100, 1000, 30)
    e = ramberg_osgood_strain(s, E, SY, 0.8, 9.0)
    a, m = fit_ramberg_osgood(e, s, E, SY)
    assert a == pytest.approx(0.8, rel=1e-9)
    assert m == pytest.approx(9.0, rel=1e-9)


def test_reference_strain_elastic_below_yield():
    assert power_law_reference_strain(400.0, E, SY, N) == pytest.approx(400.0 / E)


def test_sent_handbook():
    x = 0.3
    t = math.pi * x / 2
    f = math.sqrt(2 * math.tan(t)) / math.cos(t) * (0.752 + 2.02 * x + 0.37 * (1 - math.sin(t)) ** 3)
    assert sent_geometry_factor(x) == pytest.approx(f, rel=1e-14)
    assert sent_sif(1000.0, 1.0, 5.0, 1.5) == pytest.approx(1000.0 / math.sqrt(5.0) * f, rel=1e-14)
    assert sent_yield_load(1.0, 5.0, 1.5, 800.0) == pytest.approx(1.155 * 5 * 800 * 0.7)
    with pytest.raises(DomainError):
        sent_geometry_factor(0.97)
    with pytest.raises(DomainError):
        sent_yield_load(1.0, 5.0, 5.0, 800.0)


def test_toughness_and_pressure():
    assert toughness_from_Gc(5.0, E, 0.3) == pytest.approx(math.sqrt(E / 0.91 * 5.0))
    assert thin_wall_pressure(300.0, 12.7, 368.3) == pytest.approx(300 * 12.7 / 368.3)
    with pytest.warns(UserWarning):
        thin_wall_pressure(300.0, 10.0, 40.0)


@pytest.fixture(scope="module")
def opt1():
    return FailureAssessmentLine.option1(E, SY, 1.114)


def test_fal_interpolation_and_cutoff(opt1):
    assert opt1(0.5) == pytest.approx(fal_option1(0.5, E, SY), rel=1e-6)
    assert opt1(1.2) == 0.0
    assert opt1.option is FALOption.OPT1


def test_fal_validation():
    with pytest.raises(DomainError):
        FailureAssessmentLine(FALOption.OPT1, [0.0, 0.5, 0.4], [1.0, 0.9, 0.8], 0.5)
    with pytest.raises(DomainError):
        FailureAssessmentLine(FALOption.OPT1, [0.0, 0.5], [1.0, 1.5], 0.5)


def test_ray_intersection_hits_cutoff(opt1):
    B = opt1.ray_intersection((1.0, 0.1))
    assert B[0] == pytest.approx(1.114)
    B = opt1.ray_intersection((0.0, 1.0))
    np.testing.assert_allclose(B, [0.0, 1.0])


def test_safety_factor_on_line_is_one(opt1):
    Lr = 0.6
    p = AssessmentPoint(Lr, fal_option1(Lr, E, SY))
    assert safety_factor(p, opt1) == pytest.approx(1.0, abs=1e-6)
    q = AssessmentPoint(0.3, 0.4)
    assert safety_factor(q, opt1) > 1.0
    assert required_safety_factor([p, q], opt1) == pytest.approx(safety_factor(q, opt1))


def test_assessment_point():
    p = assessment_point(50.0, 100.0, 300.0, 600.0, "x")
    assert (p.Lr, p.Kr, p.load) == (0.5, 0.5, 300.0)
    with pytest.raises(DomainError):
        assessment_point(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        AssessmentPoint(-0.1, 0.2)


def test_loading_path_ray():
    pts = [AssessmentPoint(0.1 * k, 0.2 * k, load=k) for k in range(1, 5)]
    assert LoadingPath(pts).is_ray()
    pts[2] = AssessmentPoint(0.3, 0.7, load=3)
    assert not LoadingPath(pts).is_ray()
    with pytest.raises(DomainError):
        LoadingPath([AssessmentPoint(0.1, 0.1, load=2), AssessmentPoint(0.2, 0.2, load=1)])
