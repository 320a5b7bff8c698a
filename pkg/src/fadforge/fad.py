"""Failure assessment diagrams: Option 1/2/3 lines, cutoffs, assessment points,
safety factors and handbook solutions for SENT specimens and pipes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, curve_fit

from .material import DomainError


class FALOption(str, Enum):
    OPT1 = "Opt1"
    OPT2 = "Opt2"
    OPT3 = "Opt3"


# --------------------------------------------------------------------------
# line formulas
# --------------------------------------------------------------------------

def option1_mu(E: float, sigma_y0: float) -> float:
    return min(0.001 * E / sigma_y0, 0.6)


def fal_option1(Lr, E: float, sigma_y0: float):
    """Option 1 line: (1 + Lr^2/2)^-1/2 (0.3 + 0.7 exp(-mu Lr^6))."""
    Lr = np.asarray(Lr, dtype=float)
    if np.any(Lr < 0):
        raise DomainError("Lr must be non-negative")
    mu = option1_mu(E, sigma_y0)
    out = (1.0 + 0.5 * Lr**2) ** -0.5 * (0.3 + 0.7 * np.exp(-mu * Lr**6))
    return float(out) if out.ndim == 0 else out


def power_law_reference_strain(sigma_ref, E: float, sigma_y0: float, n: float):
    """Total strain at stress ``sigma_ref`` on the power-law hardening curve.

    Below yield the response is elastic; above it the flow rule
    sigma = sigma_y0 (1 + E eps_p / sigma_y0)^n is inverted for eps_p.
    """
    s = np.asarray(sigma_ref, dtype=float)
    plastic = np.where(s > sigma_y0, (sigma_y0 / E) * ((np.maximum(s, sigma_y0) / sigma_y0) ** (1.0 / n) - 1.0), 0.0)
    return s / E + plastic


def ramberg_osgood_strain(sigma, E: float, sigma_0: float, alpha: float, m: float):
    """eps = sigma/E + alpha (sigma_0/E) (sigma/sigma_0)^m."""
    s = np.asarray(sigma, dtype=float)
    return s / E + alpha * (sigma_0 / E) * (s / sigma_0) ** m


def fit_ramberg_osgood(strain, stress, E: float, sigma_0: float):
    """Least-squares (alpha, m) of a Ramberg-Osgood curve to measured data."""
    strain = np.asarray(strain, dtype=float)
    stress = np.asarray(stress, dtype=float)
    mask = stress > 0
    plastic = strain[mask] - stress[mask] / E
    ok = plastic > 0
    x = np.log(stress[mask][ok] / sigma_0)
    y = np.log(plastic[ok] * E / sigma_0)
    (m, log_alpha), *_ = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)
    return float(np.exp(log_alpha)), float(m)


def fal_option2(Lr, E: float, sigma_y0: float, ref_strain=None, n: float | None = None):
    """Option 2 line from a reference stress-strain curve.

    ``ref_strain(sigma)`` returns total strain; by default the power-law curve
    with exponent ``n`` is used, and with neither the elastic limit results.
    """
    Lr = np.asarray(Lr, dtype=float)
    if np.any(Lr < 0):
        raise DomainError("Lr must be non-negative")
    if ref_strain is None:
        ref_strain = (lambda s: np.asarray(s) / E) if n is None else (
            lambda s: power_law_reference_strain(s, E, sigma_y0, n))
    s_ref = np.maximum(Lr, 1e-12) * sigma_y0
    e_ref = np.asarray(ref_strain(s_ref), dtype=float)
    a = E * e_ref / s_ref
    out = (a + Lr**2 / (2.0 * a)) ** -0.5
    out = np.where(Lr == 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def fal_option3(J_ep, J_e):
    """Option 3 ordinate sqrt(J_e / J_ep)."""
    J_ep = np.asarray(J_ep, dtype=float)
    J_e = np.asarray(J_e, dtype=float)
    if np.any(J_e <= 0):
        raise DomainError("elastic J must be positive")
    if np.any(J_ep < J_e * (1 - 1e-12)):
        raise DomainError("elastic-plastic J below the elastic J")
    out = np.sqrt(J_e / J_ep)
    return float(out) if out.ndim == 0 else out


def cutoff_lr_max(sigma_y0: float, sigma_u: float) -> float:
    """Plastic collapse cutoff (sigma_y0 + sigma_u) / (2 sigma_y0)."""
    if sigma_u < sigma_y0:
        raise DomainError("ultimate strength below yield strength")
    return (sigma_y0 + sigma_u) / (2.0 * sigma_y0)


# --------------------------------------------------------------------------
# handbook solutions
# --------------------------------------------------------------------------

def sent_geometry_factor(a_over_W):
    """Geometry function of the SENT stress intensity factor."""
    x = np.asarray(a_over_W, dtype=float)
    if np.any((x <= 0) | (x > 0.95)):
        raise DomainError("a/W must lie in (0, 0.95]")
    t = np.pi * x / 2.0
    out = np.sqrt(2.0 * np.tan(t)) / np.cos(t) * (0.752 + 2.02 * x + 0.37 * (1.0 - np.sin(t)) ** 3)
    return float(out) if out.ndim == 0 else out


def sent_sif(P, B: float, W: float, a: float):
    """K = P / (B sqrt(W)) f(a/W)  [MPa sqrt(mm)]."""
    if B <= 0 or W <= 0:
        raise DomainError("B and W must be positive")
    return np.asarray(P, dtype=float) / (B * math.sqrt(W)) * sent_geometry_factor(a / W) + 0.0


def sent_yield_load(B: float, W: float, a: float, sigma_y0: float) -> float:
    """Py = 1.155 B W sigma_y0 (1 - a/W)."""
    if not 0 <= a < W:
        raise DomainError("crack length must lie in [0, W)")
    return 1.155 * B * W * sigma_y0 * (1.0 - a / W)


def toughness_from_Gc(Gc, E: float, nu: float):
    """Plane-strain toughness sqrt(E' Gc)."""
    Gc = np.asarray(Gc, dtype=float)
    if np.any(Gc <= 0):
        raise DomainError("Gc must be positive")
    out = np.sqrt(E / (1.0 - nu**2) * Gc)
    return float(out) if out.ndim == 0 else out


def thin_wall_pressure(sigma_hoop, t: float, r: float):
    """Pressure carried by hoop stress in a thin cylinder: sigma t / r."""
    if t >= r / 5.0:
        warnings.warn(f"thin-wall relation used with t/r = {t / r:.3f}", stacklevel=2)
    return np.asarray(sigma_hoop, dtype=float) * t / r + 0.0


# --------------------------------------------------------------------------
# lines, points, safety factors
# --------------------------------------------------------------------------

@dataclass
class FailureAssessmentLine:
    """Sampled FAL with a vertical cutoff at ``Lr_max``."""

    option: FALOption
    Lr: np.ndarray
    f: np.ndarray
    Lr_max: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Lr = np.asarray(self.Lr, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.Lr.ndim != 1 or self.Lr.shape != self.f.shape or self.Lr.size < 2:
            raise DomainError("FAL samples must be matching 1D arrays")
        if np.any(np.diff(self.Lr) <= 0):
            raise DomainError("FAL samples must be strictly increasing in Lr")
        if np.any(self.f <= 0) or np.any(self.f > 1 + 1e-12):
            raise DomainError("FAL ordinates must lie in (0, 1]")
        self._interp = PchipInterpolator(self.Lr, self.f, extrapolate=False)

    @classmethod
    def from_function(cls, option, func, Lr_max: float, samples: int = 512, provenance=None):
        Lr = np.linspace(0.0, Lr_max, samples)
        return cls(FALOption(option), Lr, np.asarray(func(Lr), dtype=float), Lr_max, provenance or {})

    @classmethod
    def option1(cls, E, sigma_y0, Lr_max, samples=512):
        return cls.from_function(FALOption.OPT1, lambda L: fal_option1(L, E, sigma_y0), Lr_max, samples,
                                 {"E": E, "sigma_y0": sigma_y0})

    @classmethod
    def option2(cls, E, sigma_y0, n, Lr_max, samples=512, ref_strain=None):
        prov = {"E": E, "sigma_y0": sigma_y0, "n": n}
        return cls.from_function(FALOption.OPT2, lambda L: fal_option2(L, E, sigma_y0, ref_strain, n),
                                 Lr_max, samples, prov)

    def __call__(self, Lr):
        Lr = np.asarray(Lr, dtype=float)
        out = self._interp(np.clip(Lr, 0.0, self.Lr_max))
        out = np.where(Lr > self.Lr_max * (1 + 1e-12), 0.0, out)
        return float(out) if out.ndim == 0 else out

    def ray_intersection(self, direction) -> np.ndarray:
        """Point B where the ray from the origin along ``direction`` leaves the safe region."""
        dx, dy = (float(v) for v in direction)
        if dx < 0 or dy < 0 or (dx == 0 and dy == 0):
            raise DomainError("assessment point must lie in the first quadrant and off the origin")
        norm = math.hypot(dx, dy)
        c, s = dx / norm, dy / norm
        # along the ray r -> (r c, r s) the height above the line increases with r
        h = lambda r: r * s - float(self._interp(min(r * c, self.Lr_max)))
        r_cut = self.Lr_max / c if c > 0 else math.inf
        if r_cut < math.inf and h(r_cut) < 0:
            return np.array([self.Lr_max, s * r_cut])
        r_hi = min(r_cut, 1.0 / s)
        r = brentq(h, 0.0, r_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        return np.array([r * c, r * s])

    def radial_deviation(self, Lr: float, Kr: float) -> float:
        """|OA|/|OB| - 1: positive outside the line, negative inside."""
        B = self.ray_intersection((Lr, Kr))
        return math.hypot(Lr, Kr) / math.hypot(*B) - 1.0


@dataclass
class AssessmentPoint:
    Lr: float
    Kr: float
    label: str = ""
    load: float = 0.0

    def __post_init__(self):
        if self.Lr < 0 or self.Kr < 0:
            raise DomainError("assessment coordinates must be non-negative")


@dataclass
class LoadingPath:
    points: list[AssessmentPoint]
    failure_index: int | None = None

    def __post_init__(self):
        loads = [p.load for p in self.points]
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise DomainError("loading path loads must be strictly increasing")

    def is_ray(self, tol: float = 1e-9) -> bool:
        pts = np.array([[p.Lr, p.Kr] for p in self.points if p.Lr > 0 or p.Kr > 0])
        if len(pts) < 3:
            return True
        d = pts[-1] / np.linalg.norm(pts[-1])
        cross = pts[:, 0] * d[1] - pts[:, 1] * d[0]
        return bool(np.all(np.abs(cross) <= tol * np.linalg.norm(pts, axis=1).max()))


def assessment_point(K, Kc_eff, P, Py, label: str = "", load=None) -> AssessmentPoint:
    """(Lr, Kr) = (P / Py, K / Kc_eff)."""
    if not Kc_eff > 0 or not Py > 0:
        raise DomainError("toughness and yield load must be positive")
    return AssessmentPoint(float(P) / Py, float(K) / Kc_eff, label, float(P if load is None else load))


def safety_factor(point: AssessmentPoint, fal: FailureAssessmentLine) -> float:
    """SF = |OB| / |OA| along the ray through the assessment point."""
    if point.Lr == 0 and point.Kr == 0:
        raise DomainError("safety factor undefined at the origin")
    B = fal.ray_intersection((point.Lr, point.Kr))
    return math.hypot(*B) / math.hypot(point.Lr, point.Kr)


def required_safety_factor(points, fal: FailureAssessmentLine) -> float:
    """Smallest factor s such that every failure point, scaled by s, lies outside the FAL.

    Equals max over points of SF(point); 1 or less means the FAL is already
    conservative for all of them.
    """
    return max(safety_factor(p, fal) for p in points)
