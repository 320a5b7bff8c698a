"""Constitutive laws: degraded Amor-split elasticity, J2 power-law plasticity,
phase-field driving energies, hydrogen toughness degradation and the 1D
homogeneous solution.

Tensors are stored in Mandel form ``[xx, yy, zz, sqrt(2)*xy]`` so that double
contraction is a plain dot product. Units are N, mm, MPa, s throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SQ2 = math.sqrt(2.0)
I2 = np.array([1.0, 1.0, 1.0, 0.0])
P_DEV = np.eye(4) - np.outer(I2, I2) / 3.0


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a law."""


class ReturnMappingError(RuntimeError):
    """Raised when the local plastic corrector fails to converge."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


@dataclass(frozen=True)
class MaterialParams:
    """Elastic, plastic and fracture constants of one material point.

    ``n = 0`` is accepted and gives perfect plasticity (used by limit-load
    analyses).
    """

    E: float = 200000.0
    nu: float = 0.3
    sigma_y0: float = 800.0
    n: float = 0.1
    Gc: float = 5.0
    ell: float = 0.4
    beta: float = 0.1

    def __post_init__(self):
        if not self.E > 0:
            raise DomainError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise DomainError(f"nu must lie in [0, 0.5), got {self.nu}")
        if not self.sigma_y0 > 0:
            raise DomainError(f"sigma_y0 must be positive, got {self.sigma_y0}")
        if not 0.0 <= self.n < 1.0:
            raise DomainError(f"n must lie in [0, 1), got {self.n}")
        if not self.Gc > 0:
            raise DomainError(f"Gc must be positive, got {self.Gc}")
        if not self.ell > 0:
            raise DomainError(f"ell must be positive, got {self.ell}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def bulk(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def shear(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def E_prime(self) -> float:
        """Plane-strain modulus E/(1-nu^2)."""
        return self.E / (1.0 - self.nu**2)

    def with_(self, **changes) -> "MaterialParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class HydrogenParams:
    """Transport and toughness-degradation constants for hydrogen.

    Vh, T and R default to values for hydrogen in ferritic steel at room
    temperature.
    """

    D: float = 4.5e-4
    Vh: float = 2000.0
    S: float = 0.077
    f_min: float = 0.65
    q1: float = 30.0
    q2: float = 1.0
    T: float = 293.0
    R: float = 8314.0

    def __post_init__(self):
        checks = {
            "D": self.D > 0,
            "Vh": self.Vh > 0,
            "S": self.S > 0,
            "f_min": 0.0 < self.f_min <= 1.0,
            "q1": self.q1 >= 0,
            "q2": self.q2 > 0,
            "T": self.T > 0,
            "R": self.R > 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise DomainError(f"invalid hydrogen parameters: {', '.join(bad)}")

    @property
    def drift_coefficient(self) -> float:
        """Vh/(R T) in 1/MPa."""
        return self.Vh / (self.R * self.T)

    def with_(self, **changes) -> "HydrogenParams":
        return replace(self, **changes)


@dataclass
class PointState:
    """State of a single material point (Mandel tensors)."""

    eps: np.ndarray = field(default_factory=lambda: np.zeros(4))
    eps_p: np.ndarray = field(default_factory=lambda: np.zeros(4))
    eps_p_eq: float = 0.0
    phi: float = 0.0
    H: float = 0.0
    psi_p: float = 0.0
    C: float = 0.0
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(4))


# --------------------------------------------------------------------------
# tensor helpers
# --------------------------------------------------------------------------

def to_mandel(t: np.ndarray) -> np.ndarray:
    """3x3 symmetric tensor(s) -> Mandel 4-vectors (plane problems, xz=yz=0)."""
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., 0, 0], t[..., 1, 1], t[..., 2, 2], SQ2 * t[..., 0, 1]], axis=-1)


def from_mandel(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    out = np.zeros(m.shape[:-1] + (3, 3))
    out[..., 0, 0] = m[..., 0]
    out[..., 1, 1] = m[..., 1]
    out[..., 2, 2] = m[..., 2]
    out[..., 0, 1] = out[..., 1, 0] = m[..., 3] / SQ2
    return out


def von_mises(sigma: np.ndarray) -> np.ndarray:
    s = sigma - (sigma[..., :3].sum(-1) / 3.0)[..., None] * I2
    return np.sqrt(1.5 * np.einsum("...i,...i->...", s, s))


def hydrostatic(sigma: np.ndarray) -> np.ndarray:
    return sigma[..., :3].sum(-1) / 3.0


# --------------------------------------------------------------------------
# degradation functions and energies
# --------------------------------------------------------------------------

def _check_phi(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0.0) or np.any(phi > 1.0) or np.any(np.isnan(phi)):
        raise DomainError("phase field must lie in [0, 1]")
    return phi


def degradation_g(phi):
    """Elastic degradation (1 - phi)^2."""
    phi = _check_phi(phi)
    out = (1.0 - phi) ** 2
    return float(out) if out.ndim == 0 else out


def degradation_g_derivative(phi):
    """dg/dphi = -2 (1 - phi)."""
    phi = _check_phi(phi)
    out = -2.0 * (1.0 - phi)
    return float(out) if out.ndim == 0 else out


def degradation_gp(phi, beta):
    """Plastic degradation beta*g - beta + 1; equals 1 for intact material."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0.0) or np.any(beta > 1.0):
        raise DomainError("beta must lie in [0, 1]")
    out = beta * degradation_g(phi) - beta + 1.0
    return float(out) if np.ndim(out) == 0 else out


def flow_stress(eps_p_eq, sigma_y0, E, n):
    """Power-law flow stress sigma_y0 (1 + E eps_p_eq / sigma_y0)^n."""
    return sigma_y0 * (1.0 + E * np.asarray(eps_p_eq) / sigma_y0) ** n


def plastic_energy(eps_p_eq, params: MaterialParams):
    """Plastic work density obtained by integrating the flow stress."""
    eps_p_eq = np.asarray(eps_p_eq, dtype=float)
    if np.any(eps_p_eq < 0):
        raise DomainError("equivalent plastic strain must be non-negative")
    out = _plastic_energy(eps_p_eq, params.E, params.sigma_y0, params.n)
    return float(out) if out.ndim == 0 else out


def _plastic_energy(p, E, sy0, n):
    c = sy0**2 / (E * (n + 1.0))
    # expm1/log1p keeps the small-strain limit accurate
    return c * np.expm1((n + 1.0) * np.log1p(E * p / sy0))


def elastic_driving_energy(eps_e, params: MaterialParams):
    """Tensile elastic energy (kappa/2)<tr eps_e>_+^2 + G eps_dev:eps_dev.

    ``eps_e`` may be a Mandel vector (..., 4) or a 3x3 tensor (..., 3, 3).
    """
    eps_e = np.asarray(eps_e, dtype=float)
    if eps_e.shape[-2:] == (3, 3):
        eps_e = to_mandel(eps_e)
    out = _psi_plus(eps_e, params.bulk, params.shear)
    return float(out) if out.ndim == 0 else out


def _psi_plus(eps_e, bulk, shear):
    vol = eps_e[..., :3].sum(-1)
    dev = eps_e - (vol / 3.0)[..., None] * I2
    return 0.5 * bulk * np.maximum(vol, 0.0) ** 2 + shear * np.einsum("...i,...i->...", dev, dev)


def hydrogen_toughness_factor(C, params: HydrogenParams):
    """f(C) = f_min + (1 - f_min) exp(-q1 C^q2); multiplies Gc."""
    C = np.asarray(C, dtype=float)
    if np.any(C < 0):
        raise DomainError("concentration must be non-negative")
    out = params.f_min + (1.0 - params.f_min) * np.exp(-params.q1 * C**params.q2)
    return float(out) if out.ndim == 0 else out


def sievert_concentration(p, S):
    """Boundary concentration S sqrt(p) [wppm] for gas pressure p [MPa]."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("pressure must be non-negative")
    out = S * np.sqrt(p)
    return float(out) if out.ndim == 0 else out


def critical_stress_1d(params: MaterialParams) -> float:
    """Peak stress of the elastic homogeneous 1D solution."""
    return math.sqrt(27.0 * params.E * params.Gc / (256.0 * params.ell))


def length_scale_for_ductility(r_y: float, params: MaterialParams) -> float:
    """Length scale giving critical_stress_1d / sigma_y0 == r_y."""
    if not r_y > 0:
        raise DomainError("ductility ratio must be positive")
    return 27.0 * params.E * params.Gc / (256.0 * (r_y * params.sigma_y0) ** 2)


# --------------------------------------------------------------------------
# return mapping
# --------------------------------------------------------------------------

@dataclass
class ReturnMapResult:
    sigma: np.ndarray       # (..., 4)
    eps_p: np.ndarray       # (..., 4)
    eps_p_eq: np.ndarray    # (...)
    tangent: np.ndarray     # (..., 4, 4)
    dp: np.ndarray          # (...) plastic multiplier increment
    yield_residual: np.ndarray
    iterations: int


def return_mapping(eps, eps_p_old, p_old, phi, E, nu, sigma_y0, n, beta,
                   residual_stiffness=0.0, tol=1e-12, max_iter=60) -> ReturnMapResult:
    """Vectorised elastic predictor / radial return on the degraded yield surface.

    All material arguments broadcast against the leading shape of ``eps``.
    The returned tangent is the algorithmic (consistent) one for frozen phi.
    """
    eps = np.asarray(eps, dtype=float)
    shape = eps.shape[:-1]
    bc = lambda a: np.broadcast_to(np.asarray(a, dtype=float), shape)
    E, nu, sy0, n, beta, phi = map(bc, (E, nu, sigma_y0, n, beta, phi))
    p_old = bc(p_old)

    G = E / (2.0 * (1.0 + nu))
    K = E / (3.0 * (1.0 - 2.0 * nu))
    g = (1.0 - phi) ** 2 + residual_stiffness
    gp = beta * (1.0 - phi) ** 2 - beta + 1.0
    Gg = g * G

    ee = eps - eps_p_old
    vol = ee[..., :3].sum(-1)
    dev = ee - (vol / 3.0)[..., None] * I2
    s_tr = 2.0 * Gg[..., None] * dev
    s_norm = np.sqrt(np.einsum("...i,...i->...", s_tr, s_tr))
    q_tr = math.sqrt(1.5) * s_norm

    def sy(p):
        return gp * sy0 * (1.0 + E * p / sy0) ** n

    def hard(p):
        return gp * n * E * (1.0 + E * p / sy0) ** (n - 1.0)

    f_tr = q_tr - sy(p_old)
    plastic = f_tr > tol * sy0
    dp = np.zeros(shape)
    iters = 0
    if np.any(plastic):
        qt = q_tr[plastic]
        po = p_old[plastic]
        gg3 = 3.0 * Gg[plastic]
        sy_, hard_ = (lambda p, m=plastic: gp[m] * sy0[m] * (1.0 + E[m] * p / sy0[m]) ** n[m],
                      lambda p, m=plastic: gp[m] * n[m] * E[m] * (1.0 + E[m] * p / sy0[m]) ** (n[m] - 1.0))
        x = np.zeros_like(qt)
        scale = sy0[plastic]
        for iters in range(1, max_iter + 1):
            r = qt - gg3 * x - sy_(po + x)
            dr = -gg3 - hard_(po + x)
            if np.any(dr >= 0):
                raise ReturnMappingError("non-negative local Jacobian", iters)
            step = -r / dr
            x = x + step
            if np.all(np.abs(r) <= tol * scale) or np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(x))):
                break
        else:
            raise ReturnMappingError("return mapping did not converge", iters)
        dp[plastic] = np.maximum(x, 0.0)

    p_new = p_old + dp
    with np.errstate(invalid="ignore", divide="ignore"):
        nhat = np.where(s_norm[..., None] > 0, s_tr / s_norm[..., None], 0.0)
        ratio = np.where(q_tr > 0, dp / q_tr, 0.0)
    s = s_tr * (1.0 - 3.0 * Gg * ratio)[..., None]
    eps_p = eps_p_old + (1.5 * dp * np.where(q_tr > 0, 1.0 / np.maximum(q_tr, 1e-300), 0.0))[..., None] * s_tr
    kvol = np.where(vol > 0.0, g, 1.0) * K
    sigma = s + (kvol * vol)[..., None] * I2

    D = (kvol[..., None, None] * np.outer(I2, I2)
         + (2.0 * Gg * (1.0 - 3.0 * Gg * ratio))[..., None, None] * P_DEV)
    if np.any(plastic):
        Hh = hard(p_new)
        coef = np.where(plastic, 6.0 * Gg**2 * (ratio - 1.0 / (3.0 * Gg + Hh)), 0.0)
        D = D + coef[..., None, None] * np.einsum("...i,...j->...ij", nhat, nhat)
    q_new = math.sqrt(1.5) * np.sqrt(np.einsum("...i,...i->...", s, s))
    return ReturnMapResult(sigma, eps_p, p_new, D, dp, q_new - sy(p_new), iters)


def stress_update(eps_trial, state_old: PointState, params: MaterialParams,
                  residual_stiffness: float = 0.0):
    """Single-point plane-strain stress update.

    ``eps_trial`` is the total strain (Mandel 4-vector or 3x3 tensor). Returns
    ``(sigma, new_state)``; the phase field of ``state_old`` is held fixed.
    """
    eps_trial = np.asarray(eps_trial, dtype=float)
    if eps_trial.shape == (3, 3):
        eps_trial = to_mandel(eps_trial)
    _check_phi(state_old.phi)
    res = return_mapping(eps_trial, state_old.eps_p, state_old.eps_p_eq, state_old.phi,
                         params.E, params.nu, params.sigma_y0, params.n, params.beta,
                         residual_stiffness=residual_stiffness)
    ee = eps_trial - res.eps_p
    psi = float(_psi_plus(ee, params.bulk, params.shear))
    p_eq = float(res.eps_p_eq)
    new = PointState(eps=eps_trial.copy(), eps_p=res.eps_p, eps_p_eq=p_eq,
                     phi=state_old.phi, H=max(state_old.H, psi),
                     psi_p=float(_plastic_energy(p_eq, params.E, params.sigma_y0, params.n)),
                     C=state_old.C, sigma=res.sigma)
    return res.sigma, new


def lateral_release(eps, eps_p_old, p_old, phi, E, nu, sy0, n, beta, free,
                    residual_stiffness=0.0, tol=1e-10, max_iter=50, guess=None):
    """Solve for the strain components listed in ``free`` so their stresses vanish.

    Used for plane-stress (``free=[2]``) and uniaxial-stress (``free=[0, 2]``)
    states. Returns the completed strain and the return-mapping result with
    the tangent statically condensed onto the remaining components.
    """
    eps = np.array(eps, dtype=float)
    free = list(free)
    if guess is not None:
        eps[..., free] = guess
    scale = float(np.max(sy0))
    for it in range(max_iter):
        res = return_mapping(eps, eps_p_old, p_old, phi, E, nu, sy0, n, beta,
                             residual_stiffness=residual_stiffness)
        r = res.sigma[..., free]
        if np.all(np.abs(r) <= tol * scale):
            break
        Dff = res.tangent[..., free, :][..., :, free]
        eps[..., free] -= np.linalg.solve(Dff, r[..., None])[..., 0]
    else:
        raise ReturnMappingError("stress release iteration did not converge", max_iter)
    keep = [i for i in range(4) if i not in free]
    D = res.tangent
    Dkk = D[..., keep, :][..., :, keep]
    Dkf = D[..., keep, :][..., :, free]
    Dfk = D[..., free, :][..., :, keep]
    Dff = D[..., free, :][..., :, free]
    cond = Dkk - Dkf @ np.linalg.solve(Dff, Dfk)
    return eps, res, cond


# --------------------------------------------------------------------------
# homogeneous 1D solution
# --------------------------------------------------------------------------

@dataclass
class Homogeneous1DResult:
    strain: np.ndarray
    stress: np.ndarray
    phi: np.ndarray
    eps_p_eq: np.ndarray
    sigma_u: float
    strain_at_peak: float
    eps_p_eq_at_peak: float
    failure_strain: float   # strain at which stress has dropped to half its peak
    mode: str


def _phi_local(psi_drive, Gc, ell):
    return 2.0 * psi_drive / (Gc / ell + 2.0 * psi_drive)


def homogeneous_1d_response(params: MaterialParams, strain_grid=None, mode: str = "uniaxial_stress",
                            Gc_eff: float | None = None, tol: float = 1e-10,
                            max_fixed_point: int = 500, damping: float = 1.0,
                            max_strain: float = 50.0, rel_step: float = 0.01) -> Homogeneous1DResult:
    """Strain-controlled homogeneous response with damage and plasticity.

    At every strain level the stress update and the local phase-field balance
    ``Gc/ell * phi = 2 (1 - phi) (H + beta psi_p)`` are alternated to a fixed
    point. ``mode`` is ``"uniaxial_stress"`` (lateral stresses free) or
    ``"plane_strain"`` (eps_zz = 0, sigma_xx = 0). Loading is along y.

    Without ``strain_grid`` the strain is marched adaptively until the stress
    has fallen below 2% of its peak.
    """
    if mode not in ("uniaxial_stress", "plane_strain"):
        raise ValueError(f"unknown mode {mode!r}")
    free = [0, 2] if mode == "uniaxial_stress" else [0]
    Gc = params.Gc if Gc_eff is None else Gc_eff
    pars = (params.E, params.nu, params.sigma_y0, params.n, params.beta)

    if strain_grid is not None:
        grid = np.asarray(strain_grid, dtype=float)
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise ValueError("strain grid must start at 0 and increase monotonically")
    ey_y = params.sigma_y0 / params.E
    base_step = min(ey_y, critical_stress_1d(params.with_(Gc=Gc)) / params.E) / 40.0

    eps = np.zeros(4)
    eps_p = np.zeros(4)
    p = 0.0
    H = 0.0
    phi = 0.0
    strains, stresses, phis, peqs = [0.0], [0.0], [0.0], [0.0]
    i = 0
    ey = 0.0
    peak = 0.0
    while True:
        i += 1
        if strain_grid is not None:
            if i >= len(grid):
                break
            ey = grid[i]
        else:
            ey = ey + max(base_step, rel_step * ey) if ey > 4 * ey_y else ey + base_step
            if ey > max_strain:
                break
        eps_try = eps.copy()
        eps_try[1] = ey
        phi_k = phi
        for _ in range(max_fixed_point):
            eps_full, res, _ = lateral_release(eps_try, eps_p, p, phi_k, *pars, free=free,
                                               guess=eps_try[free])
            eps_try = eps_full
            psi = float(_psi_plus(eps_full - res.eps_p, params.bulk, params.shear))
            drive = max(H, psi) + params.beta * float(
                _plastic_energy(float(res.eps_p_eq), params.E, params.sigma_y0, params.n))
            phi_new = max(phi, _phi_local(drive, Gc, params.ell))
            dphi = phi_new - phi_k
            phi_k = phi_k + damping * dphi
            if abs(dphi) < tol:
                break
        else:
            raise ReturnMappingError("1D fixed point did not converge", max_fixed_point)
        eps_full, res, _ = lateral_release(eps_try, eps_p, p, phi_k, *pars, free=free,
                                           guess=eps_try[free])
        eps = eps_full
        eps_p = res.eps_p
        p = float(res.eps_p_eq)
        H = max(H, float(_psi_plus(eps - eps_p, params.bulk, params.shear)))
        phi = phi_k
        sy = float(res.sigma[1])
        strains.append(ey)
        stresses.append(sy)
        phis.append(phi)
        peqs.append(p)
        peak = max(peak, sy)
        if strain_grid is None and peak > 0 and sy < 0.02 * peak:
            break

    strain = np.array(strains)
    stress = np.array(stresses)
    k = int(np.argmax(stress))
    after = np.nonzero(stress[k:] <= 0.5 * stress[k])[0]
    fail = float(strain[k + after[0]]) if after.size else float("nan")
    return Homogeneous1DResult(strain, stress, np.array(phis), np.array(peqs),
                               float(stress[k]), float(strain[k]), float(peqs[k]), fail, mode)
