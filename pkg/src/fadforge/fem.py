"""Plane-strain phase-field fracture solver with J2 plasticity and optional
hydrogen coupling.

One :class:`Simulation` owns a mesh, a material field, constraints and its
state. Loading is displacement driven through a load factor ``lam`` that
scales the prescribed displacements (and optional surface tractions).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import Constraints, QuadSpace
from .hydrogen import DiffusionBC, stationary_concentration, toughness_field
from .material import (DomainError, HydrogenParams, MaterialParams, ReturnMappingError,
                       _plastic_energy, _psi_plus, flow_stress, lateral_release, return_mapping)
from .mesh import Mesh

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """A nonlinear solve failed; the caller may retry with a smaller step."""


class SimulationAbort(RuntimeError):
    """Load stepping could not proceed even at the minimum increment."""


@dataclass
class SolverConfig:
    newton_tol: float = 1e-6
    max_newton: int = 25
    stagger_tol: float = 1e-3
    max_stagger: int = 300
    residual_stiffness: float = 1e-6
    phi_crack: float = 0.95
    advance_lengths: float = 2.0     # failure when the crack front moved this many ell
    advance_length: float | None = None  # absolute override [mm]
    drop_fraction: float = 0.01
    growth_factor: float = 1.5
    growth_after: int = 3
    min_increment: float = 1e-4      # fraction of the target load factor
    refine_failure: int = 2          # step refinements used to bracket failure
    kinematics: str = "plane_strain"
    phase_field: bool = True
    phi_bound_tol: float = 1e-8

    def __post_init__(self):
        if self.newton_tol <= 0 or self.stagger_tol <= 0:
            raise DomainError("solver tolerances must be positive")
        if self.kinematics not in ("plane_strain", "plane_stress"):
            raise DomainError(f"unknown kinematics {self.kinematics!r}")


@dataclass
class MaterialField:
    """Per-element material constants (arrays of length n_elements)."""

    E: np.ndarray
    nu: np.ndarray
    sigma_y0: np.ndarray
    n: np.ndarray
    Gc: np.ndarray
    ell: np.ndarray
    beta: np.ndarray
    x_b: np.ndarray | None = None
    eigenstrain: np.ndarray | None = None   # (ne, 4) Mandel, carried as initial inelastic strain
    eps_p_eq0: np.ndarray | None = None

    @classmethod
    def uniform(cls, mesh: Mesh, params: MaterialParams) -> "MaterialField":
        ne = mesh.n_elements
        full = lambda v: np.full(ne, float(v))
        return cls(full(params.E), full(params.nu), full(params.sigma_y0), full(params.n),
                   full(params.Gc), full(params.ell), full(params.beta))

    def qp(self, name: str) -> np.ndarray:
        return np.repeat(getattr(self, name)[:, None], 4, axis=1)

    def copy_with(self, **changes) -> "MaterialField":
        return replace(self, **changes)

    @property
    def bulk(self):
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def shear(self):
        return self.E / (2.0 * (1.0 + self.nu))


@dataclass
class HydrogenCoupling:
    """Stationary hydrogen field recomputed at every stagger iteration."""

    params: HydrogenParams
    bc: DiffusionBC
    f_min: np.ndarray | float | None = None
    q1: np.ndarray | float | None = None
    q2: np.ndarray | float | None = None

    def law(self, ne: int):
        pick = lambda v, d: np.broadcast_to(np.asarray(d if v is None else v, dtype=float), (ne,))[:, None]
        return (pick(self.f_min, self.params.f_min), pick(self.q1, self.params.q1),
                pick(self.q2, self.params.q2))


@dataclass
class SimulationState:
    u: np.ndarray
    q: np.ndarray
    phi: np.ndarray
    C: np.ndarray
    eps: np.ndarray
    eps_p: np.ndarray
    p: np.ndarray
    H: np.ndarray
    psi_p: np.ndarray
    sigma: np.ndarray
    wp: np.ndarray          # plastic work density actually dissipated
    f_int: np.ndarray
    lam: float = 0.0
    load: float = 0.0
    step: int = 0

    def copy(self) -> "SimulationState":
        return SimulationState(**{k: (v.copy() if isinstance(v, np.ndarray) else v)
                                  for k, v in self.__dict__.items()})


@dataclass
class StepRecord:
    step: int
    lam: float
    load: float
    advance: float
    stagger_iterations: int
    newton_iterations: int
    pressure: float | None = None
    external_work: float = 0.0
    elastic_energy: float = 0.0
    plastic_work: float = 0.0
    fracture_energy: float = 0.0
    max_phi: float = 0.0


@dataclass
class FailureEvent:
    criterion: str          # "advance" | "drop"
    load: float
    lam: float
    advance: float
    step: int
    pressure: float | None = None


@dataclass
class RunResult:
    records: list[StepRecord]
    failure: FailureEvent | None
    state: SimulationState

    @property
    def failed(self) -> bool:
        return self.failure is not None

    @property
    def max_load(self) -> float:
        return max((r.load for r in self.records), default=0.0)


@dataclass
class _DispSolution:
    q: np.ndarray
    u: np.ndarray
    eps: np.ndarray
    sigma: np.ndarray
    eps_p: np.ndarray
    p: np.ndarray
    f_int: np.ndarray
    iterations: int
    residuals: list[float]


class Simulation:
    """Staggered phase-field / elastic-plastic solver on one mesh.

    Parameters
    ----------
    load_measure : callable
        Maps the full internal force vector to the scalar load used for
        failure detection (for example the summed reaction on an edge).
    tractions : ndarray, optional
        Reference nodal force vector, applied as ``lam * tractions``.
    pressure_of_load : callable, optional
        Converts the load measure into a gas pressure for Sievert boundaries.
    """

    def __init__(self, mesh: Mesh, material: MaterialField, constraints: Constraints,
                 config: SolverConfig | None = None,
                 load_measure: Callable[[np.ndarray], float] | None = None,
                 tractions: np.ndarray | None = None,
                 hydrogen: HydrogenCoupling | None = None,
                 pressure_of_load: Callable[[float], float] | None = None,
                 initial_phi: np.ndarray | None = None):
        self.mesh = mesh
        self.mat = material
        self.cfg = config or SolverConfig()
        plane_stress = self.cfg.kinematics == "plane_stress"
        self.space = QuadSpace(mesh, bbar=not plane_stress)
        self.T, self.u_hat = constraints.build(mesh.nodes)
        self.TT = self.T.T.tocsr()
        self.load_measure = load_measure or (lambda f: 0.0)
        self.tractions = tractions
        self.hydrogen = hydrogen
        self.pressure_of_load = pressure_of_load
        ne, nn = mesh.n_elements, mesh.n_nodes
        self._q = {k: material.qp(k) for k in ("E", "nu", "sigma_y0", "n", "Gc", "ell", "beta")}
        self._bulk = self._q["E"] / (3.0 * (1.0 - 2.0 * self._q["nu"]))
        self._shear = self._q["E"] / (2.0 * (1.0 + self._q["nu"]))
        eps_p0 = np.zeros((ne, 4, 4))
        if material.eigenstrain is not None:
            eps_p0[:] = material.eigenstrain[:, None, :]
        p0 = np.zeros((ne, 4)) if material.eps_p_eq0 is None else material.qp("eps_p_eq0")
        phi0 = np.zeros(nn) if initial_phi is None else np.asarray(initial_phi, float).copy()
        C0 = np.zeros(nn)
        self.state = SimulationState(
            u=np.zeros(2 * nn), q=np.zeros(self.T.shape[1]), phi=phi0, C=C0,
            eps=np.zeros((ne, 4, 4)), eps_p=eps_p0, p=p0, H=np.zeros((ne, 4)),
            psi_p=_plastic_energy(p0, self._q["E"], self._q["sigma_y0"], self._q["n"]),
            sigma=np.zeros((ne, 4, 4)), wp=np.zeros((ne, 4)), f_int=np.zeros(2 * nn))
        self._q_prev = None
        self._dlam_prev = None
        self._q_unit = None
        self.external_work = 0.0
        self.last_pressure: float | None = None
        if hydrogen is not None:
            self._hlaw = hydrogen.law(ne)

    # ------------------------------------------------------------------
    # displacement problem
    # ------------------------------------------------------------------
    def _constitutive(self, eps, committed: SimulationState, phi_q):
        m = self._q
        args = (committed.eps_p, committed.p, phi_q, m["E"], m["nu"], m["sigma_y0"], m["n"], m["beta"])
        if self.cfg.kinematics == "plane_stress":
            eps = eps.copy()
            eps[..., 2] = committed.eps[..., 2]
            eps, res, cond = lateral_release(eps, *args, free=[2],
                                             residual_stiffness=self.cfg.residual_stiffness)
            D = np.zeros(eps.shape + (4,))
            keep = [0, 1, 3]
            D[..., np.array(keep)[:, None], np.array(keep)[None, :]] = cond
            return eps, res, D
        res = return_mapping(eps, *args, residual_stiffness=self.cfg.residual_stiffness)
        return eps, res, res.tangent

    def _unit_response(self) -> np.ndarray:
        """Undamaged linear-elastic dq/dlam."""
        if self._q_unit is None:
            if self.cfg.kinematics == "plane_stress":
                self._q_unit = np.zeros(self.T.shape[1])
                return self._q_unit
            E, nu = self._q["E"], self._q["nu"]
            lame = E * nu / ((1 + nu) * (1 - 2 * nu))
            D = np.zeros(E.shape + (4, 4))
            D[..., :3, :3] = lame[..., None, None]
            D += (2 * self._shear)[..., None, None] * np.eye(4)
            K = self.space.stiffness(D)
            rhs = -(self.TT @ (K @ self.u_hat))
            if self.tractions is not None:
                rhs = rhs + self.TT @ self.tractions
            Kr = (self.TT @ K @ self.T).tocsc()
            self._q_unit = spla.splu(Kr, permc_spec="MMD_AT_PLUS_A").solve(rhs)
        return self._q_unit

    def solve_displacement(self, lam: float, phi: np.ndarray, committed: SimulationState,
                           q0: np.ndarray | None = None) -> _DispSolution:
        """Newton iteration on the momentum balance with phi frozen."""
        cfg = self.cfg
        plain = self.cfg.kinematics == "plane_stress"
        phi_q = np.clip(self.space.interp(phi), 0.0, 1.0)
        if q0 is None:
            # elastic predictor for the load increment keeps the first Newton
            # iterate close to equilibrium when the prescribed field is local
            q = committed.q + (lam - committed.lam) * self._unit_response()
        else:
            q = q0.copy()
        f_ext = lam * self.tractions if self.tractions is not None else None
        residuals = []
        for it in range(cfg.max_newton + 1):
            u = self.T @ q + lam * self.u_hat
            eps = self.space.strain(u, plain=plain)
            eps, res, D = self._constitutive(eps, committed, phi_q)
            f_int = self.space.internal_force(res.sigma, plain=plain)
            rfull = f_int if f_ext is None else f_int - f_ext
            r = self.TT @ rfull
            ref = np.max(np.abs(f_int))
            if f_ext is not None:
                ref = max(ref, np.max(np.abs(f_ext)))
            rn = float(np.max(np.abs(r))) if r.size else 0.0
            residuals.append(rn)
            if not np.isfinite(rn):
                raise SolverError("non-finite residual")
            floor = 1e-12 * float(np.max(self._q["E"])) * float(np.mean(self.space.wdet))
            if rn <= cfg.newton_tol * ref or rn <= floor:
                return _DispSolution(q, u, eps, res.sigma, res.eps_p, res.eps_p_eq, f_int, it, residuals)
            if it == cfg.max_newton:
                break
            K = self.space.stiffness(D, plain=plain)
            Kr = (self.TT @ K @ self.T).tocsc()
            try:
                dq = spla.splu(Kr, permc_spec="MMD_AT_PLUS_A").solve(-r)
            except RuntimeError as exc:
                raise SolverError(f"singular tangent: {exc}") from exc
            q = q + dq
        raise SolverError(f"Newton did not converge in {cfg.max_newton} iterations (|r|={residuals[-1]:.3e})")

    # ------------------------------------------------------------------
    # history and phase field
    # ------------------------------------------------------------------
    def update_history(self, committed: SimulationState, disp: _DispSolution):
        """Return (H, psi_p): running max of tensile elastic energy and plastic energy."""
        psi = _psi_plus(disp.eps - disp.eps_p, self._bulk, self._shear)
        H = np.maximum(committed.H, psi)
        psi_p = _plastic_energy(disp.p, self._q["E"], self._q["sigma_y0"], self._q["n"])
        return H, psi_p

    def solve_phase_field(self, H: np.ndarray, psi_p: np.ndarray, Gc_q: np.ndarray | None = None) -> np.ndarray:
        """Linear solve of (Gc/ell)(phi - ell^2 lap phi) = 2 (1 - phi)(H + beta psi_p)."""
        Gc = self._q["Gc"] if Gc_q is None else Gc_q
        ell = self._q["ell"]
        drive = H + self._q["beta"] * psi_p
        A = self.space.scalar_matrix(mass_coef=Gc / ell + 2.0 * drive, diff_coef=Gc * ell, lumped=True)
        b = self.space.scalar_load(2.0 * drive)
        phi = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(b)
        tol = self.cfg.phi_bound_tol
        if phi.min() < -tol or phi.max() > 1.0 + tol:
            raise SolverError(f"phase field left [0, 1]: [{phi.min():.3e}, {phi.max():.6f}]")
        return phi

    def hydrogen_field(self, sigma: np.ndarray, load: float):
        """Stationary concentration for the current stress; returns (C, Gc_q, pressure)."""
        h = self.hydrogen
        sh = sigma[..., :3].sum(-1) / 3.0
        sh_nodal = self.space.nodal_projection(sh)
        pressure = self.pressure_of_load(load) if self.pressure_of_load else None
        C = stationary_concentration(self.space, h.params, h.bc, sh_nodal, pressure=pressure)
        Cq = self.space.interp(C)
        f_min, q1, q2 = self._hlaw
        Gc_q = toughness_field(Cq, self._q["Gc"], f_min, q1, q2)
        return C, Gc_q, pressure

    def crack_advance(self, phi: np.ndarray) -> float:
        """Largest distance ahead of any initial tip reached by phi >= phi_crack."""
        cracked = phi >= self.cfg.phi_crack
        if not cracked.any() or not self.mesh.tips:
            return 0.0
        X = self.mesh.nodes[cracked]
        best = 0.0
        for tip in self.mesh.tips:
            rel = X - tip.position
            ahead = rel @ tip.direction >= 0.0
            if ahead.any():
                best = max(best, float(np.max(np.linalg.norm(rel[ahead], axis=1))))
        return best

    def advance_threshold(self) -> float:
        if self.cfg.advance_length is not None:
            return self.cfg.advance_length
        ell = self.mat.ell
        if self.mesh.tips:
            c = self.mesh.centroids()
            vals = []
            for tip in self.mesh.tips:
                vals.append(ell[np.argmin(np.linalg.norm(c - tip.position, axis=1))])
            return self.cfg.advance_lengths * float(max(vals))
        return self.cfg.advance_lengths * float(np.max(ell))

    # ------------------------------------------------------------------
    # coupled step
    # ------------------------------------------------------------------
    def staggered_step(self, lam: float, q0: np.ndarray | None = None):
        """Alternate displacement, history, hydrogen and phase-field solves at ``lam``.

        Returns ``(state, info)``. ``info['advance_failure']`` is set when the
        crack front passes the failure threshold during the iterations.
        """
        committed = self.state
        phi_it = committed.phi.copy()
        C = committed.C
        Gc_q = None
        threshold = self.advance_threshold()
        newton_total = 0
        q = q0
        pressure = None
        disp = H = psi_p = None
        info = {"advance_failure": False, "advance": 0.0}
        for k in range(1, self.cfg.max_stagger + 1):
            disp = self.solve_displacement(lam, phi_it, committed, q)
            q = disp.q
            newton_total += disp.iterations
            H, psi_p = self.update_history(committed, disp)
            load = float(self.load_measure(disp.f_int))
            if self.hydrogen is not None:
                C, Gc_q, pressure = self.hydrogen_field(disp.sigma, load)
            if not self.cfg.phase_field:
                break
            phi_new = self.solve_phase_field(H, psi_p, Gc_q)
            dphi = float(np.max(np.abs(phi_new - phi_it)))
            phi_it = phi_new
            adv = self.crack_advance(phi_it)
            info["advance"] = adv
            if adv >= threshold:
                info["advance_failure"] = True
                break
            if dphi < self.cfg.stagger_tol:
                break
        else:
            raise SolverError(f"staggering did not converge in {self.cfg.max_stagger} iterations")
        info["stagger_iterations"] = k
        info["newton_iterations"] = newton_total
        info["dphi_history_last"] = k
        new = committed.copy()
        dp = disp.p - committed.p
        phi_q = np.clip(self.space.interp(phi_it), 0.0, 1.0)
        gp = self._q["beta"] * (1.0 - phi_q) ** 2 - self._q["beta"] + 1.0
        new.wp = committed.wp + gp * flow_stress(disp.p, self._q["sigma_y0"], self._q["E"], self._q["n"]) * dp
        new.u, new.q, new.phi, new.C = disp.u, disp.q, phi_it, C
        new.eps, new.eps_p, new.p, new.sigma = disp.eps, disp.eps_p, disp.p, disp.sigma
        new.H, new.psi_p, new.f_int = H, psi_p, disp.f_int
        new.lam = lam
        new.load = float(self.load_measure(disp.f_int))
        new.step = committed.step + 1
        info["pressure"] = pressure
        return new, info

    def energies(self, state: SimulationState) -> dict:
        """Stored elastic energy, dissipated plastic work and regularised crack energy."""
        ee = state.eps - state.eps_p
        phi_q = np.clip(self.space.interp(state.phi), 0.0, 1.0)
        g = (1.0 - phi_q) ** 2 + self.cfg.residual_stiffness
        vol = ee[..., :3].sum(-1)
        dev = ee - (vol / 3.0)[..., None] * np.array([1.0, 1.0, 1.0, 0.0])
        K, G = self._bulk, self._shear
        psi_dev = G * np.einsum("...i,...i->...", dev, dev)
        psi_vp = 0.5 * K * np.maximum(vol, 0.0) ** 2
        psi_vn = 0.5 * K * np.minimum(vol, 0.0) ** 2
        elastic = self.space.integrate(g * (psi_dev + psi_vp) + psi_vn)
        gphi = self.space.grad(state.phi)
        Gc, ell = self._q["Gc"], self._q["ell"]
        crack = self.space.integrate(0.5 * Gc * (phi_q**2 / ell + ell * np.einsum("eqi,eqi->eq", gphi, gphi)))
        return {"elastic": elastic, "plastic": self.space.integrate(state.wp), "fracture": crack}

    # ------------------------------------------------------------------
    # load stepping
    # ------------------------------------------------------------------
    def run(self, lam_max: float, dlam: float, dlam_max: float | None = None,
            max_steps: int = 100000, stop_on_failure: bool = True,
            callback: Callable[[SimulationState, StepRecord], None] | None = None) -> RunResult:
        """Ramp the load factor to ``lam_max`` with adaptive increments.

        Failure is declared when the crack front advances the threshold
        distance, or when the load drops more than ``drop_fraction`` below its
        running maximum. The reported failure load is the larger of the
        interpolated crossing load and the running maximum before it.
        """
        cfg = self.cfg
        dlam_max = dlam_max or dlam * 8
        min_inc = cfg.min_increment * lam_max
        records: list[StepRecord] = []
        failure = None
        clean = 0
        refinements = 0
        max_load = self.state.load
        prev_adv = 0.0
        while self.state.lam < lam_max * (1 - 1e-12) and len(records) < max_steps:
            dl = min(dlam, lam_max - self.state.lam)
            lam = self.state.lam + dl
            q0 = None
            if self._q_prev is not None and self._dlam_prev:
                q0 = self.state.q + (dl / self._dlam_prev) * (self.state.q - self._q_prev)
            try:
                new, info = self.staggered_step(lam, q0)
            except (SolverError, ReturnMappingError, np.linalg.LinAlgError) as exc:
                dlam = dl / 2.0
                clean = 0
                log.debug("step to lam=%.6g failed (%s); halving", lam, exc)
                if dlam < min_inc:
                    raise SimulationAbort(f"increment below minimum at lam={self.state.lam:.6g}: {exc}") from exc
                continue
            if info["advance_failure"] and refinements < cfg.refine_failure and dl > 4 * min_inc:
                refinements += 1
                dlam = dl / 4.0
                clean = 0
                continue
            old = self.state
            self.external_work += 0.5 * float((old.f_int + new.f_int) @ (new.u - old.u))
            self._q_prev, self._dlam_prev = old.q, dl
            self.state = new
            en = self.energies(new)
            rec = StepRecord(new.step, lam, new.load, info["advance"], info["stagger_iterations"],
                             info["newton_iterations"], info["pressure"], self.external_work,
                             en["elastic"], en["plastic"], en["fracture"], float(new.phi.max()))
            records.append(rec)
            if callback is not None:
                callback(new, rec)
            if info["pressure"] is not None:
                self.last_pressure = info["pressure"]
            if info["advance_failure"]:
                a_prev, p_prev = prev_adv, old.load
                frac = (self.advance_threshold() - a_prev) / max(info["advance"] - a_prev, 1e-300)
                p_int = p_prev + min(max(frac, 0.0), 1.0) * (new.load - p_prev)
                failure = FailureEvent("advance", max(p_int, max_load), lam, info["advance"], new.step,
                                       self._pressure(max(p_int, max_load)))
            elif max_load > 0 and new.load < (1.0 - cfg.drop_fraction) * max_load:
                failure = FailureEvent("drop", max_load, lam, info["advance"], new.step,
                                       self._pressure(max_load))
            max_load = max(max_load, new.load)
            prev_adv = info["advance"]
            if failure is not None and stop_on_failure:
                break
            clean += 1
            if clean >= cfg.growth_after:
                dlam = min(dlam * cfg.growth_factor, dlam_max)
                clean = 0
        return RunResult(records, failure, self.state)

    def _pressure(self, load):
        return self.pressure_of_load(load) if self.pressure_of_load else None


# --------------------------------------------------------------------------
# limit load
# --------------------------------------------------------------------------

@dataclass
class LimitLoadResult:
    Py: float
    lam: float
    loads: np.ndarray
    lams: np.ndarray


def limit_load_analysis(mesh: Mesh, material: MaterialField, constraints: Constraints,
                        load_measure: Callable[[np.ndarray], float], lam_max: float,
                        n_steps: int = 60, stiffness_ratio: float = 0.01,
                        tractions: np.ndarray | None = None) -> LimitLoadResult:
    """Perfectly plastic, undamaged ramp; Py is the load where the incremental
    stiffness falls below ``stiffness_ratio`` of the elastic one."""
    mat = material.copy_with(n=np.zeros_like(material.n))
    cfg = SolverConfig(phase_field=False, residual_stiffness=0.0, newton_tol=1e-8, max_newton=40)
    sim = Simulation(mesh, mat, constraints, cfg, load_measure, tractions)
    # geometric ramp: fine near yield onset, coarse in the plateau
    lams = lam_max * (np.geomspace(1.0, 101.0, n_steps + 1) - 1.0) / 100.0
    loads = [0.0]
    k_el = None
    for i in range(1, len(lams)):
        try:
            new, _ = sim.staggered_step(lams[i])
        except SolverError:
            sub = np.linspace(lams[i - 1], lams[i], 5)[1:]
            for lam in sub:
                new, _ = sim.staggered_step(lam)
                sim.state = new
        sim.state = new
        loads.append(new.load)
        k = (loads[-1] - loads[-2]) / (lams[i] - lams[i - 1])
        if k_el is None:
            k_el = k
        elif k < stiffness_ratio * k_el:
            return LimitLoadResult(loads[-1], lams[i], np.array(loads), lams[: i + 1])
    raise SolverError("no plastic plateau reached within the displacement budget")


def reaction(f_int: np.ndarray, nodes: np.ndarray, direction) -> float:
    """Sum of internal nodal forces on ``nodes`` projected on ``direction``."""
    nodes = np.asarray(nodes)
    d = np.broadcast_to(np.asarray(direction, dtype=float), (nodes.size, 2))
    return float(np.sum(f_int[2 * nodes] * d[:, 0] + f_int[2 * nodes + 1] * d[:, 1]))
