"""Crack-tip post-processing: domain J-integral, interaction-integral SIFs and
the mixed-mode equivalent SIF."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import QuadSpace
from .material import SQ2
from .mesh import CrackTip, Mesh, MeshError, boundary_edges

log = logging.getLogger(__name__)


@dataclass
class JResult:
    J: float
    per_domain: list[float]
    spread: float           # (max - min) / mean over the domains
    K_I: float | None = None
    K_II: float | None = None
    per_domain_K: list[tuple[float, float]] = field(default_factory=list)


def k_from_j(J, E, nu):
    """Effective SIF sqrt(E' J) with E' = E / (1 - nu^2)."""
    J = np.asarray(J, dtype=float)
    if np.any(J < 0):
        raise ValueError("J must be non-negative")
    out = np.sqrt(E / (1.0 - nu**2) * J)
    return float(out) if out.ndim == 0 else out


def kink_angle(K_I, K_II):
    """Maximum tangential stress kink angle [rad]; zero for pure mode I."""
    K_I, K_II = float(K_I), float(K_II)
    if K_II == 0.0:
        return 0.0
    return 2.0 * math.atan((K_I - math.sqrt(K_I**2 + 8.0 * K_II**2)) / (4.0 * K_II))


def mixed_mode_keq(K_I, K_II):
    """Equivalent mode-I SIF in the kink direction: (K_eq, theta)."""
    if K_I < 0:
        raise ValueError("K_I must be non-negative")
    th = kink_angle(K_I, K_II)
    c = math.cos(th / 2.0)
    return c * (K_I * c * c - 1.5 * K_II * math.sin(th)), th


def _frame(tip: CrackTip):
    d = tip.direction
    return np.array([[d[0], d[1]], [-d[1], d[0]]])


def _tensor2(m):
    """In-plane 2x2 part of Mandel stress/strain vectors."""
    t = np.empty(m.shape[:-1] + (2, 2))
    t[..., 0, 0] = m[..., 0]
    t[..., 1, 1] = m[..., 1]
    t[..., 0, 1] = t[..., 1, 0] = m[..., 3] / SQ2
    return t


def _q_nodal(mesh: Mesh, tip: CrackTip, r_in: float, r_out: float) -> np.ndarray:
    R = _frame(tip)
    loc = (mesh.nodes - tip.position) @ R.T
    rinf = np.max(np.abs(loc), axis=1)
    return np.clip((r_out - rinf) / (r_out - r_in), 0.0, 1.0)


def outer_boundary_local(mesh: Mesh, tip: CrackTip, tol: float = 1e-9) -> np.ndarray:
    """Tip-frame coordinates of boundary nodes that are not crack faces.

    Seam nodes are crack faces even when the crack is slightly curved; a
    symmetry ligament is recognised by lying on the local x-axis.
    """
    nodes = np.setdiff1d(np.unique(boundary_edges(mesh)), mesh.seams.ravel())
    loc = (mesh.nodes[nodes] - tip.position) @ _frame(tip).T
    return loc[np.abs(loc[:, 1]) > tol]


def _check_domain(mesh: Mesh, tip: CrackTip, r_out: float):
    tol = 1e-9 * max(r_out, 1.0)
    loc = outer_boundary_local(mesh, tip, tol)
    if np.any(np.max(np.abs(loc), axis=1) < r_out - tol):
        raise MeshError(f"integration domain of size {r_out} touches the outer boundary")


def default_domains(h_tip: float, count: int = 3, start: int = 2, width: int = 2):
    """Square rings measured in tip element sizes."""
    return [((start + i * width) * h_tip, (start + (i + 1) * width) * h_tip) for i in range(count)]


def _local_fields(space: QuadSpace, state, tip: CrackTip):
    R = _frame(tip)
    grad_u = space.displacement_gradient(state.u)
    gu = np.einsum("ik,eqkl,jl->eqij", R, grad_u, R)
    sig = np.einsum("ik,eqkl,jl->eqij", R, _tensor2(state.sigma), R)
    return R, gu, sig


def _energy_density(state):
    ee = state.eps - state.eps_p
    return 0.5 * np.einsum("eqi,eqi->eq", state.sigma, ee) + state.wp


def j_integral(space: QuadSpace, state, tip: CrackTip, domains, symmetric_half: bool = False,
               spread_warn: float = 0.05) -> JResult:
    """Equivalent-domain J for each square ring domain; J is the mean of all domains.

    ``symmetric_half`` doubles the result for half models cut along the crack
    plane. For elastic-plastic states the deformation-theory energy density
    (stored elastic plus plastic work) is used.
    """
    mesh = space.mesh
    R, gu, sig = _local_fields(space, state, tip)
    W = _energy_density(state)
    vals = []
    for r_in, r_out in domains:
        _check_domain(mesh, tip, r_out)
        qn = _q_nodal(mesh, tip, r_in, r_out)
        dq = np.einsum("ij,eqj->eqi", R, space.grad(qn))
        integrand = np.einsum("eqij,eqi,eqj->eq", sig, gu[..., :, 0], dq) - W * dq[..., 0]
        Jd = space.integrate(integrand) * (2.0 if symmetric_half else 1.0)
        vals.append(Jd)
    vals_a = np.array(vals)
    mean = float(vals_a.mean())
    spread = float(np.ptp(vals_a) / abs(mean)) if mean != 0 else 0.0
    if spread > spread_warn:
        log.warning("J path dependence %.1f%% over %d domains", 100 * spread, len(vals))
    return JResult(mean, vals, spread)


def _williams(x1, x2, nu, G):
    """Plane-strain unit-K Williams fields. Returns (u_I, u_II, s_I, s_II) with
    u (..., 2) and in-plane stress (..., 2, 2)."""
    r = np.hypot(x1, x2)
    th = np.arctan2(x2, x1)
    kap = 3.0 - 4.0 * nu
    c, s = np.cos(th / 2), np.sin(th / 2)
    c3, s3 = np.cos(1.5 * th), np.sin(1.5 * th)
    a = np.sqrt(r / (2 * np.pi)) / (2 * G)
    uI = np.stack([a * c * (kap - 1 + 2 * s * s), a * s * (kap + 1 - 2 * c * c)], -1)
    uII = np.stack([a * s * (kap + 1 + 2 * c * c), -a * c * (kap - 1 - 2 * s * s)], -1)
    b = 1.0 / np.sqrt(2 * np.pi * r)
    sI = np.empty(r.shape + (2, 2))
    sI[..., 0, 0] = b * c * (1 - s * s3)
    sI[..., 1, 1] = b * c * (1 + s * s3)
    sI[..., 0, 1] = sI[..., 1, 0] = b * c * s * c3
    sII = np.empty(r.shape + (2, 2))
    sII[..., 0, 0] = -b * s * (2 + c * c3)
    sII[..., 1, 1] = b * s * c * c3
    sII[..., 0, 1] = sII[..., 1, 0] = b * c * (1 - s * s3)
    return uI, uII, sI, sII


def interaction_integral_k(space: QuadSpace, state, tip: CrackTip, domains, E: float, nu: float,
                           spread_warn: float = 0.05) -> JResult:
    """Mode-separated SIFs of a linear elastic state by the interaction integral.

    The mesh must contain both crack faces (no symmetry cut). Auxiliary
    displacement gradients are taken by central differences of the Williams
    displacement field.
    """
    mesh = space.mesh
    G = E / (2 * (1 + nu))
    Ep = E / (1 - nu**2)
    R, gu, sig = _local_fields(space, state, tip)
    eps = 0.5 * (gu + np.swapaxes(gu, -1, -2))
    xl = np.einsum("ij,eqj->eqi", R, space.xq - tip.position)
    x1, x2 = xl[..., 0], xl[..., 1]
    r = np.hypot(x1, x2)
    _, _, sI, sII = _williams(x1, x2, nu, G)
    grads = []
    for mode in (0, 1):
        g = np.empty(x1.shape + (2, 2))
        for j in (0, 1):
            hstep = 1e-6 * r
            dx = [hstep if j == 0 else 0.0, hstep if j == 1 else 0.0]
            up = _williams(x1 + dx[0], x2 + dx[1], nu, G)[mode]
            um = _williams(x1 - dx[0], x2 - dx[1], nu, G)[mode]
            g[..., :, j] = (up - um) / (2 * hstep[..., None])
        grads.append(g)
    ks, vals = [], []
    for r_in, r_out in domains:
        _check_domain(mesh, tip, r_out)
        qn = _q_nodal(mesh, tip, r_in, r_out)
        dq = np.einsum("ij,eqj->eqi", R, space.grad(qn))
        out = []
        for ga, sa in zip(grads, (sI, sII)):
            ea = 0.5 * (ga + np.swapaxes(ga, -1, -2))
            w = np.einsum("eqij,eqij->eq", sig, ea)
            integ = (np.einsum("eqij,eqi,eqj->eq", sig, ga[..., :, 0], dq)
                     + np.einsum("eqij,eqi,eqj->eq", sa, gu[..., :, 0], dq)
                     - w * dq[..., 0])
            out.append(0.5 * Ep * space.integrate(integ))
        ks.append(tuple(out))
        vals.append(out[0] ** 2 / Ep + out[1] ** 2 / Ep)
    karr = np.array(ks)
    KI, KII = karr.mean(axis=0)
    mean = float(np.mean(vals))
    spread = float(np.ptp(karr[:, 0]) / abs(KI)) if KI != 0 else 0.0
    if spread > spread_warn:
        log.warning("interaction integral path dependence %.1f%%", 100 * spread)
    return JResult(mean, vals, spread, float(KI), float(KII), ks)


def export_fracture_csv(path, results: dict[str, JResult]) -> None:
    """Per-domain J with K_I, K_II, K_eq and kink angle per labelled tip."""
    with open(path, "w", newline="") as fh:
        fh.write("# FADFORGE-v1 fracture\n")
        w = csv.writer(fh)
        w.writerow(["label", "domain", "J", "K_I", "K_II", "K_eq", "theta_deg"])
        for label, res in sorted(results.items()):
            for i, J in enumerate(res.per_domain):
                if res.per_domain_K:
                    kI, kII = res.per_domain_K[i]
                    keq, th = mixed_mode_keq(max(kI, 0.0), kII)
                    w.writerow([label, i] + [repr(float(v)) for v in (J, kI, kII, keq, math.degrees(th))])
                else:
                    w.writerow([label, i, repr(float(J)), "", "", "", ""])
