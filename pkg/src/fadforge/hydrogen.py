"""Stress-assisted hydrogen diffusion and the resulting toughness field.

The transport equation is

    dC/dt = div(D grad C - D C Vh/(R T) grad sigma_h)

discretised with the same bilinear elements as the mechanics. For a given
hydrostatic stress field the problem is linear in C.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import QuadSpace
from .material import DomainError, HydrogenParams, sievert_concentration


@dataclass
class DiffusionBC:
    """Prescribed concentrations per node set; all other boundaries are zero-flux.

    A value may be a number [wppm] or the string ``"sievert"``, meaning
    ``S sqrt(p)`` for the current gas pressure ``p``.
    """

    values: dict[str, float | str] = field(default_factory=dict)

    def __post_init__(self):
        for name, v in self.values.items():
            if isinstance(v, str):
                if v.strip().lower() != "sievert":
                    raise DomainError(f"unknown concentration rule {v!r} on {name!r}")
            elif v < 0:
                raise DomainError(f"negative prescribed concentration on {name!r}")

    def resolve(self, mesh, S: float | None = None, pressure: float | None = None):
        nodes, vals = [], []
        for name, v in self.values.items():
            ids = mesh.node_sets[name]
            if isinstance(v, str):
                if pressure is None or S is None:
                    raise DomainError("a Sievert boundary needs the solubility and a pressure")
                v = sievert_concentration(max(pressure, 0.0), S)
            nodes.append(ids)
            vals.append(np.full(ids.size, float(v)))
        if not nodes:
            return np.zeros(0, dtype=int), np.zeros(0)
        nodes = np.concatenate(nodes)
        vals = np.concatenate(vals)
        # later entries win on shared corner nodes
        _, last = np.unique(nodes[::-1], return_index=True)
        keep = nodes.size - 1 - last
        return nodes[keep], vals[keep]


def transport_matrix(space: QuadSpace, D, drift_k, sigma_h_nodal: np.ndarray) -> sp.csr_matrix:
    """A_ab = int D grad Na . grad Nb - int D k Nb grad Na . grad sigma_h."""
    ne = space.mesh.n_elements
    Dq = np.broadcast_to(np.asarray(D, dtype=float), (ne, 4)) * space.wdet
    gs = space.grad(sigma_h_nodal)
    ke = np.einsum("eqai,eqbi,eq->eab", space.dNdx, space.dNdx, Dq)
    ke -= drift_k * np.einsum("eqai,eqi,qb,eq->eab", space.dNdx, gs, space.N, Dq)
    return space.scalar_pattern.matrix(ke)


def _solve_with_dirichlet(A: sp.csr_matrix, rhs: np.ndarray, nodes, vals) -> np.ndarray:
    n = A.shape[0]
    x = np.zeros(n)
    x[nodes] = vals
    free = np.ones(n, dtype=bool)
    free[nodes] = False
    if not free.any():
        return x
    A = A.tocsc()
    Aff = A[free][:, free]
    b = rhs[free] - A[free][:, ~free] @ x[~free]
    x[free] = spla.splu(Aff.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(b)
    return x


def stationary_concentration(space: QuadSpace, params: HydrogenParams, bc: DiffusionBC,
                             sigma_h_nodal: np.ndarray, pressure: float | None = None) -> np.ndarray:
    """Steady concentration for a frozen hydrostatic stress field."""
    nodes, vals = bc.resolve(space.mesh, params.S, pressure)
    if nodes.size == 0:
        raise DomainError("steady diffusion needs at least one prescribed concentration")
    A = transport_matrix(space, params.D, params.drift_coefficient, sigma_h_nodal)
    return _solve_with_dirichlet(A, np.zeros(space.mesh.n_nodes), nodes, vals)


def diffusion_step(space: QuadSpace, params: HydrogenParams, dt: float, bc: DiffusionBC,
                   C_old: np.ndarray, sigma_h_nodal: np.ndarray,
                   pressure: float | None = None) -> np.ndarray:
    """Backward-Euler step with a lumped capacity matrix.

    The drift term uses the given stress, so one linear solve is exact; there
    is nothing to iterate on.
    """
    if not dt > 0:
        raise DomainError("time step must be positive")
    M = space.scalar_matrix(mass_coef=1.0, lumped=True)
    A = transport_matrix(space, params.D, params.drift_coefficient, sigma_h_nodal)
    nodes, vals = bc.resolve(space.mesh, params.S, pressure)
    lhs = (M / dt + A).tocsr()
    rhs = (M / dt) @ C_old
    if nodes.size == 0:
        return spla.splu(lhs.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(rhs)
    return _solve_with_dirichlet(lhs, rhs, nodes, vals)


def total_hydrogen(space: QuadSpace, C: np.ndarray) -> float:
    """Lumped integral of C, the quantity conserved by diffusion_step."""
    return float(space.scalar_load(1.0) @ C)


@dataclass(frozen=True)
class DegradationLaw:
    """Constants of f(C) = f_min + (1 - f_min) exp(-q1 C^q2)."""

    f_min: float
    q1: float
    q2: float = 1.0


# illustrative fits for the two microstructures of a pipeline weld
FERRITIC_PEARLITIC = DegradationLaw(f_min=0.6, q1=10.0, q2=1.0)
BAINITIC = DegradationLaw(f_min=0.25, q1=30.0, q2=1.0)


def blend_degradation(x_b, low: DegradationLaw = FERRITIC_PEARLITIC, high: DegradationLaw = BAINITIC):
    """Linear interpolation of the degradation constants in bainite fraction."""
    x_b = np.asarray(x_b, dtype=float)
    if np.any((x_b < 0) | (x_b > 1)):
        raise DomainError("bainite fraction must lie in [0, 1]")
    lerp = lambda a, b: (1.0 - x_b) * a + x_b * b
    return lerp(low.f_min, high.f_min), lerp(low.q1, high.q1), lerp(low.q2, high.q2)


def toughness_field(C_q, Gc_q, f_min, q1, q2):
    """Pointwise hydrogen-degraded toughness f(C) Gc."""
    C_q = np.maximum(np.asarray(C_q, dtype=float), 0.0)
    return Gc_q * (f_min + (1.0 - f_min) * np.exp(-q1 * C_q**q2))
