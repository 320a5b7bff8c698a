"""Bilinear quadrilateral function spaces, sparse assembly and constraints."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .material import I2, SQ2
from .mesh import GAUSS_2X2, Mesh, MeshError, shape_functions


class _Pattern:
    """Precomputed CSR structure for element matrices of one dof layout."""

    def __init__(self, edofs: np.ndarray, ndof: int):
        k = edofs.shape[1]
        rows = np.repeat(edofs, k, axis=1).ravel()
        cols = np.tile(edofs, (1, k)).ravel()
        keys = rows.astype(np.int64) * ndof + cols
        uniq, self.inv = np.unique(keys, return_inverse=True)
        self.inv = self.inv.ravel()
        self.indices = (uniq % ndof).astype(np.int32)
        r = uniq // ndof
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(r, minlength=ndof))]).astype(np.int32)
        self.ndof = ndof
        self.nnz = uniq.size

    def matrix(self, ke: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.inv, weights=ke.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.ndof, self.ndof))


class QuadSpace:
    """Q4 interpolation with 2x2 Gauss quadrature on a mesh.

    Displacement strains use the B-bar (mean dilatation) operator when
    ``bbar`` is set, which removes volumetric locking in plane-strain
    plasticity. Strain vectors are Mandel ``[xx, yy, zz, sqrt2*xy]``.
    """

    nq = 4

    def __init__(self, mesh: Mesh, bbar: bool = True):
        self.mesh = mesh
        self.bbar = bbar
        X = mesh.nodes[mesh.elements]
        ne = mesh.n_elements
        self.N = np.empty((4, 4))
        self.dNdx = np.empty((ne, 4, 4, 2))
        self.wdet = np.empty((ne, 4))
        for q, (xi, eta) in enumerate(GAUSS_2X2):
            N, dN = shape_functions(xi, eta)
            self.N[q] = N
            J = np.einsum("eai,aj->eij", X, dN)
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            if np.any(det <= 0):
                raise MeshError("non-positive Jacobian")
            inv = np.empty_like(J)
            inv[:, 0, 0] = J[:, 1, 1] / det
            inv[:, 1, 1] = J[:, 0, 0] / det
            inv[:, 0, 1] = -J[:, 0, 1] / det
            inv[:, 1, 0] = -J[:, 1, 0] / det
            self.dNdx[:, q] = np.einsum("aj,eji->eai", dN, inv)
            self.wdet[:, q] = det
        self.xq = np.einsum("qa,eai->eqi", self.N, X)
        self.B = self._strain_operator(bbar)
        self.B_plain = self.B if not bbar else self._strain_operator(False)
        e = mesh.elements
        self.edofs = np.empty((ne, 8), dtype=np.int64)
        self.edofs[:, 0::2] = 2 * e
        self.edofs[:, 1::2] = 2 * e + 1
        self.ndof = 2 * mesh.n_nodes
        self._vpat = None
        self._spat = None

    # -- operators --------------------------------------------------------
    def _strain_operator(self, bbar: bool) -> np.ndarray:
        dx, dy = self.dNdx[..., 0], self.dNdx[..., 1]
        ne = dx.shape[0]
        B = np.zeros((ne, 4, 4, 8))
        B[:, :, 0, 0::2] = dx
        B[:, :, 1, 1::2] = dy
        B[:, :, 3, 0::2] = dy / SQ2
        B[:, :, 3, 1::2] = dx / SQ2
        if bbar:
            v = np.zeros((ne, 4, 8))
            v[:, :, 0::2] = dx
            v[:, :, 1::2] = dy
            vbar = np.einsum("eq,eqk->ek", self.wdet, v) / self.wdet.sum(axis=1)[:, None]
            B += (vbar[:, None, :] - v)[:, :, None, :] * (I2[None, None, :, None] / 3.0)
        return B

    @property
    def vector_pattern(self) -> _Pattern:
        if self._vpat is None:
            self._vpat = _Pattern(self.edofs, self.ndof)
        return self._vpat

    @property
    def scalar_pattern(self) -> _Pattern:
        if self._spat is None:
            self._spat = _Pattern(self.mesh.elements.astype(np.int64), self.mesh.n_nodes)
        return self._spat

    def strain(self, u: np.ndarray, plain: bool = False) -> np.ndarray:
        B = self.B_plain if plain else self.B
        return np.einsum("eqik,ek->eqi", B, u[self.edofs])

    def internal_force(self, sigma: np.ndarray, plain: bool = False) -> np.ndarray:
        B = self.B_plain if plain else self.B
        fe = np.einsum("eqik,eqi,eq->ek", B, sigma, self.wdet)
        return np.bincount(self.edofs.ravel(), weights=fe.ravel(), minlength=self.ndof)

    def stiffness(self, D: np.ndarray, plain: bool = False) -> sp.csr_matrix:
        B = self.B_plain if plain else self.B
        BtW = np.swapaxes(B, -1, -2) * self.wdet[..., None, None]
        ke = (BtW @ (D @ B)).sum(axis=1)
        return self.vector_pattern.matrix(ke)

    def interp(self, nodal: np.ndarray) -> np.ndarray:
        return np.einsum("qa,ea->eq", self.N, nodal[self.mesh.elements])

    def grad(self, nodal: np.ndarray) -> np.ndarray:
        return np.einsum("eqai,ea->eqi", self.dNdx, nodal[self.mesh.elements])

    def displacement_gradient(self, u: np.ndarray) -> np.ndarray:
        """(ne, nq, 2, 2) with [i, j] = du_i/dx_j (no B-bar)."""
        ue = u[self.edofs].reshape(-1, 4, 2)
        return np.einsum("eai,eqaj->eqij", ue, self.dNdx)

    def scalar_matrix(self, mass_coef=None, diff_coef=None, lumped: bool = True) -> sp.csr_matrix:
        """sum of int(m N_a N_b) (row-lumped if requested) and int(k grad N_a . grad N_b)."""
        ne = self.mesh.n_elements
        ke = np.zeros((ne, 4, 4))
        if diff_coef is not None:
            k = np.broadcast_to(diff_coef, (ne, 4))
            ke += np.einsum("eqai,eqbi,eq->eab", self.dNdx, self.dNdx, k * self.wdet)
        if mass_coef is not None:
            m = np.broadcast_to(mass_coef, (ne, 4))
            if lumped:
                diag = np.einsum("qa,eq->ea", self.N, m * self.wdet)
                ke[:, np.arange(4), np.arange(4)] += diag
            else:
                ke += np.einsum("qa,qb,eq->eab", self.N, self.N, m * self.wdet)
        return self.scalar_pattern.matrix(ke)

    def scalar_load(self, coef) -> np.ndarray:
        ne = self.mesh.n_elements
        c = np.broadcast_to(coef, (ne, 4))
        fe = np.einsum("qa,eq->ea", self.N, c * self.wdet)
        return np.bincount(self.mesh.elements.ravel(), weights=fe.ravel(), minlength=self.mesh.n_nodes)

    def nodal_projection(self, qvals: np.ndarray) -> np.ndarray:
        """Lumped L2 projection of quadrature values onto nodes."""
        num = self.scalar_load(qvals)
        den = self.scalar_load(1.0)
        return num / den

    def integrate(self, qvals) -> float:
        return float(np.sum(np.broadcast_to(qvals, self.wdet.shape) * self.wdet))

    def edge_load(self, edges: np.ndarray, traction) -> np.ndarray:
        """Consistent nodal forces of a traction ``traction(x, n) -> (k, 2)`` on edges."""
        f = np.zeros(self.ndof)
        X = self.mesh.nodes
        a, b = X[edges[:, 0]], X[edges[:, 1]]
        t = b - a
        length = np.linalg.norm(t, axis=1)
        n = np.column_stack([t[:, 1], -t[:, 0]]) / length[:, None]
        for s in (-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)):
            Na, Nb = 0.5 * (1 - s), 0.5 * (1 + s)
            x = Na * a + Nb * b
            tr = traction(x, n) * (0.5 * length)[:, None]
            for node, w in ((edges[:, 0], Na), (edges[:, 1], Nb)):
                np.add.at(f, 2 * node, w * tr[:, 0])
                np.add.at(f, 2 * node + 1, w * tr[:, 1])
        return f


class Constraints:
    """Linear displacement constraints written as ``u = T q + lam * u_hat``.

    Supports prescribed components along arbitrary directions (rollers on
    inclined planes included) and rigid edges that translate with the load
    and rotate freely about a pivot.
    """

    def __init__(self, n_nodes: int):
        self.n_nodes = n_nodes
        self._dir: dict[int, list[tuple[np.ndarray, float]]] = {}
        self._rigid: list[tuple[np.ndarray, int, float, float]] = []
        self._T = None

    def prescribe(self, nodes, direction, value=0.0):
        """Fix u . d = value * lam for each node; ``direction`` is 0, 1, a vector
        or an (n, 2) array; ``value`` may be scalar or per node."""
        nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
        if np.isscalar(direction) or np.ndim(direction) == 0:
            d = np.zeros((nodes.size, 2))
            d[:, int(direction)] = 1.0
        else:
            d = np.broadcast_to(np.asarray(direction, dtype=float), (nodes.size, 2))
        d = d / np.linalg.norm(d, axis=1)[:, None]
        vals = np.broadcast_to(np.asarray(value, dtype=float), (nodes.size,))
        for i, di, v in zip(nodes, d, vals):
            self._dir.setdefault(int(i), []).append((di.copy(), float(v)))
        self._T = None
        return self

    def fix(self, nodes, components=(0, 1)):
        for c in components:
            self.prescribe(nodes, c, 0.0)
        return self

    def prescribe_vector(self, nodes, values):
        """Prescribe both components: u = values * lam."""
        nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
        values = np.broadcast_to(np.asarray(values, dtype=float), (nodes.size, 2))
        self.prescribe(nodes, 0, values[:, 0])
        self.prescribe(nodes, 1, values[:, 1])
        return self

    def rigid_edge(self, nodes, axis: int = 1, value: float = 1.0, pivot: float | None = None):
        """u_axis = value*lam + theta*(x_other - pivot) with a free rotation theta.

        The pivot defaults to the middle of the edge, so the resultant force
        acts there.
        """
        nodes = np.asarray(nodes, dtype=int)
        self._rigid.append((nodes, int(axis), float(value), pivot))
        self._T = None
        return self

    def build(self, coords: np.ndarray):
        ndof = 2 * self.n_nodes
        rows, cols, vals = [], [], []
        u_hat = np.zeros(ndof)
        ncol = 0
        rigid_of = {}
        for k, (nodes, axis, value, pivot) in enumerate(self._rigid):
            other = 1 - axis
            pv = pivot if pivot is not None else 0.5 * (coords[nodes, other].min() + coords[nodes, other].max())
            for i in nodes:
                rigid_of[int(i)] = (k, axis, value, coords[i, other] - pv)
        rot_col = {}
        for i in range(self.n_nodes):
            cons = self._dedupe(self._dir.get(i, []), i)
            if i in rigid_of:
                k, axis, value, arm = rigid_of[i]
                if k not in rot_col:
                    rot_col[k] = ncol
                    ncol += 1
                rows.append(2 * i + axis)
                cols.append(rot_col[k])
                vals.append(arm)
                u_hat[2 * i + axis] = value
                other = 1 - axis
                fixed_other = [v for d, v in cons if abs(d[other]) > 1 - 1e-12]
                if len(cons) > len(fixed_other):
                    raise MeshError(f"node {i}: rigid edge conflicts with another constraint")
                if fixed_other:
                    u_hat[2 * i + other] = fixed_other[0]
                else:
                    rows.append(2 * i + other)
                    cols.append(ncol)
                    vals.append(1.0)
                    ncol += 1
                continue
            if not cons:
                rows += [2 * i, 2 * i + 1]
                cols += [ncol, ncol + 1]
                vals += [1.0, 1.0]
                ncol += 2
            elif len(cons) == 1:
                d, v = cons[0]
                u_hat[2 * i : 2 * i + 2] = v * d
                perp = np.array([-d[1], d[0]])
                for c in (0, 1):
                    if abs(perp[c]) > 0:
                        rows.append(2 * i + c)
                        cols.append(ncol)
                        vals.append(perp[c])
                ncol += 1
            else:
                A = np.array([c[0] for c in cons[:2]])
                b = np.array([c[1] for c in cons[:2]])
                u_hat[2 * i : 2 * i + 2] = np.linalg.solve(A, b)
        T = sp.csr_matrix((vals, (rows, cols)), shape=(ndof, ncol))
        self._T = (T, u_hat)
        return T.tocsc(), u_hat

    @staticmethod
    def _dedupe(cons, node):
        out = []
        for d, v in cons:
            dup = False
            for d2, v2 in out:
                if abs(abs(d @ d2) - 1.0) < 1e-10:
                    s = np.sign(d @ d2)
                    if abs(v - s * v2) > 1e-12 * max(1.0, abs(v)):
                        raise MeshError(f"node {node}: conflicting prescribed values")
                    dup = True
                    break
            if not dup:
                out.append((d, v))
        if len(out) > 2:
            raise MeshError(f"node {node}: more than two independent constraints")
        if len(out) == 2 and abs(np.linalg.det(np.array([out[0][0], out[1][0]]))) < 1e-10:
            raise MeshError(f"node {node}: parallel constraints")
        return out
