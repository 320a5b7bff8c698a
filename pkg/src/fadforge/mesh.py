"""2D bilinear quadrilateral meshes with node/element sets and crack seams."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

GAUSS_2X2 = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(3.0)


class MeshError(ValueError):
    pass


@dataclass
class CrackTip:
    """Initial crack tip: position and unit direction of expected growth."""

    x: float
    y: float
    dx: float
    dy: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def direction(self) -> np.ndarray:
        d = np.array([self.dx, self.dy])
        return d / np.linalg.norm(d)


@dataclass
class Mesh:
    """Quad mesh; ``elements`` hold zero-based node indices, counter-clockwise.

    ``seams`` lists node pairs that share a position but are not connected
    (the two faces of an initial crack). External ids default to 1-based
    positions and are only used for file IO.
    """

    nodes: np.ndarray
    elements: np.ndarray
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    element_sets: dict[str, np.ndarray] = field(default_factory=dict)
    seams: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    tips: list[CrackTip] = field(default_factory=list)
    node_ids: np.ndarray | None = None
    element_ids: np.ndarray | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        self.seams = np.asarray(self.seams, dtype=int).reshape(-1, 2)
        self.node_sets = {k: np.asarray(v, dtype=int) for k, v in self.node_sets.items()}
        self.element_sets = {k: np.asarray(v, dtype=int) for k, v in self.element_sets.items()}
        if self.node_ids is None:
            self.node_ids = np.arange(1, len(self.nodes) + 1)
        if self.element_ids is None:
            self.element_ids = np.arange(1, len(self.elements) + 1)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def element_sizes(self) -> np.ndarray:
        """Square root of the element area."""
        return np.sqrt(element_areas(self))

    def validate(self) -> None:
        """Check ids, set references and positive Jacobians at Gauss points."""
        if len(np.unique(self.node_ids)) != self.n_nodes:
            raise MeshError("duplicate node ids")
        if len(np.unique(self.element_ids)) != self.n_elements:
            raise MeshError("duplicate element ids")
        if self.elements.min() < 0 or self.elements.max() >= self.n_nodes:
            raise MeshError("element references a missing node")
        for name, s in self.node_sets.items():
            if s.size and (s.min() < 0 or s.max() >= self.n_nodes):
                raise MeshError(f"node set {name!r} references a missing node")
        for name, s in self.element_sets.items():
            if s.size and (s.min() < 0 or s.max() >= self.n_elements):
                raise MeshError(f"element set {name!r} references a missing element")
        if self.seams.size and (self.seams.min() < 0 or self.seams.max() >= self.n_nodes):
            raise MeshError("seam references a missing node")
        detj = jacobian_determinants(self)
        if np.any(detj <= 0):
            bad = np.unique(np.nonzero(detj <= 0)[0])
            raise MeshError(f"non-positive Jacobian in {bad.size} elements, e.g. {self.element_ids[bad[:5]]}")

    def check_resolution(self, ell, region: np.ndarray | None = None, factor: float = 0.25) -> bool:
        """Warn when elements in ``region`` (element indices) exceed factor*ell."""
        ell = np.broadcast_to(np.asarray(ell, dtype=float), (self.n_elements,))
        idx = np.arange(self.n_elements) if region is None else np.asarray(region)
        h = self.element_sizes()[idx]
        ok = bool(np.all(h <= factor * ell[idx] * (1 + 1e-9)))
        if not ok:
            log.warning("mesh resolution: max h/ell = %.3f in refined region (limit %.3f)",
                        float(np.max(h / ell[idx])), factor)
        return ok


def shape_functions(xi: float, eta: float):
    N = 0.25 * np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                         (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)])
    dN = 0.25 * np.array([[-(1 - eta), -(1 - xi)],
                          [(1 - eta), -(1 + xi)],
                          [(1 + eta), (1 + xi)],
                          [-(1 + eta), (1 - xi)]])
    return N, dN


def jacobian_determinants(mesh: Mesh) -> np.ndarray:
    X = mesh.nodes[mesh.elements]
    out = np.empty((mesh.n_elements, 4))
    for q, (xi, eta) in enumerate(GAUSS_2X2):
        _, dN = shape_functions(xi, eta)
        J = np.einsum("eai,aj->eij", X, dN)
        out[:, q] = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return out


def element_areas(mesh: Mesh) -> np.ndarray:
    return jacobian_determinants(mesh).sum(axis=1)


def boundary_edges(mesh: Mesh) -> np.ndarray:
    """Element edges used by exactly one element, as (n, 2) node pairs in CCW order."""
    e = mesh.elements
    edges = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 3]], e[:, [3, 0]]])
    key = np.sort(edges, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return edges[counts[inv.ravel()] == 1]


def nodes_where(mesh: Mesh, predicate) -> np.ndarray:
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    return np.nonzero(predicate(x, y))[0]


def merge_meshes(a: Mesh, b: Mesh, tol: float = 1e-9, keep_apart=None) -> Mesh:
    """Glue two meshes by merging coincident nodes.

    ``keep_apart(x, y)`` marks positions that must stay duplicated; those pairs
    become seams. Sets with the same name are united.
    """
    scale = max(np.ptp(a.nodes), np.ptp(b.nodes), 1.0)
    ka = np.round(a.nodes / (tol * scale)).astype(np.int64)
    lookup = {tuple(k): i for i, k in enumerate(ka)}
    mapping = np.empty(b.n_nodes, dtype=int)
    new_nodes = []
    seams = [a.seams]
    n0 = a.n_nodes
    for j, k in enumerate(np.round(b.nodes / (tol * scale)).astype(np.int64)):
        i = lookup.get(tuple(k))
        x, y = b.nodes[j]
        if i is not None and not (keep_apart is not None and keep_apart(x, y)):
            mapping[j] = i
        else:
            mapping[j] = n0 + len(new_nodes)
            new_nodes.append(b.nodes[j])
            if i is not None:
                seams.append(np.array([[i, mapping[j]]]))
    nodes = np.vstack([a.nodes, np.array(new_nodes).reshape(-1, 2)])
    elements = np.vstack([a.elements, mapping[b.elements]])
    node_sets = dict(a.node_sets)
    for k, v in b.node_sets.items():
        node_sets[k] = np.unique(np.concatenate([node_sets.get(k, np.zeros(0, int)), mapping[v]]))
    element_sets = dict(a.element_sets)
    for k, v in b.element_sets.items():
        element_sets[k] = np.concatenate([element_sets.get(k, np.zeros(0, int)), v + a.n_elements])
    seams.append(mapping[b.seams] if b.seams.size else np.zeros((0, 2), int))
    return Mesh(nodes, elements, node_sets, element_sets, np.vstack(seams), list(a.tips))


def mirror_y(mesh: Mesh) -> Mesh:
    """Reflect about y = 0, restoring counter-clockwise element orientation."""
    nodes = mesh.nodes * np.array([1.0, -1.0])
    elements = mesh.elements[:, ::-1]
    tips = [CrackTip(t.x, -t.y, t.dx, -t.dy) for t in mesh.tips]
    return Mesh(nodes, elements, dict(mesh.node_sets), dict(mesh.element_sets), mesh.seams.copy(), tips)


def split_seam(mesh: Mesh, line_nodes: np.ndarray, side_elements: np.ndarray) -> Mesh:
    """Duplicate ``line_nodes`` and reconnect ``side_elements`` to the copies."""
    line_nodes = np.asarray(line_nodes, dtype=int)
    copies = np.arange(mesh.n_nodes, mesh.n_nodes + line_nodes.size)
    remap = np.arange(mesh.n_nodes)
    remap[line_nodes] = copies
    elements = mesh.elements.copy()
    elements[side_elements] = remap[elements[side_elements]]
    nodes = np.vstack([mesh.nodes, mesh.nodes[line_nodes]])
    seams = np.vstack([mesh.seams, np.column_stack([line_nodes, copies])])
    # copies inherit the set membership of their originals
    node_sets = {}
    for name, s in mesh.node_sets.items():
        hit = np.isin(line_nodes, s)
        node_sets[name] = np.concatenate([s, copies[hit]]) if hit.any() else s
    return Mesh(nodes, elements, node_sets, dict(mesh.element_sets), seams, list(mesh.tips))
