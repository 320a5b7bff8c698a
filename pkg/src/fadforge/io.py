"""Text file formats: meshes, property-field maps, FAD tables, field dumps,
run summaries and INI run configurations.

Every file starts with a ``# FADFORGE-v1 <kind>`` header line. Floats are
written with ``repr`` so that a write/read cycle is exact.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import Constraints, QuadSpace
from .fad import AssessmentPoint, FailureAssessmentLine, FALOption, LoadingPath
from .material import SQ2, DomainError, HydrogenParams, MaterialParams
from .mesh import CrackTip, Mesh, MeshError
from .meshgen import VGroove, pipe_local_coordinates

FORMAT = "FADFORGE-v1"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _header(kind: str) -> str:
    return f"# {FORMAT} {kind}\n"


def _check_header(line: str, kind: str, path) -> None:
    parts = line.strip().lstrip("#").split()
    if len(parts) < 2 or parts[0] != FORMAT or parts[1] != kind:
        raise FormatError(f"{path}: expected '# {FORMAT} {kind}' header, got {line.strip()!r}")


def _data_lines(path):
    """Non-empty lines with comments stripped, plus the raw first line."""
    try:
        with open(path) as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not raw:
        raise FormatError(f"{path}: empty file")
    body = []
    for ln in raw[1:]:
        s = ln.split("#", 1)[0].strip()
        if s:
            body.append(s)
    return raw[0], body


def _open_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------
# meshes
# --------------------------------------------------------------------------

def write_mesh(path, mesh: Mesh) -> None:
    """Block format: NODES, ELEMENTS, NSET, ELSET, SEAM and TIP sections."""
    nid, eid = mesh.node_ids, mesh.element_ids
    with _open_write(path) as fh:
        fh.write(_header("mesh"))
        fh.write(f"NODES {mesh.n_nodes}\n")
        for i, (x, y) in zip(nid, mesh.nodes):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
        fh.write(f"ELEMENTS {mesh.n_elements}\n")
        for i, conn in zip(eid, mesh.elements):
            fh.write(f"{i} " + " ".join(str(nid[c]) for c in conn) + "\n")
        for name, ids in sorted(mesh.node_sets.items()):
            fh.write(f"NSET {name} {ids.size}\n")
            fh.write(" ".join(str(nid[k]) for k in ids) + "\n")
        for name, ids in sorted(mesh.element_sets.items()):
            fh.write(f"ELSET {name} {ids.size}\n")
            fh.write(" ".join(str(eid[k]) for k in ids) + "\n")
        fh.write(f"SEAM {len(mesh.seams)}\n")
        for a, b in mesh.seams:
            fh.write(f"{nid[a]} {nid[b]}\n")
        for tip in mesh.tips:
            fh.write("TIP " + " ".join(repr(float(v)) for v in (tip.x, tip.y, tip.dx, tip.dy)) + "\n")


def read_mesh(path) -> Mesh:
    first, lines = _data_lines(path)
    _check_header(first, "mesh", path)
    nodes, nid, elems, eid = [], [], [], []
    nsets, esets, seams, tips = {}, {}, [], []
    i = 0

    def take(count):
        nonlocal i
        out = lines[i:i + count]
        if len(out) < count:
            raise FormatError(f"{path}: truncated block")
        i += count
        return out

    try:
        while i < len(lines):
            head = lines[i].split()
            i += 1
            key = head[0].upper()
            if key == "NODES":
                for ln in take(int(head[1])):
                    k, x, y = ln.split()
                    nid.append(int(k))
                    nodes.append((float(x), float(y)))
            elif key == "ELEMENTS":
                for ln in take(int(head[1])):
                    v = [int(s) for s in ln.split()]
                    eid.append(v[0])
                    elems.append(v[1:5])
            elif key in ("NSET", "ELSET"):
                count = int(head[2])
                ids = []
                while len(ids) < count:
                    ids.extend(int(s) for s in take(1)[0].split())
                (nsets if key == "NSET" else esets)[head[1]] = ids
            elif key == "SEAM":
                seams = [tuple(int(s) for s in ln.split()) for ln in take(int(head[1]))]
            elif key == "TIP":
                tips.append(CrackTip(*(float(s) for s in head[1:5])))
            else:
                raise FormatError(f"{path}: unknown block {head[0]!r}")
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed mesh file ({exc})") from exc

    nmap = {k: j for j, k in enumerate(nid)}
    emap = {k: j for j, k in enumerate(eid)}
    if len(nmap) != len(nid) or len(emap) != len(eid):
        raise MeshError(f"{path}: duplicate ids")

    def resolve(ids, table, what):
        try:
            return np.array([table[k] for k in ids], dtype=int)
        except KeyError as exc:
            raise MeshError(f"{path}: {what} id {exc.args[0]} does not exist") from None

    mesh = Mesh(np.array(nodes, dtype=float).reshape(-1, 2),
                resolve(np.ravel(elems), nmap, "node").reshape(-1, 4),
                {k: resolve(v, nmap, "node") for k, v in nsets.items()},
                {k: resolve(v, emap, "element") for k, v in esets.items()},
                resolve(np.ravel(seams), nmap, "node").reshape(-1, 2),
                tips, np.array(nid), np.array(eid))
    mesh.validate()
    return mesh


# --------------------------------------------------------------------------
# property fields
# --------------------------------------------------------------------------

_PF_COLUMNS = ("sigma_y0", "Gc", "x_b", "s_xx", "s_yy", "s_zz", "s_xy", "eps_p_eq")


@dataclass
class PropertyFieldMap:
    """Per-element overrides keyed by external element id.

    Each entry of ``values`` maps a column name to a dict ``{element_id: value}``;
    missing entries keep the base material. The residual stress is stored as
    in-plane components plus the out-of-plane normal stress.
    """

    values: dict[str, dict[int, float]] = field(default_factory=dict)

    def __post_init__(self):
        for k in self.values:
            if k not in _PF_COLUMNS:
                raise FormatError(f"unknown property column {k!r}")
        xb = self.values.get("x_b", {})
        if any(not 0.0 <= v <= 1.0 for v in xb.values()):
            raise DomainError("bainite fraction must lie in [0, 1]")
        for k in ("sigma_y0", "Gc"):
            if any(not v > 0 for v in self.values.get(k, {}).values()):
                raise DomainError(f"{k} overrides must be positive")
        if any(v < 0 for v in self.values.get("eps_p_eq", {}).values()):
            raise DomainError("initial equivalent plastic strain must be non-negative")

    @property
    def empty(self) -> bool:
        return not any(self.values.values())

    def element_ids(self) -> set[int]:
        out: set[int] = set()
        for d in self.values.values():
            out.update(d)
        return out

    def has_residual_stress(self) -> bool:
        return any(self.values.get(k) for k in ("s_xx", "s_yy", "s_zz", "s_xy"))

    def array(self, mesh: Mesh, name: str, default) -> np.ndarray:
        pos = {int(k): j for j, k in enumerate(mesh.element_ids)}
        out = np.broadcast_to(np.asarray(default, dtype=float), (mesh.n_elements,)).copy()
        for k, v in self.values.get(name, {}).items():
            out[pos[k]] = v
        return out

    def validate(self, mesh: Mesh) -> None:
        known = set(int(k) for k in mesh.element_ids)
        missing = sorted(self.element_ids() - known)
        if missing:
            raise MeshError(f"property field references missing elements, e.g. {missing[:5]}")

    def residual_stress(self, mesh: Mesh) -> np.ndarray:
        """(ne, 4) Mandel residual stress."""
        s = np.column_stack([self.array(mesh, k, 0.0) for k in ("s_xx", "s_yy", "s_zz", "s_xy")])
        s[:, 3] *= SQ2
        return s


def write_property_field(path, pf: PropertyFieldMap) -> None:
    ids = sorted(pf.element_ids())
    with _open_write(path) as fh:
        fh.write(_header("property-field"))
        w = csv.writer(fh)
        w.writerow(("element",) + _PF_COLUMNS)
        for k in ids:
            row = [k]
            for c in _PF_COLUMNS:
                v = pf.values.get(c, {}).get(k)
                row.append("" if v is None else repr(float(v)))
            w.writerow(row)


def load_property_field(path) -> PropertyFieldMap:
    """Read a property-field CSV. Blank cells mean "no override"."""
    first, lines = _data_lines(path)
    _check_header(first, "property-field", path)
    if not lines:
        return PropertyFieldMap()
    rows = list(csv.reader(lines))
    head = [h.strip() for h in rows[0]]
    if not head or head[0] != "element":
        raise FormatError(f"{path}: first column must be 'element'")
    unknown = [h for h in head[1:] if h not in _PF_COLUMNS]
    if unknown:
        raise FormatError(f"{path}: unknown columns {unknown}")
    values: dict[str, dict[int, float]] = {h: {} for h in head[1:]}
    for r in rows[1:]:
        if len(r) != len(head):
            raise FormatError(f"{path}: row {r} has {len(r)} fields, expected {len(head)}")
        try:
            k = int(r[0])
            for h, cell in zip(head[1:], r[1:]):
                if cell.strip():
                    values[h][k] = float(cell)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return PropertyFieldMap({h: d for h, d in values.items() if d})


def _compliance(sig, E, nu):
    """Isotropic elastic strain for Mandel stresses (plane-strain 3D vector)."""
    tr = sig[:, :3].sum(axis=1)
    eps = ((1.0 + nu) / E)[:, None] * sig
    eps[:, :3] -= (nu / E * tr)[:, None]
    return eps


def _elastic_D(E, nu):
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    D = np.zeros((E.size, 4, 4))
    D[:, :3, :3] = lam[:, None, None]
    for i in range(4):
        D[:, i, i] += 2 * mu
    return D


@dataclass
class EquilibratedResidual:
    sigma: np.ndarray          # (ne, 4, 4) re-equilibrated stress at Gauss points
    eigenstrain: np.ndarray    # (ne, 4)
    correction: float          # ||sigma - sigma_in|| / ||sigma_in|| (L2 over the mesh)


def _tied_mesh(mesh: Mesh) -> Mesh:
    """Copy of ``mesh`` with crack seams closed; freed seam nodes keep no element."""
    rep = np.arange(mesh.n_nodes)
    rep[mesh.seams[:, 1]] = mesh.seams[:, 0]
    return Mesh(mesh.nodes, rep[mesh.elements])


def _balance(mesh: Mesh, s0: np.ndarray, D: np.ndarray, constraints: Constraints):
    """One elastic solve that restores equilibrium of the initial stress ``s0``."""
    space = QuadSpace(mesh, bbar=True)
    K = space.stiffness(D)
    orphan = np.setdiff1d(np.arange(mesh.n_nodes), mesh.elements)
    if orphan.size:
        d = np.zeros(2 * mesh.n_nodes)
        d[2 * orphan] = d[2 * orphan + 1] = K.diagonal().mean()
        K = K + sp.diags(d)
    T, _ = constraints.build(mesh.nodes)
    r = T.T @ space.internal_force(s0)
    q = spla.splu((T.T @ K @ T).tocsc(), permc_spec="MMD_AT_PLUS_A").solve(-r)
    sig = s0 + np.einsum("eqij,eqj->eqi", D, space.strain(T @ q))
    num = space.integrate(np.einsum("eqi,eqi->eq", sig - s0, sig - s0))
    den = space.integrate(np.einsum("eqi,eqi->eq", s0, s0))
    return sig, (math.sqrt(num / den) if den > 0 else 0.0)


def equilibrate_residual_stress(mesh: Mesh, sigma_res: np.ndarray, E, nu, constraints: Constraints,
                                max_correction: float = 0.10) -> EquilibratedResidual:
    """Convert an imported residual stress into an eigenstrain and re-balance it.

    The eigenstrain ``-C^-1 sigma_res`` is applied with the prescribed
    displacements held at zero and one linear elastic solve restores
    equilibrium. The correction that judges the input is measured with crack
    seams closed: relieving the crack faces is part of the analysis, not an
    imbalance of the imported field. A correction above ``max_correction``
    is rejected.
    """
    E = np.broadcast_to(np.asarray(E, float), (mesh.n_elements,))
    nu = np.broadcast_to(np.asarray(nu, float), (mesh.n_elements,))
    eig = -_compliance(sigma_res, E, nu)
    D = np.repeat(_elastic_D(E, nu)[:, None], 4, axis=1)
    s0 = np.repeat(sigma_res[:, None, :], 4, axis=1)
    sig, corr = _balance(mesh, s0, D, constraints)
    if mesh.seams.size:
        _, corr = _balance(_tied_mesh(mesh), s0, D, constraints)
    if corr > max_correction:
        raise DomainError(f"residual stress field is unbalanced: equilibrium correction {corr:.1%} "
                          f"exceeds {max_correction:.0%}")
    # the solver recovers the balancing displacement from the eigenstrain itself
    return EquilibratedResidual(sig, eig, corr)


def apply_property_field(pf: PropertyFieldMap, mesh: Mesh, material, constraints: Constraints | None = None):
    """Return ``(material_field, correction)`` with the overrides applied.

    Residual stresses are re-equilibrated against ``constraints`` and carried
    as an eigenstrain; ``correction`` is the relative equilibrium correction
    (0 when no residual stress is given).
    """
    pf.validate(mesh)
    changes = {}
    for name in ("sigma_y0", "Gc"):
        if pf.values.get(name):
            changes[name] = pf.array(mesh, name, getattr(material, name))
    if pf.values.get("x_b"):
        base = material.x_b if material.x_b is not None else 0.0
        changes["x_b"] = pf.array(mesh, "x_b", base)
    if pf.values.get("eps_p_eq"):
        changes["eps_p_eq0"] = pf.array(mesh, "eps_p_eq", 0.0)
    corr = 0.0
    if pf.has_residual_stress():
        if constraints is None:
            raise DomainError("residual stresses need the run constraints for re-equilibration")
        res = equilibrate_residual_stress(mesh, pf.residual_stress(mesh), material.E, material.nu, constraints)
        changes["eigenstrain"] = res.eigenstrain
        corr = res.correction
    return (material.copy_with(**changes) if changes else material), corr


def synthetic_weld_field(mesh: Mesh, OD: float, t: float, base: MaterialParams,
                         groove: VGroove = VGroove(), yield_increase: float = 0.40,
                         haz_bainite: float = 0.6, residual_amplitude: float = 0.4,
                         residual_width: float | None = None,
                         weld_Gc: float | None = None) -> PropertyFieldMap:
    """Parametric V-groove weld on a pipe-section mesh centred at s = 0.

    Weld metal is fully bainitic, the HAZ band partially. Both have the yield
    stress raised by ``yield_increase``. The residual hoop stress
    ``A cos(2 pi rho / t) exp(-(s/w)^2)`` has zero through-wall force and moment,
    tensile at both surfaces.
    """
    s, rho = pipe_local_coordinates(mesh.centroids(), OD, t)
    fus = groove.fusion_s(rho)
    weld = np.abs(s) <= fus
    haz = ~weld & (np.abs(s) <= fus + groove.haz_width)
    ids = [int(k) for k in mesh.element_ids]
    vals: dict[str, dict[int, float]] = {"x_b": {}, "sigma_y0": {}}
    for j, k in enumerate(ids):
        if weld[j] or haz[j]:
            vals["x_b"][k] = 1.0 if weld[j] else haz_bainite
            vals["sigma_y0"][k] = base.sigma_y0 * (1.0 + yield_increase)
            if weld_Gc is not None:
                vals.setdefault("Gc", {})[k] = weld_Gc
    if residual_amplitude:
        w = residual_width or 3.0 * t
        amp = residual_amplitude * base.sigma_y0
        hoop = amp * np.cos(2 * np.pi * rho / t) * np.exp(-(s / w) ** 2)
        c = mesh.centroids()
        th = np.arctan2(c[:, 0], c[:, 1])
        e = np.column_stack([np.cos(th), -np.sin(th)])     # hoop unit vector
        vals["s_xx"] = {k: float(hoop[j] * e[j, 0] ** 2) for j, k in enumerate(ids)}
        vals["s_yy"] = {k: float(hoop[j] * e[j, 1] ** 2) for j, k in enumerate(ids)}
        vals["s_xy"] = {k: float(hoop[j] * e[j, 0] * e[j, 1]) for j, k in enumerate(ids)}
    return PropertyFieldMap(vals)


# --------------------------------------------------------------------------
# FAD tables
# --------------------------------------------------------------------------

@dataclass
class FADTable:
    """Everything drawn on one FAD: lines, loading paths and points."""

    fals: dict[str, FailureAssessmentLine] = field(default_factory=dict)
    paths: dict[str, LoadingPath] = field(default_factory=dict)
    points: list[AssessmentPoint] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def write_fad_csv(path, table: FADTable) -> None:
    """Blocks ``[fal NAME]``, ``[path NAME]`` and ``[points]``; metadata as JSON comments."""
    with _open_write(path) as fh:
        fh.write(_header("fad"))
        if table.meta:
            fh.write("#meta " + json.dumps(table.meta, sort_keys=True) + "\n")
        for name in sorted(table.fals):
            fal = table.fals[name]
            fh.write(f"[fal {name}]\n")
            fh.write("#info " + json.dumps({"option": fal.option.value, "Lr_max": fal.Lr_max,
                                           "provenance": fal.provenance}, sort_keys=True) + "\n")
            fh.write("Lr,f\n")
            for a, b in zip(fal.Lr, fal.f):
                fh.write(f"{float(a)!r},{float(b)!r}\n")
        for name in sorted(table.paths):
            p = table.paths[name]
            fh.write(f"[path {name}]\n")
            fh.write("#info " + json.dumps({"failure_index": p.failure_index}) + "\n")
            fh.write("label,Lr,Kr,load\n")
            for pt in p.points:
                fh.write(f"{pt.label},{float(pt.Lr)!r},{float(pt.Kr)!r},{float(pt.load)!r}\n")
        fh.write("[points]\n")
        fh.write("label,Lr,Kr,load\n")
        for pt in sorted(table.points, key=lambda q: (q.label, q.Lr, q.Kr)):
            fh.write(f"{pt.label},{float(pt.Lr)!r},{float(pt.Kr)!r},{float(pt.load)!r}\n")


def read_fad_csv(path) -> FADTable:
    try:
        raw = Path(path).read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not raw:
        raise FormatError(f"{path}: empty file")
    _check_header(raw[0], "fad", path)
    table = FADTable()
    block = None
    info: dict = {}
    rows: list[list[str]] = []

    def flush():
        if block is None:
            return
        kind, name = block
        if kind == "fal":
            arr = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
            table.fals[name] = FailureAssessmentLine(FALOption(info["option"]), arr[:, 0], arr[:, 1],
                                                     float(info["Lr_max"]), info.get("provenance", {}))
        else:
            pts = [AssessmentPoint(float(r[1]), float(r[2]), r[0], float(r[3])) for r in rows]
            if kind == "path":
                table.paths[name] = LoadingPath(pts, info.get("failure_index"))
            else:
                table.points = pts

    try:
        for ln in raw[1:]:
            s = ln.strip()
            if not s:
                continue
            if s.startswith("#meta "):
                table.meta = json.loads(s[6:])
            elif s.startswith("#info "):
                info = json.loads(s[6:])
            elif s.startswith("#"):
                continue
            elif s.startswith("["):
                flush()
                parts = s.strip("[]").split(None, 1)
                block = (parts[0], parts[1] if len(parts) > 1 else "")
                info, rows = {}, []
            elif s.startswith(("Lr,", "label,")):
                continue
            else:
                rows.append(s.split(","))
        flush()
    except (ValueError, KeyError, IndexError) as exc:
        raise FormatError(f"{path}: malformed FAD table ({exc})") from exc
    return table


# --------------------------------------------------------------------------
# fields and summaries
# --------------------------------------------------------------------------

def write_field_csv(path, mesh: Mesh, state, space: QuadSpace | None = None) -> None:
    """Nodal displacement, phase field, concentration and projected stress/plastic strain."""
    space = space or QuadSpace(mesh)
    sig = space.nodal_projection(state.sigma[..., 0]), space.nodal_projection(state.sigma[..., 1])
    sxy = space.nodal_projection(state.sigma[..., 3] / SQ2)
    p = space.nodal_projection(state.p)
    u = state.u.reshape(-1, 2)
    with _open_write(path) as fh:
        fh.write(_header("field"))
        fh.write(f"# step={state.step} lam={float(state.lam)!r} load={float(state.load)!r}\n")
        w = csv.writer(fh)
        w.writerow(["node", "x", "y", "ux", "uy", "phi", "C", "sxx", "syy", "sxy", "eps_p_eq"])
        for i in range(mesh.n_nodes):
            w.writerow([int(mesh.node_ids[i])] + [repr(float(v)) for v in (
                mesh.nodes[i, 0], mesh.nodes[i, 1], u[i, 0], u[i, 1], state.phi[i], state.C[i],
                sig[0][i], sig[1][i], sxy[i], p[i])])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_summary(path, summary: dict) -> None:
    """Structured run summary; always carries ``format`` and ``failed`` keys."""
    data = {"format": FORMAT, **_jsonable(summary)}
    data.setdefault("failed", False)
    with _open_write(path) as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read summary {path}: {exc}") from exc
    if data.get("format") != FORMAT:
        raise FormatError(f"{path}: not a {FORMAT} summary")
    return data


def output_root(default: str = "fadforge_out") -> Path:
    """Output directory from ``FADFORGE_OUT`` or ``default``."""
    return Path(os.environ.get("FADFORGE_OUT", default))


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------

GEOMETRIES = ("sent", "pipe", "custom")


@dataclass
class RunConfig:
    """INI run configuration.

    Sections: ``[run]`` (geometry, out, mesh file), ``[material]``,
    ``[hydrogen]``, ``[solver]``, ``[mesh]``, ``[sweep]`` and ``[bc]``. Values
    in ``[mesh]``, ``[sweep]`` and ``[bc]`` are free-form and parsed by the
    campaign that uses them.
    """

    geometry: str = "sent"
    out: str = "fadforge_out"
    mesh_file: str | None = None
    property_field: str | None = None
    material: MaterialParams = field(default_factory=MaterialParams)
    hydrogen: HydrogenParams = field(default_factory=HydrogenParams)
    solver: dict = field(default_factory=dict)
    mesh: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    bc: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise FormatError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        if self.geometry == "custom" and not self.mesh_file:
            raise FormatError("custom geometry needs run.mesh_file")
        from .fem import SolverConfig
        known = {f.name for f in fields(SolverConfig)}
        bad = set(self.solver) - known
        if bad:
            raise FormatError(f"unknown solver keys: {sorted(bad)}")
        SolverConfig(**self.solver)

    def solver_config(self):
        from .fem import SolverConfig
        return SolverConfig(**self.solver)


def _parse_value(s: str):
    s = s.strip()
    if "," in s:
        return [_parse_value(x) for x in s.split(",") if x.strip()]
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _format_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(_format_value(x) for x in v) + ("," if len(v) == 1 else "")
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _typed(cls, section: dict, name: str):
    known = {f.name: f for f in fields(cls)}
    bad = set(section) - set(known)
    if bad:
        raise FormatError(f"unknown keys in [{name}]: {sorted(bad)}")
    out = {}
    for k, v in section.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise FormatError(f"[{name}] {k} must be a number, got {v!r}")
        out[k] = float(v)
    return cls(**out)


def load_run_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    first = text.splitlines()[0] if text else ""
    _check_header(first, "config", path)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise FormatError(f"{path}: {exc}") from exc
    allowed = {"run", "material", "hydrogen", "solver", "mesh", "sweep", "bc"}
    bad = set(cp.sections()) - allowed
    if bad:
        raise FormatError(f"{path}: unknown sections {sorted(bad)}")
    sec = {s: {k: _parse_value(v) for k, v in cp.items(s)} for s in cp.sections()}
    run = sec.get("run", {})
    bad = set(run) - {"geometry", "out", "mesh_file", "property_field"}
    if bad:
        raise FormatError(f"unknown keys in [run]: {sorted(bad)}")
    try:
        return RunConfig(
            geometry=str(run.get("geometry", "sent")),
            out=str(run.get("out", "fadforge_out")),
            mesh_file=run.get("mesh_file"),
            property_field=run.get("property_field"),
            material=_typed(MaterialParams, sec.get("material", {}), "material"),
            hydrogen=_typed(HydrogenParams, sec.get("hydrogen", {}), "hydrogen"),
            solver=sec.get("solver", {}),
            mesh=sec.get("mesh", {}),
            sweep=sec.get("sweep", {}),
            bc=sec.get("bc", {}),
        )
    except TypeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_run_config(path, cfg: RunConfig) -> None:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    run = {"geometry": cfg.geometry, "out": cfg.out}
    if cfg.mesh_file:
        run["mesh_file"] = cfg.mesh_file
    if cfg.property_field:
        run["property_field"] = cfg.property_field
    cp["run"] = run
    cp["material"] = {f.name: repr(float(getattr(cfg.material, f.name))) for f in fields(MaterialParams)}
    cp["hydrogen"] = {f.name: repr(float(getattr(cfg.hydrogen, f.name))) for f in fields(HydrogenParams)}
    for name in ("solver", "mesh", "sweep", "bc"):
        cp[name] = {k: _format_value(v) for k, v in getattr(cfg, name).items()}
    with _open_write(path) as fh:
        fh.write(_header("config"))
        cp.write(fh)
