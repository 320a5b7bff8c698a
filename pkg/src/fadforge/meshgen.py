"""Structured quad mesh generators for the SENT specimen, boundary-layer
domains, cracked plates and pipe wall sectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import CrackTip, Mesh, MeshError, merge_meshes, mirror_y, split_seam


# --------------------------------------------------------------------------
# 1D spacing helpers
# --------------------------------------------------------------------------

def _graded(length: float, h: float, ratio: float, h_max: float) -> np.ndarray:
    """Increments growing from ``h`` by ``ratio`` (capped) that sum to ``length``."""
    if length <= 1e-12:
        return np.zeros(0)
    inc = []
    k = 0
    while sum(inc) < length - 1e-12:
        inc.append(min(h * ratio**k, h_max))
        k += 1
    inc = np.array(inc)
    excess = inc.sum() - length
    if len(inc) > 1 and excess > 0.5 * inc[-1]:
        inc = inc[:-1]
    return inc * (length / inc.sum())


def graded_axis(lo: float, hi: float, anchor: float, h: float, fine_lo: float, fine_hi: float,
                ratio: float = 1.2, h_max: float | None = None) -> np.ndarray:
    """Node coordinates on [lo, hi]: uniform ``h`` on [fine_lo, fine_hi] with a
    node exactly at ``anchor``, geometric grading outside."""
    if not lo <= fine_lo <= anchor <= fine_hi <= hi:
        raise MeshError("fine window must contain the anchor and lie inside the domain")
    h_max = h_max if h_max is not None else (hi - lo) / 4.0
    m = int(math.floor((anchor - fine_lo) / h + 1e-9))
    k = int(math.floor((fine_hi - anchor) / h + 1e-9))
    left = anchor - h * np.arange(m, 0, -1)
    right = anchor + h * np.arange(1, k + 1)
    core = np.concatenate([left, [anchor], right])
    gl = _graded(core[0] - lo, h, ratio, h_max)
    gr = _graded(hi - core[-1], h, ratio, h_max)
    xs = np.concatenate([core[0] - np.cumsum(gl)[::-1], core, core[-1] + np.cumsum(gr)])
    xs[0], xs[-1] = lo, hi
    return _merge_close(xs, 0.3 * h, keep=anchor)


def _merge_close(xs: np.ndarray, tol: float, keep: float | None = None) -> np.ndarray:
    out = [xs[0]]
    for x in xs[1:]:
        if x - out[-1] < tol:
            if keep is not None and abs(out[-1] - keep) < 1e-12:
                continue
            if len(out) > 1:
                out[-1] = x
                continue
        out.append(x)
    out = np.array(out)
    out[-1] = xs[-1]
    return out


def segmented_axis(breaks, h: float) -> np.ndarray:
    """Uniform spacing close to ``h`` between successive break points."""
    breaks = np.asarray(sorted(set(float(b) for b in breaks)))
    pts = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((b - a) / h - 1e-9)))
        pts.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(pts)


# --------------------------------------------------------------------------
# strip with 3:1 transitions
# --------------------------------------------------------------------------

def _strip(xs: np.ndarray, height: float, h_band: float, band_height: float,
           ratio: float = 1.3, min_columns: int = 6):
    """Half-strip [xs[0], xs[-1]] x [0, height] refined along y = 0.

    Rows of height ``h_band`` up to ``band_height``, then growing rows with
    3:1 coarsening transitions while the columns allow it. Returns nodes,
    elements and the index arrays of the bottom and top node lines.
    """
    if band_height >= height:
        raise MeshError("refined band is taller than the domain")
    n_band = max(1, int(round(band_height / h_band)))
    rows = [("r", h_band)] * n_band
    hx = h_band
    cols = len(xs) - 1
    dy = h_band
    y = n_band * h_band
    plan = []
    while y < height:
        if dy >= hx and cols // 3 >= 2 and cols >= min_columns:
            t = 1.5 * hx
            plan.append(("t", t))
            y += t
            hx *= 3.0
            cols = cols - 2 * (cols // 3)
            dy = 0.5 * hx
        else:
            dy = min(dy * ratio, hx)
            plan.append(("r", dy))
            y += dy
    total = sum(r[1] for r in plan)
    scale = (height - n_band * h_band) / total
    rows += [(kind, d * scale) for kind, d in plan]

    nodes = [np.column_stack([xs, np.zeros_like(xs)])]
    n_nodes = len(xs)
    line = np.arange(len(xs))
    line_x = xs.copy()
    bottom = line.copy()
    elements = []
    y = 0.0
    for kind, d in rows:
        y1 = y + d
        if kind == "r":
            new = np.arange(n_nodes, n_nodes + len(line))
            nodes.append(np.column_stack([line_x, np.full(len(line), y1)]))
            n_nodes += len(line)
            elements.append(np.column_stack([line[:-1], line[1:], new[1:], new[:-1]]))
            line = new
        else:
            ncol = len(line) - 1
            g = ncol // 3
            r = ncol - 3 * g
            # leftover columns (at the low-x end) stay unmerged
            top_x = np.concatenate([line_x[: r + 1], line_x[r + 3 :: 3]])
            top = np.arange(n_nodes, n_nodes + len(top_x))
            nodes.append(np.column_stack([top_x, np.full(len(top_x), y1)]))
            n_nodes += len(top_x)
            ym = y + 0.5 * d
            if r:
                elements.append(np.column_stack([line[:r], line[1 : r + 1], top[1 : r + 1], top[:r]]))
            gi = np.arange(g)
            b0 = line[r + 3 * gi]
            b1 = line[r + 3 * gi + 1]
            b2 = line[r + 3 * gi + 2]
            b3 = line[r + 3 * gi + 3]
            t0 = top[r + gi]
            t3 = top[r + gi + 1]
            pq_x = np.column_stack([line_x[r + 3 * gi + 1], line_x[r + 3 * gi + 2]]).ravel()
            pq = np.arange(n_nodes, n_nodes + 2 * g)
            nodes.append(np.column_stack([pq_x, np.full(2 * g, ym)]))
            n_nodes += 2 * g
            p, q = pq[0::2], pq[1::2]
            elements.append(np.column_stack([b0, b1, p, t0]))
            elements.append(np.column_stack([b1, b2, q, p]))
            elements.append(np.column_stack([b2, b3, t3, q]))
            elements.append(np.column_stack([p, q, t3, t0]))
            line = top
            line_x = top_x
        y = y1
    nodes = np.vstack(nodes)
    nodes[line, 1] = height
    return nodes, np.vstack(elements), bottom, line


# --------------------------------------------------------------------------
# SENT
# --------------------------------------------------------------------------

def generate_sent_mesh(W: float = 5.0, L: float = 50.0, a0: float = 1.5, h: float = 0.05,
                       window: tuple[float, float] | None = None, band_height: float | None = None,
                       half: bool = True, ratio: float = 1.25, h_max: float | None = None) -> Mesh:
    """Single-edge notched tension specimen with a seam crack on y = 0.

    The half model spans y in [0, L/2] with the crack faces on y = 0, x < a0.
    ``h`` is the element size in the refined window ``[a0 - window[0],
    a0 + window[1]]`` and band ``y < band_height``.

    Node sets: ``ligament`` (y=0, x>=a0), ``crack_face``, ``top``, ``bottom``
    (full model only), ``left``, ``right``. Element set ``refined``.
    """
    if not 0.0 < a0 < W:
        raise MeshError(f"crack length a0={a0} must lie in (0, W={W})")
    if h <= 0 or h > W / 4:
        raise MeshError("tip element size must be positive and well below W")
    if window is None:
        window = (min(a0, 10 * h), W - a0)
    band_height = band_height if band_height is not None else max(10 * h, min(window[1], W / 4))
    band_height = min(band_height, 0.45 * L)
    fine_lo = max(0.0, a0 - window[0])
    fine_hi = min(W, a0 + window[1])
    xs = graded_axis(0.0, W, a0, h, fine_lo, fine_hi, ratio=ratio, h_max=h_max or W / 8)
    nodes, elements, bottom, top = _strip(xs, 0.5 * L, h, band_height, ratio=ratio)
    x, y = nodes[:, 0], nodes[:, 1]
    tol = 1e-9 * W
    ligament = bottom[x[bottom] >= a0 - tol]
    face = bottom[x[bottom] < a0 - tol]
    c = nodes[elements].mean(axis=1)
    refined = np.nonzero((c[:, 1] < band_height) & (c[:, 0] > fine_lo) & (c[:, 0] < fine_hi))[0]
    sets = {"ligament": ligament, "crack_face": face, "top": top,
            "left": np.nonzero(np.abs(x) < tol)[0], "right": np.nonzero(np.abs(x - W) < tol)[0]}
    m = Mesh(nodes, elements, sets, {"refined": refined}, tips=[CrackTip(a0, 0.0, 1.0, 0.0)])
    if half:
        return m
    low = mirror_y(m)
    low.node_sets = {("bottom" if k == "top" else k): v for k, v in low.node_sets.items()}
    full = merge_meshes(m, low, keep_apart=lambda px, py: abs(py) < tol and px < a0 - tol)
    full.tips = [CrackTip(a0, 0.0, 1.0, 0.0)]
    full.node_sets.pop("ligament", None)
    full.node_sets["crack_face"] = np.unique(np.concatenate([face, full.seams.ravel()]))
    return full


def generate_boundary_layer_mesh(R: float, h: float, window: float, ratio: float = 1.25) -> Mesh:
    """Half domain [-R, R] x [0, R] around a tip at the origin, crack along x < 0.

    Node sets ``ligament`` (y=0, x>=0), ``crack_face`` and ``outer`` (the three
    far edges, where K-field displacements are applied).
    """
    if window >= R:
        raise MeshError("refined window must be smaller than the domain")
    xs = graded_axis(-R, R, 0.0, h, -min(4 * h, window / 4), window, ratio=ratio, h_max=R / 6)
    nodes, elements, bottom, top = _strip(xs, R, h, max(window / 2, 10 * h), ratio=ratio)
    x, y = nodes[:, 0], nodes[:, 1]
    tol = 1e-9 * R
    outer = np.nonzero((np.abs(x - R) < tol) | (np.abs(x + R) < tol) | (np.abs(y - R) < tol))[0]
    c = nodes[elements].mean(axis=1)
    refined = np.nonzero((c[:, 1] < window / 2) & (c[:, 0] > -4 * h) & (c[:, 0] < window))[0]
    sets = {"ligament": bottom[x[bottom] >= -tol], "crack_face": bottom[x[bottom] < -tol],
            "outer": outer}
    return Mesh(nodes, elements, sets, {"refined": refined}, tips=[CrackTip(0.0, 0.0, 1.0, 0.0)])


# --------------------------------------------------------------------------
# tensor grids
# --------------------------------------------------------------------------

def grid_mesh(xs: np.ndarray, ys: np.ndarray) -> Mesh:
    """Tensor-product grid; node (i, j) has index j*len(xs) + i."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    n0 = (j * nx + i).ravel()
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 1, n0 + nx])
    tol = 1e-12 * max(np.ptp(xs), np.ptp(ys))
    x, y = nodes[:, 0], nodes[:, 1]
    sets = {"left": np.nonzero(np.abs(x - xs[0]) < tol)[0], "right": np.nonzero(np.abs(x - xs[-1]) < tol)[0],
            "bottom": np.nonzero(np.abs(y - ys[0]) < tol)[0], "top": np.nonzero(np.abs(y - ys[-1]) < tol)[0]}
    return Mesh(nodes, elements, sets)


def generate_rectangle_mesh(Lx: float, Ly: float, nx: int = 1, ny: int = 1) -> Mesh:
    return grid_mesh(np.linspace(0.0, Lx, nx + 1), np.linspace(0.0, Ly, ny + 1))


def generate_center_crack_mesh(half_width: float, a: float, h: float, ratio: float = 1.2) -> Mesh:
    """Square plate [-b, b]^2 with a seam crack on y = 0, |x| < a."""
    if not 0 < a < half_width:
        raise MeshError("crack must lie inside the plate")
    win = min(a + 0.5 * a, half_width)
    xs = graded_axis(-half_width, half_width, a, h, -win, win, ratio=ratio, h_max=half_width / 5)
    xs = np.unique(np.concatenate([xs, [-a]]))
    ys = graded_axis(-half_width, half_width, 0.0, h, -0.5 * a, 0.5 * a, ratio=ratio, h_max=half_width / 5)
    m = grid_mesh(xs, ys)
    x, y = m.nodes[:, 0], m.nodes[:, 1]
    tol = 1e-9 * half_width
    line = np.nonzero((np.abs(y) < tol) & (np.abs(x) < a - tol))[0]
    c = m.centroids()
    upper = np.nonzero(c[:, 1] > 0)[0]
    m = split_seam(m, line, upper)
    m.tips = [CrackTip(a, 0.0, 1.0, 0.0), CrackTip(-a, 0.0, -1.0, 0.0)]
    return m


# --------------------------------------------------------------------------
# pipe wall sector
# --------------------------------------------------------------------------

@dataclass
class DefectSpec:
    """Straight crack in the (arc length s, depth rho) coordinates of the wall.

    ``rho`` is measured from the inner surface. ``angle_deg`` is the tilt from
    the radial direction (positive towards +s as rho increases). For surface
    cracks ``s`` locates the mouth; for embedded cracks it locates the centre,
    with ``rho_center`` its depth.
    """

    name: str
    surface: str          # inner | outer | embedded
    s: float
    length: float
    angle_deg: float = 0.0
    rho_center: float | None = None

    def __post_init__(self):
        if self.surface not in ("inner", "outer", "embedded"):
            raise MeshError(f"unknown defect surface {self.surface!r}")
        if not self.length > 0:
            raise MeshError("defect length must be positive")
        if not -80.0 < self.angle_deg < 80.0:
            raise MeshError("defect tilt must lie within +-80 degrees of radial")

    def rho_range(self, t: float) -> tuple[float, float, float]:
        """(rho_ref, rho_lo, rho_hi): depth where the defect sits at ``s`` and its extent."""
        dr = self.length * math.cos(math.radians(self.angle_deg))
        if self.surface == "inner":
            ref, lo, hi = 0.0, 0.0, dr
        elif self.surface == "outer":
            ref, lo, hi = t, t - dr, t
        else:
            if self.rho_center is None:
                raise MeshError("embedded defect needs rho_center")
            ref, lo, hi = self.rho_center, self.rho_center - dr / 2, self.rho_center + dr / 2
        if lo < -1e-12 or hi > t + 1e-12 or (self.surface == "embedded" and (lo <= 0 or hi >= t)):
            raise MeshError(f"defect {self.name!r} does not fit inside the wall")
        return ref, lo, hi


@dataclass(frozen=True)
class VGroove:
    """Single-V butt weld: fusion line at |s| = root_half_width + rho tan(bevel)."""

    root_half_width: float = 1.0
    bevel_deg: float = 30.0
    haz_width: float = 2.0

    def fusion_s(self, rho):
        return self.root_half_width + np.asarray(rho) * math.tan(math.radians(self.bevel_deg))


def defect_preset(name: str, length: float, t: float = 12.7, groove: VGroove = VGroove(),
                  base_offset: float = 25.0) -> DefectSpec:
    """Named defect locations A-F relative to a V-groove weld centred at s = 0.

    A/B: radial surface cracks in base metal (inner/outer). C: root toe along
    the fusion line. D: embedded mid-wall on the fusion line. E: cap toe along
    the fusion line. F: inner-surface crack inside the HAZ, parallel to the
    fusion line.
    """
    bevel = groove.bevel_deg
    b = groove.root_half_width
    key = name.upper()
    if key == "A":
        return DefectSpec("A", "inner", base_offset, length, 0.0)
    if key == "B":
        return DefectSpec("B", "outer", base_offset, length, 0.0)
    if key == "C":
        return DefectSpec("C", "inner", b, length, bevel)
    if key == "D":
        return DefectSpec("D", "embedded", float(groove.fusion_s(t / 2)), length, bevel, rho_center=t / 2)
    if key == "E":
        return DefectSpec("E", "outer", float(groove.fusion_s(t)), length, bevel)
    if key == "F":
        return DefectSpec("F", "inner", b + 0.5 * groove.haz_width, length, bevel)
    raise MeshError(f"unknown defect preset {name!r}")


def pipe_local_coordinates(points: np.ndarray, OD: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Map physical (x, y) to (arc length at mid-wall, depth from inner surface)."""
    r_in = OD / 2 - t
    r_mid = OD / 2 - t / 2
    r = np.hypot(points[:, 0], points[:, 1])
    theta = np.arctan2(points[:, 0], points[:, 1])
    return theta * r_mid, r - r_in


def generate_pipe_section_mesh(OD: float = 762.0, t: float = 12.7, defect: DefectSpec | None = None,
                               h: float = 0.25, half_arc: float = 60.0, pad: float = 3.0,
                               ratio: float = 1.2) -> Mesh:
    """Plane-strain ring sector of the pipe wall, centred on the weld at s = 0.

    The grid is sheared near the defect so that tilted cracks follow grid
    lines. Node sets: ``inner``, ``outer``, ``left``, ``right``.
    """
    if defect is None:
        raise MeshError("a defect specification is required")
    if not 0 < t < OD / 2:
        raise MeshError("invalid wall thickness")
    ref, lo, hi = defect.rho_range(t)
    tan_a = math.tan(math.radians(defect.angle_deg))
    # s of the defect column at rho = ref
    s0 = defect.s
    reach = defect.length * abs(math.sin(math.radians(defect.angle_deg))) + pad
    blend = max(2.5 * t * abs(tan_a), 4 * h) if tan_a else 0.0
    if abs(s0) + reach + blend + 4 * h > half_arc:
        raise MeshError("sector too narrow for the defect")
    sig = graded_axis(-half_arc, half_arc, s0, h, s0 - reach, s0 + reach, ratio=ratio, h_max=t / 3)
    rho = segmented_axis([0.0, lo, hi, t], h)
    m = grid_mesh(sig, rho)
    S, P = m.nodes[:, 0].copy(), m.nodes[:, 1].copy()
    if tan_a:
        d = np.abs(S - s0)
        w = np.where(d <= reach, 1.0,
                     np.where(d >= reach + blend, 0.0, 0.5 * (1 + np.cos(np.pi * (d - reach) / max(blend, 1e-12)))))
        S = S + (P - ref) * tan_a * w
    sets = dict(m.node_sets)
    sets["inner"] = sets.pop("bottom")
    sets["outer"] = sets.pop("top")
    tol = 1e-9 * t
    on_col = np.abs(m.nodes[:, 0] - s0) < tol
    if defect.surface == "inner":
        line = np.nonzero(on_col & (P < hi - tol))[0]
    elif defect.surface == "outer":
        line = np.nonzero(on_col & (P > lo + tol))[0]
    else:
        line = np.nonzero(on_col & (P > lo + tol) & (P < hi - tol))[0]
    c_sig = m.nodes[m.elements, 0].mean(axis=1)
    touches = np.isin(m.elements, line).any(axis=1)
    side = np.nonzero(touches & (c_sig > s0))[0]

    r_in = OD / 2 - t
    r_mid = OD / 2 - t / 2

    def to_xy(s, p):
        th = s / r_mid
        r = r_in + p
        return np.column_stack([r * np.sin(th), r * np.cos(th)])

    m.nodes = to_xy(S, P)
    m.node_sets = sets
    m = split_seam(m, line, side)
    tips = []
    ends = {"inner": [hi], "outer": [lo], "embedded": [lo, hi]}[defect.surface]
    for p_tip in ends:
        s_tip = s0 + (p_tip - ref) * tan_a
        inward = -1.0 if p_tip == lo and defect.surface != "inner" else 1.0
        if defect.surface == "embedded":
            inward = 1.0 if p_tip == hi else -1.0
        a = to_xy(np.array([s_tip]), np.array([p_tip]))[0]
        dp = 1e-3 * inward
        b = to_xy(np.array([s_tip + dp * tan_a]), np.array([p_tip + dp]))[0]
        d = (b - a) / np.linalg.norm(b - a)
        tips.append(CrackTip(a[0], a[1], d[0], d[1]))
    m.tips = tips
    c = m.centroids()
    s_c, p_c = pipe_local_coordinates(c, OD, t)
    m.element_sets["refined"] = np.nonzero(np.abs(s_c - (s0 + (p_c - ref) * tan_a)) < reach)[0]
    return m
