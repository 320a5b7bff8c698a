"""Reproducible simulation campaigns: SENT virtual FAL sweeps in air and
hydrogen, the transition flaw-size sweep, boundary-layer R-curves and pipeline
defect campaigns.

Campaigns run simulations one after the other; each result is isolated, so a
solver abort is recorded and the sweep continues. Outputs are sorted before
they are written, which makes repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assembly import Constraints
from .fad import (AssessmentPoint, FailureAssessmentLine, LoadingPath, cutoff_lr_max,
                  required_safety_factor, sent_geometry_factor, sent_sif, sent_yield_load,
                  thin_wall_pressure, toughness_from_Gc)
from .fem import (HydrogenCoupling, MaterialField, SimulationAbort, Simulation, SolverConfig,
                  SolverError, limit_load_analysis, reaction)
from .fracture import default_domains, interaction_integral_k, mixed_mode_keq, outer_boundary_local
from .hydrogen import BAINITIC, FERRITIC_PEARLITIC, DegradationLaw, DiffusionBC, blend_degradation
from .io import (FADTable, PropertyFieldMap, apply_property_field, synthetic_weld_field,
                 write_fad_csv, write_summary)
from .material import (DomainError, HydrogenParams, MaterialParams, ReturnMappingError,
                       homogeneous_1d_response, length_scale_for_ductility, sievert_concentration)
from .mesh import Mesh, MeshError, boundary_edges
from .meshgen import (DefectSpec, VGroove, defect_preset, generate_boundary_layer_mesh,
                      generate_pipe_section_mesh, generate_sent_mesh)

log = logging.getLogger(__name__)

SENT_W, SENT_L, SENT_A0 = 5.0, 50.0, 1.5
SENT_H2_CONCENTRATION = 0.17

# calibrated-by-assumption pipeline materials: ferritic-pearlitic base metal and
# bainitic weld metal with a similar initiation toughness and less hardening
X65_LIKE = MaterialParams(E=200000.0, nu=0.3, sigma_y0=450.0, n=0.1, Gc=22.0, ell=1.0)
X100_LIKE = MaterialParams(E=200000.0, nu=0.3, sigma_y0=690.0, n=0.05, Gc=22.0, ell=1.0)

_ABORTS = (SimulationAbort, SolverError, ReturnMappingError, np.linalg.LinAlgError)


def ultimate_strength(params: MaterialParams, mode: str = "uniaxial_stress") -> float:
    """Peak stress of the homogeneous 1D response."""
    return homogeneous_1d_response(params, mode=mode).sigma_u


def standard_fals(params: MaterialParams, sigma_u: float | None = None):
    """Option 1 and Option 2 lines with the cutoff from the 1D ultimate strength."""
    su = ultimate_strength(params) if sigma_u is None else sigma_u
    Lr_max = cutoff_lr_max(params.sigma_y0, su)
    return {"option1": FailureAssessmentLine.option1(params.E, params.sigma_y0, Lr_max),
            "option2": FailureAssessmentLine.option2(params.E, params.sigma_y0, params.n, Lr_max)}


def _monotone_prefix(points: list[AssessmentPoint]) -> list[AssessmentPoint]:
    out = []
    for p in points:
        if p.load > 0 and (not out or p.load > out[-1].load):
            out.append(p)
    return out


# --------------------------------------------------------------------------
# SENT specimen
# --------------------------------------------------------------------------

@dataclass
class SentModel:
    mesh: Mesh
    constraints: Constraints
    load_nodes: np.ndarray
    h: float

    def load_measure(self, f_int):
        return reaction(f_int, self.load_nodes, (0.0, 1.0))


def sent_model(a0: float = SENT_A0, h: float = 0.05, W: float = SENT_W, L: float = SENT_L,
               ends: str = "pinned", window: tuple[float, float] | None = None,
               band_height: float | None = None, h_max: float | None = None) -> SentModel:
    """Half SENT model loaded by a displacement of its top edge.

    ``ends="pinned"`` lets the loaded edge rotate about its midpoint (the
    handbook SIF assumes pin loading); ``"clamped"`` keeps it straight.
    """
    if window is None:
        window = (min(a0, 30 * h), min(W - a0, 60 * h))
    if band_height is None:
        band_height = min(30 * h, 2.0)
    mesh = generate_sent_mesh(W=W, L=L, a0=a0, h=h, window=window, band_height=band_height,
                              h_max=h_max)
    c = Constraints(mesh.n_nodes).fix(mesh.node_sets["ligament"], [1])
    top = mesh.node_sets["top"]
    if ends == "pinned":
        c.rigid_edge(top, axis=1, value=1.0)
        c.fix(top[:1], [0])
    elif ends == "clamped":
        c.prescribe(top, 1, 1.0)
        c.fix(top, [0])
    else:
        raise DomainError(f"unknown end condition {ends!r}")
    return SentModel(mesh, c, top, h)


@dataclass
class SentRun:
    Gc: float
    ell: float
    a0: float
    h: float
    n_elements: int
    failed: bool
    criterion: str | None
    P_fail: float
    Lr: float
    Kr: float
    Kc: float
    runtime: float
    error: str | None = None
    path: list[AssessmentPoint] = field(default_factory=list, repr=False)
    loads: list[float] = field(default_factory=list, repr=False)


def sent_mesh_size(ell: float, a0: float, h_max: float = 0.1) -> float:
    return min(ell / 4.0, h_max, a0 / 2.0)


def run_sent(params: MaterialParams, a0: float = SENT_A0, W: float = SENT_W,
             hydrogen: HydrogenCoupling | None = None, Kc: float | None = None,
             h: float | None = None, h_max: float = 0.1, crack_growth: bool = True,
             config: SolverConfig | None = None, steps_to_yield: int = 25) -> SentRun:
    """Load one SENT specimen to failure.

    The load increment is sized from an elastic probe so that roughly
    ``steps_to_yield`` increments reach the smaller of the Kr = 1 and Lr = 1
    loads. ``crack_growth=False`` disables the crack-advance criterion
    (failure then only by load drop).
    """
    t0 = time.perf_counter()
    h = h or sent_mesh_size(params.ell, a0, h_max)
    model = sent_model(a0, h, W, h_max=max(h, 0.25))
    cfg = config or SolverConfig()
    if not crack_growth:
        cfg = SolverConfig(**{**asdict(cfg), "advance_length": 1e9})
    Kc = Kc or toughness_from_Gc(params.Gc, params.E, params.nu)
    Py = sent_yield_load(1.0, W, a0, params.sigma_y0)
    sim = Simulation(model.mesh, MaterialField.uniform(model.mesh, params), model.constraints, cfg,
                     load_measure=model.load_measure, hydrogen=hydrogen)
    probe = 1e-5 * W
    st, _ = sim.staggered_step(probe)
    stiff = st.load / probe
    P_ref = min(Kc * math.sqrt(W) / sent_geometry_factor(a0 / W), Py)
    lam_ref = P_ref / stiff
    dlam = lam_ref / steps_to_yield
    path = []
    error = None

    def cb(state, rec):
        path.append(AssessmentPoint(max(rec.load, 0.0) / Py,
                                    max(float(sent_sif(rec.load, 1.0, W, a0)), 0.0) / Kc, "", rec.load))
    try:
        res = sim.run(60.0 * lam_ref, dlam, dlam_max=2.0 * dlam, callback=cb)
        failure = res.failure
        P = failure.load if failure else res.max_load
    except _ABORTS as exc:
        error = str(exc)
        failure = None
        P = max((p.load for p in path), default=0.0)
    K = float(sent_sif(P, 1.0, W, a0))
    return SentRun(params.Gc, params.ell, a0, h, model.mesh.n_elements, failure is not None,
                   failure.criterion if failure else None, P, P / Py, K / Kc, Kc,
                   time.perf_counter() - t0, error, path, [p.load for p in path])


def sweep_gc_values(count: int = 8, lo: float = 5.0, hi: float = 120.0) -> np.ndarray:
    return np.geomspace(lo, hi, count)


def sent_params(Gc: float, base: MaterialParams = MaterialParams(), r_y: float = 1.5) -> MaterialParams:
    p = base.with_(Gc=float(Gc))
    return p.with_(ell=length_scale_for_ductility(r_y, p))


@dataclass
class SweepReport:
    runs: list[SentRun]
    fals: dict[str, FailureAssessmentLine]
    sigma_u: float
    deviations: dict[str, list[float]]
    extra: dict = field(default_factory=dict)

    def table(self) -> FADTable:
        pts = [AssessmentPoint(r.Lr, r.Kr, f"Gc={r.Gc:.6g}", r.P_fail) for r in self.runs if r.P_fail > 0]
        paths = {f"Gc={r.Gc:.6g}": LoadingPath(_monotone_prefix(r.path)) for r in self.runs
                 if len(_monotone_prefix(r.path)) > 0}
        return FADTable(dict(self.fals), paths, pts, {"sigma_u": self.sigma_u, **self.extra})


def _deviations(runs, fals):
    out = {}
    for name, fal in fals.items():
        out[name] = [fal.radial_deviation(r.Lr, r.Kr) if r.P_fail > 0 else float("nan") for r in runs]
    return out


def run_sent_fal_sweep(Gc_values=None, base: MaterialParams = MaterialParams(), r_y: float = 1.5,
                       h_max: float = 0.1, config: SolverConfig | None = None) -> SweepReport:
    """Virtual FAL in air: one SENT run per toughness at constant ductility ratio."""
    Gc_values = sweep_gc_values() if Gc_values is None else np.asarray(Gc_values, float)
    runs = []
    for Gc in sorted(Gc_values):
        p = sent_params(Gc, base, r_y)
        run = run_sent(p, h_max=h_max, config=config)
        if run.error:
            log.warning("SENT Gc=%g aborted: %s", Gc, run.error)
        log.info("SENT Gc=%.4g: Lr=%.3f Kr=%.3f (%s, %.0f s)", Gc, run.Lr, run.Kr, run.criterion, run.runtime)
        runs.append(run)
    # sigma_u depends on Gc and ell only through Gc/ell, fixed by r_y
    su = ultimate_strength(sent_params(Gc_values[0], base, r_y))
    fals = standard_fals(base, su)
    return SweepReport(runs, fals, su, _deviations(runs, fals))


def run_sent_control(Gc: float = 120.0, base: MaterialParams = MaterialParams(), r_y: float = 1.5,
                     h_max: float = 0.1):
    """No-crack-growth SENT run; returns (run, sigma_u / sigma_y0)."""
    p = sent_params(Gc, base, r_y)
    run = run_sent(p, h_max=h_max, crack_growth=False)
    return run, ultimate_strength(p) / p.sigma_y0


@dataclass
class HydrogenSweepReport:
    air: SweepReport
    runs: list[SentRun]
    Kc_air: list[float]
    Kc_h: list[float]
    air_normalized: list[AssessmentPoint]
    h_normalized: list[AssessmentPoint]
    load_reduction: list[float]
    dip_margin: float | None


def run_sent_hydrogen_sweep(Gc_values=None, base: MaterialParams = MaterialParams(),
                            hydrogen: HydrogenParams = HydrogenParams(),
                            concentration: float = SENT_H2_CONCENTRATION, r_y: float = 1.5,
                            h_max: float = 0.1, air: SweepReport | None = None) -> HydrogenSweepReport:
    """SENT failure points with a stationary hydrogen field fed from both side faces.

    Points are normalised twice: with the air toughness and with the toughness
    degraded at the boundary concentration.
    """
    Gc_values = sweep_gc_values() if Gc_values is None else np.asarray(Gc_values, float)
    if air is None:
        air = run_sent_fal_sweep(Gc_values, base, r_y, h_max)
    f_c = hydrogen.f_min + (1 - hydrogen.f_min) * math.exp(-hydrogen.q1 * concentration**hydrogen.q2)
    coupling = HydrogenCoupling(hydrogen, DiffusionBC({"left": concentration, "right": concentration}))
    runs, pa, ph, Ka, Kh, red = [], [], [], [], [], []
    air_by_gc = {round(r.Gc, 9): r for r in air.runs}
    for Gc in sorted(Gc_values):
        p = sent_params(Gc, base, r_y)
        Kc_air = toughness_from_Gc(p.Gc, p.E, p.nu)
        Kc_h = toughness_from_Gc(f_c * p.Gc, p.E, p.nu)
        run = run_sent(p, hydrogen=coupling, Kc=Kc_air, h_max=h_max)
        runs.append(run)
        Ka.append(Kc_air)
        Kh.append(Kc_h)
        label = f"Gc={Gc:.6g}"
        pa.append(AssessmentPoint(run.Lr, run.Kr, label, run.P_fail))
        ph.append(AssessmentPoint(run.Lr, run.Kr * Kc_air / Kc_h, label, run.P_fail))
        ref = air_by_gc.get(round(float(Gc), 9))
        red.append(1.0 - run.P_fail / ref.P_fail if ref and ref.P_fail > 0 else float("nan"))
        log.info("SENT-H Gc=%.4g: Lr=%.3f KrH=%.3f reduction=%.1f%%", Gc, run.Lr, ph[-1].Kr, 100 * red[-1])
    opt1 = air.fals["option1"]
    window = [opt1.radial_deviation(q.Lr, q.Kr) for q in ph if 0.6 < q.Lr < 0.9]
    return HydrogenSweepReport(air, runs, Ka, Kh, pa, ph, red, min(window) if window else None)


# --------------------------------------------------------------------------
# transition flaw size
# --------------------------------------------------------------------------

@dataclass
class FlawSweepReport:
    runs: list[SentRun]
    sigma_c: float
    sigma_u: float
    Kc: float
    a_over_W: np.ndarray
    sigma_f: np.ndarray
    griffith: np.ndarray       # remote stress at K = Kc
    Lc: np.ndarray             # sigma_f / sigma_u
    Kr: np.ndarray


def run_transition_flaw_sweep(a_over_W=(0.005, 0.02, 0.05, 0.1, 0.2, 0.4, 0.6),
                              params: MaterialParams | None = None, W: float = SENT_W,
                              h_max: float = 0.25) -> FlawSweepReport:
    """Failure stress of SENT specimens with a range of initial crack lengths.

    The collapse envelope uses the plane-strain 1D ultimate strength, matching
    the plane-strain specimen.
    """
    params = params or sent_params(5.0)
    Kc = toughness_from_Gc(params.Gc, params.E, params.nu)
    su = ultimate_strength(params, mode="plane_strain")
    sc = math.sqrt(27.0 * params.E * params.Gc / (256.0 * params.ell))
    runs = []
    for x in sorted(a_over_W):
        run = run_sent(params, a0=x * W, W=W, h_max=h_max)
        log.info("flaw a/W=%.3g: sigma_f=%.1f (%s)", x, run.P_fail / W, run.criterion)
        runs.append(run)
    a = np.array(sorted(a_over_W))
    sf = np.array([r.P_fail / W for r in runs])
    griffith = np.array([Kc * math.sqrt(W) / sent_geometry_factor(x) / W for x in a])
    return FlawSweepReport(runs, sc, su, Kc, a, sf, griffith, sf / su, sf / griffith)


def write_flaw_csv(out_dir, rep: FlawSweepReport) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "flaw_sweep.csv", "w", newline="") as fh:
        fh.write("# FADFORGE-v1 flaw-sweep\n")
        w = csv.writer(fh)
        w.writerow(["a_over_W", "sigma_f", "sigma_f_over_sigma_c", "griffith_over_sigma_c",
                    "collapse_over_sigma_c", "criterion"])
        for x, s, g, r in zip(rep.a_over_W, rep.sigma_f, rep.griffith, rep.runs):
            w.writerow([repr(float(x)), repr(float(s)), repr(float(s / rep.sigma_c)),
                        repr(float(g / rep.sigma_c)), repr(rep.sigma_u / rep.sigma_c), r.criterion])
    with open(out / "flaw_interaction.csv", "w", newline="") as fh:
        fh.write("# FADFORGE-v1 flaw-interaction\n")
        w = csv.writer(fh)
        w.writerow(["a_over_W", "Lc", "Kr"])
        for x, l, k in zip(rep.a_over_W, rep.Lc, rep.Kr):
            w.writerow([repr(float(x)), repr(float(l)), repr(float(k))])


# --------------------------------------------------------------------------
# boundary layer R-curve
# --------------------------------------------------------------------------

@dataclass
class RCurve:
    K: np.ndarray
    J: np.ndarray
    da: np.ndarray
    truncated: bool


def _mode_i_displacement(x, y, K, E, nu):
    G = E / (2 * (1 + nu))
    kap = 3 - 4 * nu
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    a = K / (2 * G) * np.sqrt(r / (2 * np.pi))
    return np.column_stack([a * np.cos(th / 2) * (kap - np.cos(th)),
                            a * np.sin(th / 2) * (kap - np.cos(th))])


def run_boundary_layer_rcurve(params: MaterialParams, K_max: float | None = None, R_over_ell: float = 60.0,
                              n_steps: int = 60, h_factor: float = 0.25) -> RCurve:
    """J versus crack extension in a small-scale-yielding domain under a
    remote mode-I K field. The curve is truncated when the crack front gets
    within a quarter of the domain size of the boundary."""
    ell = params.ell
    R = R_over_ell * ell
    h = h_factor * ell
    mesh = generate_boundary_layer_mesh(R, h, window=R / 3)
    Ep = params.E_prime
    K_max = K_max or 3.0 * math.sqrt(Ep * params.Gc)
    outer = mesh.node_sets["outer"]
    c = Constraints(mesh.n_nodes).fix(mesh.node_sets["ligament"], [1])
    uK = _mode_i_displacement(mesh.nodes[outer, 0], mesh.nodes[outer, 1], 1.0, params.E, params.nu)
    c.prescribe_vector(outer, uK)
    cfg = SolverConfig(advance_length=R / 3 - 2 * h)
    sim = Simulation(mesh, MaterialField.uniform(mesh, params), c, cfg)
    Ks, Js, das = [0.0], [0.0], [0.0]

    def cb(state, rec):
        Ks.append(rec.lam)
        Js.append(rec.lam**2 / Ep)
        das.append(rec.advance)
    try:
        res = sim.run(K_max, K_max / n_steps, dlam_max=K_max / n_steps, callback=cb)
        truncated = res.failure is not None
    except _ABORTS as exc:
        log.warning("R-curve aborted: %s", exc)
        truncated = True
    return RCurve(np.array(Ks), np.array(Js), np.array(das), truncated)


def initiation_toughness(curve: RCurve, da_init: float) -> float:
    """J at the first recorded extension beyond ``da_init``."""
    idx = np.nonzero(curve.da > da_init)[0]
    if not idx.size:
        return float("nan")
    return float(curve.J[idx[0]])


# --------------------------------------------------------------------------
# pipeline campaign
# --------------------------------------------------------------------------

@dataclass
class PipeModel:
    mesh: Mesh
    constraints: Constraints
    OD: float
    t: float
    hoop_dir: np.ndarray
    h: float

    @property
    def r_in(self) -> float:
        return self.OD / 2 - self.t

    def pressure(self, f_int) -> float:
        """Hoop force through the symmetry edge converted by the thin-wall relation."""
        N = reaction(f_int, self.mesh.node_sets["left"], -self.hoop_dir)
        return float(thin_wall_pressure(N / self.t, self.t, self.r_in))


def pipe_model(defect: DefectSpec, OD: float = 762.0, t: float = 12.7, h: float = 0.25,
               half_arc: float = 60.0) -> PipeModel:
    """Ring sector with hoop symmetry on both radial edges and a prescribed
    radial displacement of the inner surface (tangential motion free)."""
    mesh = generate_pipe_section_mesh(OD, t, defect, h=h, half_arc=half_arc)
    mesh.validate()
    r_mid = OD / 2 - t / 2
    c = Constraints(mesh.n_nodes)
    dirs = {}
    for side, sgn in (("left", -1.0), ("right", 1.0)):
        th = sgn * half_arc / r_mid
        e = np.array([math.cos(th), -math.sin(th)])
        dirs[side] = e
        c.prescribe(mesh.node_sets[side], e, 0.0)
    inner = mesh.node_sets["inner"]
    rad = mesh.nodes[inner] / np.linalg.norm(mesh.nodes[inner], axis=1)[:, None]
    c.prescribe(inner, rad, 1.0)
    return PipeModel(mesh, c, OD, t, dirs["left"], h)


def _tip_domains(mesh: Mesh, tip, h: float):
    """Three square rings that stay clear of free boundaries off the crack line."""
    loc = outer_boundary_local(mesh, tip)
    clear = float(np.min(np.max(np.abs(loc), axis=1))) if len(loc) else np.inf
    width = max(1, int((0.95 * clear / h - 1) // 3))
    width = min(width, 2)
    return default_domains(h, 3, 1, width)


@dataclass
class DefectResult:
    name: str
    length: float
    heterogeneous: bool
    hydrogen: bool
    K_per_p: float              # equivalent SIF per unit pressure
    K_I_per_p: float
    K_II_per_p: float
    kink_deg: float
    Py: float                   # limit pressure of the homogeneous base metal
    p_fail: float
    failed: bool
    criterion: str | None
    runtime: float
    n_elements: int
    error: str | None = None
    path_p: list[float] = field(default_factory=list, repr=False)


def elastic_pipe_sif(model: PipeModel, params: MaterialParams):
    """Worst-tip (K_eq, K_I, K_II, theta) per unit pressure from a linear elastic solve."""
    lin = params.with_(sigma_y0=1e12)
    sim = Simulation(model.mesh, MaterialField.uniform(model.mesh, lin), model.constraints,
                     SolverConfig(phase_field=False), load_measure=model.pressure)
    st, _ = sim.staggered_step(1e-3)
    p = st.load
    best = None
    for tip in model.mesh.tips:
        res = interaction_integral_k(sim.space, st, tip, _tip_domains(model.mesh, tip, model.h),
                                     params.E, params.nu)
        keq, th = mixed_mode_keq(max(res.K_I, 0.0), res.K_II)
        cand = (keq / p, res.K_I / p, res.K_II / p, math.degrees(th))
        if best is None or cand[0] > best[0]:
            best = cand
    return best, p / 1e-3


def run_pipe_defect(defect: DefectSpec, base: MaterialParams = X65_LIKE, weld: MaterialParams = X100_LIKE,
                    heterogeneous: bool = False, hydrogen: HydrogenParams | None = None,
                    property_field: PropertyFieldMap | None = None, groove: VGroove = VGroove(),
                    OD: float = 762.0, t: float = 12.7, h: float = 0.25, Py: float | None = None,
                    config: SolverConfig | None = None) -> DefectResult:
    """K(p), limit pressure and phase-field failure pressure of one defect."""
    t0 = time.perf_counter()
    model = pipe_model(defect, OD, t, h)
    mesh = model.mesh
    (kp, kIp, kIIp, th), p_per_lam = elastic_pipe_sif(model, base)
    if Py is None:
        ll = limit_load_analysis(mesh, MaterialField.uniform(mesh, base), model.constraints,
                                 model.pressure, lam_max=3.0 * base.sigma_y0 * t / model.r_in / p_per_lam)
        Py = ll.Py
    mat = MaterialField.uniform(mesh, base)
    law = None
    if heterogeneous:
        pf = property_field or synthetic_weld_field(mesh, OD, t, base, groove, weld_Gc=weld.Gc)
        mat, corr = apply_property_field(pf, mesh, mat, model.constraints)
        log.info("defect %s: residual stress equilibrium correction %.2f%%", defect.name, 100 * corr)
        xb = mat.x_b if mat.x_b is not None else np.zeros(mesh.n_elements)
        mat = mat.copy_with(n=(1 - xb) * base.n + xb * weld.n)
        law = blend_degradation(xb)
    coupling = None
    if hydrogen is not None:
        if law is None:
            law = blend_degradation(np.zeros(mesh.n_elements))
        coupling = HydrogenCoupling(hydrogen, DiffusionBC({"inner": "sievert", "outer": 0.0}), *law)
    sim = Simulation(mesh, mat, model.constraints, config or SolverConfig(), load_measure=model.pressure,
                     hydrogen=coupling, pressure_of_load=(lambda p: max(p, 0.0)) if coupling else None)
    lam_y = Py / p_per_lam
    path = []
    error = None
    try:
        res = sim.run(6.0 * lam_y, lam_y / 20, dlam_max=lam_y / 10,
                      callback=lambda s, r: path.append(r.load))
        fail = res.failure
        p_fail = fail.load if fail else res.max_load
    except _ABORTS as exc:
        error = str(exc)
        fail = None
        p_fail = max(path, default=0.0)
    return DefectResult(defect.name, defect.length, heterogeneous, hydrogen is not None, kp, kIp, kIIp, th,
                        Py, p_fail, fail is not None, fail.criterion if fail else None,
                        time.perf_counter() - t0, mesh.n_elements, error, path)


NORMALIZATIONS = ("air_base", "h2_base", "h2_weld")


def pipe_assessment_point(r: DefectResult, normalization: str, base: MaterialParams = X65_LIKE,
                          weld: MaterialParams = X100_LIKE, hydrogen: HydrogenParams = HydrogenParams(),
                          p: float | None = None) -> AssessmentPoint:
    """(Lr, Kr) of a defect at pressure ``p`` (default: its failure pressure).

    ``air_base`` uses the base-metal air toughness; ``h2_base`` degrades it
    with the base-metal law at the inner-surface Sievert concentration;
    ``h2_weld`` uses the fully bainitic weld law and toughness.
    """
    p = r.p_fail if p is None else p
    Ep = base.E_prime
    if normalization == "air_base":
        Kc = math.sqrt(Ep * base.Gc)
    else:
        C = sievert_concentration(p, hydrogen.S)
        law, Gc = (FERRITIC_PEARLITIC, base.Gc) if normalization == "h2_base" else (BAINITIC, weld.Gc)
        f = law.f_min + (1 - law.f_min) * math.exp(-law.q1 * C**law.q2)
        Kc = math.sqrt(Ep * f * Gc)
    return AssessmentPoint(p / r.Py, r.K_per_p * p / Kc, f"{r.name}{r.length:g}", p)


@dataclass
class PipelineReport:
    results: list[DefectResult]
    fals: dict[str, FailureAssessmentLine]
    points: dict[str, list[AssessmentPoint]]       # per normalization
    required_sf: dict[str, dict[str, float]]       # normalization -> fal -> SF

    def table(self, normalization: str) -> FADTable:
        paths = {}
        for r in self.results:
            pts = _monotone_prefix([AssessmentPoint(q / r.Py, r.K_per_p * q, "", q) for q in r.path_p if q > 0])
            if normalization != "air_base" and pts:
                pts = [pipe_assessment_point(r, normalization, p=q.load) for q in pts]
            if pts:
                paths[f"{r.name}{r.length:g}"] = LoadingPath(pts)
        meta = {"normalization": normalization, "required_sf": self.required_sf.get(normalization, {}),
                "labels": "analogue"}
        return FADTable(dict(self.fals), paths, list(self.points[normalization]), meta)


def run_pipeline_campaign(defects=("A", "B", "C", "D", "E", "F"), lengths=(2.0,),
                          heterogeneous: bool = False, hydrogen: HydrogenParams | None = None,
                          base: MaterialParams = X65_LIKE, weld: MaterialParams = X100_LIKE,
                          groove: VGroove = VGroove(), OD: float = 762.0, t: float = 12.7,
                          h: float = 0.25, property_field: PropertyFieldMap | None = None,
                          limit_pressures: dict | None = None) -> PipelineReport:
    """Run every (location, length) defect analogue and assess the failure points.

    Each defect is isolated: a solver failure is recorded in its result and
    the campaign continues. ``limit_pressures`` may supply precomputed
    base-metal limit pressures keyed by label.
    """
    results = []
    for name in sorted(defects):
        for a in sorted(lengths):
            spec = defect_preset(name, a, t, groove)
            label = f"{name}{a:g}"
            try:
                r = run_pipe_defect(spec, base, weld, heterogeneous, hydrogen, property_field, groove,
                                    OD, t, h, (limit_pressures or {}).get(label))
            except (DomainError, MeshError, *_ABORTS) as exc:
                log.warning("defect %s failed to set up: %s", label, exc)
                continue
            log.info("defect %s: p_fail=%.2f Py=%.2f K/p=%.3f (%s, %.0f s)", label, r.p_fail, r.Py,
                     r.K_per_p, r.criterion, r.runtime)
            results.append(r)
    fals = standard_fals(base)
    norms = ("air_base",) if hydrogen is None else NORMALIZATIONS
    points, sfs = {}, {}
    for nm in norms:
        pts = [pipe_assessment_point(r, nm, base, weld, hydrogen or HydrogenParams()) for r in results
               if r.p_fail > 0]
        points[nm] = pts
        sfs[nm] = {k: required_safety_factor(pts, f) for k, f in fals.items()} if pts else {}
    return PipelineReport(results, fals, points, sfs)


# --------------------------------------------------------------------------
# reporting
# --------------------------------------------------------------------------

def write_sweep_outputs(out_dir, report: SweepReport, name: str = "sent_sweep") -> None:
    out = Path(out_dir)
    write_fad_csv(out / f"{name}_fad.csv", report.table())
    with open(out / f"{name}_points.csv", "w", newline="") as fh:
        fh.write("# FADFORGE-v1 sweep-points\n")
        w = csv.writer(fh)
        w.writerow(["Gc", "ell", "h", "elements", "criterion", "P_fail", "Lr", "Kr", "Kc",
                    "dev_option1", "dev_option2", "error"])
        for i, r in enumerate(report.runs):
            w.writerow([repr(r.Gc), repr(r.ell), repr(r.h), r.n_elements, r.criterion, repr(float(r.P_fail)),
                        repr(float(r.Lr)), repr(float(r.Kr)), repr(float(r.Kc)),
                        repr(float(report.deviations["option1"][i])),
                        repr(float(report.deviations["option2"][i])), r.error or ""])
    dev2 = [d for d in report.deviations["option2"] if np.isfinite(d)]
    write_summary(out / f"{name}_summary.json", {
        "kind": name, "failed": any(r.failed for r in report.runs),
        "sigma_u": report.sigma_u,
        "points": [{"Gc": r.Gc, "P_fail": r.P_fail, "Lr": r.Lr, "Kr": r.Kr, "Kc": r.Kc,
                    "criterion": r.criterion} for r in report.runs],
        "option2_deviation": {"mean": float(np.mean(dev2)) if dev2 else None,
                              "max_abs": float(np.max(np.abs(dev2))) if dev2 else None},
    })


def write_hydrogen_outputs(out_dir, rep: HydrogenSweepReport) -> None:
    out = Path(out_dir)
    write_sweep_outputs(out, rep.air, "sent_air")
    for tag, pts in (("air_kc", rep.air_normalized), ("h_kc", rep.h_normalized)):
        write_fad_csv(out / f"sent_h2_fad_{tag}.csv", FADTable(dict(rep.air.fals), {}, list(pts)))
    write_summary(out / "sent_h2_summary.json", {
        "kind": "sent_h2", "failed": any(r.failed for r in rep.runs),
        "points": [{"Gc": r.Gc, "P_fail": r.P_fail, "Lr": r.Lr, "Kr_air": a.Kr, "Kr_h": b.Kr,
                    "Kc_air": ka, "Kc_eff": kh, "load_reduction": d}
                   for r, a, b, ka, kh, d in zip(rep.runs, rep.air_normalized, rep.h_normalized,
                                                 rep.Kc_air, rep.Kc_h, rep.load_reduction)],
        "transition_dip_min_margin_option1": rep.dip_margin,
    })


def write_pipeline_outputs(out_dir, rep: PipelineReport, tag: str = "pipe") -> None:
    out = Path(out_dir)
    for nm in rep.points:
        write_fad_csv(out / f"{tag}_fad_{nm}.csv", rep.table(nm))
    write_summary(out / f"{tag}_summary.json", {
        "kind": "pipeline", "labels": "analogue",
        "failed": any(r.failed for r in rep.results),
        "defects": [{"label": f"{r.name}{r.length:g}", "failure_pressure": r.p_fail, "Py": r.Py,
                     "K_eq_per_MPa": r.K_per_p, "K_I_per_MPa": r.K_I_per_p, "K_II_per_MPa": r.K_II_per_p,
                     "kink_deg": r.kink_deg, "failed": r.failed, "criterion": r.criterion,
                     "heterogeneous": r.heterogeneous, "hydrogen": r.hydrogen, "error": r.error}
                    for r in rep.results],
        "points": {nm: [{"label": p.label, "Lr": p.Lr, "Kr": p.Kr, "pressure": p.load} for p in pts]
                   for nm, pts in rep.points.items()},
        "required_safety_factor": rep.required_sf,
    })
