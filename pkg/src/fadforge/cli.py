"""Command line entry point: ``fadforge <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input or usage, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import campaigns as cp
from .fad import (FailureAssessmentLine, assessment_point, cutoff_lr_max, safety_factor,
                  toughness_from_Gc)
from .fem import SimulationAbort, SolverError
from .io import (FADTable, FormatError, RunConfig, load_property_field, load_run_config,
                 output_root, write_fad_csv, write_summary)
from .material import DomainError, MaterialParams, ReturnMappingError, homogeneous_1d_response
from .mesh import MeshError

log = logging.getLogger("fadforge")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from exc


def _add_material(p, defaults: MaterialParams = MaterialParams()):
    g = p.add_argument_group("material (overrides the config file)")
    g.add_argument("--E", type=float, help=f"Young's modulus [MPa] (default {defaults.E:g})")
    g.add_argument("--nu", type=float, help="Poisson ratio")
    g.add_argument("--sy0", type=float, help="initial yield stress [MPa]")
    g.add_argument("--n", type=float, help="hardening exponent")
    g.add_argument("--Gc", type=float, help="critical energy release rate [N/mm]")
    g.add_argument("--ell", type=float, help="phase-field length scale [mm]")


def _common(p):
    p.add_argument("--config", type=Path, help="INI run configuration")
    p.add_argument("--out", type=Path, help="output directory (default $FADFORGE_OUT or ./fadforge_out)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fadforge",
                                 description="Failure assessment diagrams and phase-field fracture campaigns")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fal", help="write a standard failure assessment line")
    _common(p)
    p.add_argument("--option", choices=["1", "2"], required=True)
    _add_material(p)
    p.add_argument("--su", type=float, help="ultimate strength for the cutoff [MPa]")
    p.add_argument("--lr-max", type=float, help="explicit cutoff (default from --su, else 1)")
    p.add_argument("--samples", type=int, default=512)

    p = sub.add_parser("assess", help="assess one load case against Option 1 and 2")
    _common(p)
    _add_material(p)
    p.add_argument("--K", type=float, required=True, help="applied SIF [MPa sqrt(mm)]")
    p.add_argument("--Kc", type=float, help="toughness [MPa sqrt(mm)] (default sqrt(E' Gc))")
    p.add_argument("--P", type=float, required=True, help="applied load")
    p.add_argument("--Py", type=float, required=True, help="plastic collapse load")
    p.add_argument("--su", type=float, help="ultimate strength for the cutoff [MPa]")

    p = sub.add_parser("onedim", help="homogeneous 1D stress-strain response")
    _common(p)
    _add_material(p)
    p.add_argument("--mode", choices=["uniaxial_stress", "plane_strain"], default="uniaxial_stress")

    for name, hlp in (("sent-sweep", "virtual FAL of SENT specimens in air"),
                      ("sent-h2-sweep", "SENT sweep in air and with hydrogen")):
        p = sub.add_parser(name, help=hlp)
        _common(p)
        _add_material(p)
        p.add_argument("--gc-values", type=_floats, help="comma-separated Gc list [N/mm]")
        p.add_argument("--count", type=int, help="number of log-spaced Gc values in [5, 120]")
        p.add_argument("--ry", type=float, help="ductility ratio (default 1.5)")
        p.add_argument("--h-max", type=float, help="largest tip element size [mm]")
        if name == "sent-sweep":
            p.add_argument("--control", action="store_true", help="also run the no-growth control")
        else:
            p.add_argument("--concentration", type=float, help="face concentration [wppm]")

    p = sub.add_parser("flaw-sweep", help="failure stress versus initial crack length")
    _common(p)
    _add_material(p)
    p.add_argument("--a-over-w", type=_floats, help="comma-separated a0/W list")
    p.add_argument("--ry", type=float)
    p.add_argument("--h-max", type=float)

    p = sub.add_parser("rcurve", help="boundary-layer J-resistance curve")
    _common(p)
    p.add_argument("--preset", choices=["x65", "x100", "table"], default="x65")
    _add_material(p)
    p.add_argument("--K-max", type=float)
    p.add_argument("--R-over-ell", type=float, default=60.0)
    p.add_argument("--steps", type=int, default=60)

    p = sub.add_parser("pipe", help="pipeline weld defect campaign")
    _common(p)
    p.add_argument("--defects", default="A,B,C,D,E,F", help="comma-separated presets A-F")
    p.add_argument("--lengths", type=_floats, default=[2.0], help="defect lengths [mm]")
    p.add_argument("--heterogeneous", action="store_true", help="synthetic weld field")
    p.add_argument("--hydrogen", action="store_true", help="Sievert hydrogen at the inner surface")
    p.add_argument("--property-field", type=Path, help="per-element property CSV")
    p.add_argument("--h", type=float, help="element size near the defect [mm]")
    return ap


# --------------------------------------------------------------------------
# option resolution
# --------------------------------------------------------------------------

def _config(args) -> RunConfig:
    return load_run_config(args.config) if getattr(args, "config", None) else RunConfig()


def _material(args, base: MaterialParams) -> MaterialParams:
    over = {k: getattr(args, a) for k, a in (("E", "E"), ("nu", "nu"), ("sigma_y0", "sy0"), ("n", "n"),
                                             ("Gc", "Gc"), ("ell", "ell")) if getattr(args, a, None) is not None}
    return base.with_(**over) if over else base


def _out(args, cfg: RunConfig) -> Path:
    if args.out is not None:
        out = args.out
    elif args.config is not None:
        out = Path(cfg.out)
    else:
        out = output_root()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pick(cli_value, section: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    return section.get(key, default)


def _as_list(v):
    if v is None:
        return None
    return [float(x) for x in (v if isinstance(v, (list, tuple)) else [v])]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_fal(args, cfg):
    p = _material(args, cfg.material)
    if args.lr_max is not None:
        Lr_max = args.lr_max
    elif args.su is not None:
        Lr_max = cutoff_lr_max(p.sigma_y0, args.su)
    else:
        Lr_max = 1.0
    if args.option == "1":
        fal = FailureAssessmentLine.option1(p.E, p.sigma_y0, Lr_max, args.samples)
    else:
        fal = FailureAssessmentLine.option2(p.E, p.sigma_y0, p.n, Lr_max, args.samples)
    out = _out(args, cfg)
    path = out / f"fal_option{args.option}.csv"
    write_fad_csv(path, FADTable({f"option{args.option}": fal}))
    print(path)
    return EXIT_OK


def cmd_assess(args, cfg):
    p = _material(args, cfg.material)
    Kc = args.Kc or toughness_from_Gc(p.Gc, p.E, p.nu)
    pt = assessment_point(args.K, Kc, args.P, args.Py, "case")
    Lr_max = cutoff_lr_max(p.sigma_y0, args.su) if args.su else 1.0
    fals = {"option1": FailureAssessmentLine.option1(p.E, p.sigma_y0, Lr_max),
            "option2": FailureAssessmentLine.option2(p.E, p.sigma_y0, p.n, Lr_max)}
    res = {"Lr": pt.Lr, "Kr": pt.Kr, "Kc": Kc, "Lr_max": Lr_max}
    for name, fal in fals.items():
        sf = safety_factor(pt, fal) if (pt.Lr > 0 or pt.Kr > 0) else math.inf
        res[f"safety_factor_{name}"] = sf
        res[f"acceptable_{name}"] = bool(sf > 1.0)
    out = _out(args, cfg)
    write_fad_csv(out / "assessment_fad.csv", FADTable(fals, {}, [pt]))
    write_summary(out / "assessment_summary.json", res)
    for k, v in res.items():
        print(f"{k} = {v}")
    return EXIT_OK


def cmd_onedim(args, cfg):
    p = _material(args, cfg.material)
    r = homogeneous_1d_response(p, mode=args.mode)
    out = _out(args, cfg)
    path = out / "onedim.csv"
    with open(path, "w", newline="") as fh:
        fh.write("# FADFORGE-v1 onedim\n")
        w = csv.writer(fh)
        w.writerow(["strain", "stress", "phi", "eps_p_eq"])
        for row in zip(r.strain, r.stress, r.phi, r.eps_p_eq):
            w.writerow([repr(float(v)) for v in row])
    write_summary(out / "onedim_summary.json", {
        "mode": args.mode, "sigma_u": r.sigma_u, "strain_at_peak": r.strain_at_peak,
        "eps_p_eq_at_peak": r.eps_p_eq_at_peak, "failure_strain": r.failure_strain,
        "material": asdict(p)})
    print(f"peak stress {r.sigma_u:.1f} MPa -> {path}")
    return EXIT_OK


def _gc_list(args, cfg):
    vals = args.gc_values or _as_list(cfg.sweep.get("Gc"))
    if vals:
        return np.asarray(vals, float)
    count = int(_pick(args.count, cfg.sweep, "count", 8))
    return cp.sweep_gc_values(count)


def cmd_sent_sweep(args, cfg):
    base = _material(args, cfg.material)
    r_y = float(_pick(args.ry, cfg.sweep, "r_y", 1.5))
    h_max = float(_pick(args.h_max, cfg.mesh, "h_max", 0.1))
    out = _out(args, cfg)
    rep = cp.run_sent_fal_sweep(_gc_list(args, cfg), base, r_y, h_max, cfg.solver_config())
    cp.write_sweep_outputs(out, rep)
    if args.control:
        run, ratio = cp.run_sent_control(base=base, r_y=r_y, h_max=h_max)
        write_summary(out / "sent_control_summary.json", {
            "failed": run.failed, "P_max": run.P_fail, "Lr_max_reached": run.Lr,
            "sigma_u_over_sigma_y0": ratio})
    for r in rep.runs:
        print(f"Gc={r.Gc:.4g} Lr={r.Lr:.3f} Kr={r.Kr:.3f} {r.criterion}")
    return EXIT_OK if not any(r.error for r in rep.runs) else EXIT_SOLVER


def cmd_sent_h2_sweep(args, cfg):
    base = _material(args, cfg.material)
    r_y = float(_pick(args.ry, cfg.sweep, "r_y", 1.5))
    h_max = float(_pick(args.h_max, cfg.mesh, "h_max", 0.1))
    C = float(_pick(args.concentration, cfg.bc, "concentration", cp.SENT_H2_CONCENTRATION))
    out = _out(args, cfg)
    rep = cp.run_sent_hydrogen_sweep(_gc_list(args, cfg), base, cfg.hydrogen, C, r_y, h_max)
    cp.write_hydrogen_outputs(out, rep)
    return EXIT_OK if not any(r.error for r in rep.runs) else EXIT_SOLVER


def cmd_flaw_sweep(args, cfg):
    base = _material(args, cfg.material)
    r_y = float(_pick(args.ry, cfg.sweep, "r_y", 1.5))
    h_max = float(_pick(args.h_max, cfg.mesh, "h_max", 0.25))
    a = args.a_over_w or _as_list(cfg.sweep.get("a_over_W")) or (0.005, 0.02, 0.05, 0.1, 0.2, 0.4, 0.6)
    params = cp.sent_params(base.Gc, base, r_y)
    out = _out(args, cfg)
    rep = cp.run_transition_flaw_sweep(a, params, h_max=h_max)
    cp.write_flaw_csv(out, rep)
    write_summary(out / "flaw_summary.json", {
        "failed": all(r.failed for r in rep.runs), "sigma_c": rep.sigma_c, "sigma_u": rep.sigma_u,
        "a_over_W": rep.a_over_W, "sigma_f": rep.sigma_f, "griffith": rep.griffith})
    return EXIT_OK if not any(r.error for r in rep.runs) else EXIT_SOLVER


def cmd_rcurve(args, cfg):
    base = {"x65": cp.X65_LIKE, "x100": cp.X100_LIKE, "table": cfg.material}[args.preset]
    p = _material(args, base)
    curve = cp.run_boundary_layer_rcurve(p, args.K_max, args.R_over_ell, args.steps)
    out = _out(args, cfg)
    with open(out / "rcurve.csv", "w", newline="") as fh:
        fh.write("# FADFORGE-v1 rcurve\n")
        w = csv.writer(fh)
        w.writerow(["K", "J", "da"])
        for row in zip(curve.K, curve.J, curve.da):
            w.writerow([repr(float(v)) for v in row])
    write_summary(out / "rcurve_summary.json", {"failed": False, "truncated": curve.truncated,
                                                "Gc": p.Gc, "ell": p.ell})
    return EXIT_OK


def cmd_pipe(args, cfg):
    defects = [d.strip().upper() for d in args.defects.split(",") if d.strip()]
    h = float(_pick(args.h, cfg.mesh, "h", 0.25))
    pf_path = args.property_field or cfg.property_field
    pf = load_property_field(pf_path) if pf_path else None
    hydrogen = cfg.hydrogen if args.hydrogen else None
    het = args.heterogeneous or pf is not None
    rep = cp.run_pipeline_campaign(defects, tuple(args.lengths), het, hydrogen, h=h, property_field=pf)
    out = _out(args, cfg)
    tag = "pipe" + ("_het" if het else "") + ("_h2" if hydrogen else "")
    cp.write_pipeline_outputs(out, rep, tag)
    for nm, sf in rep.required_sf.items():
        print(nm, {k: round(v, 3) for k, v in sf.items()})
    return EXIT_OK if all(r.error is None for r in rep.results) and rep.results else EXIT_SOLVER


COMMANDS = {"fal": cmd_fal, "assess": cmd_assess, "onedim": cmd_onedim, "sent-sweep": cmd_sent_sweep,
            "sent-h2-sweep": cmd_sent_h2_sweep, "flaw-sweep": cmd_flaw_sweep, "rcurve": cmd_rcurve,
            "pipe": cmd_pipe}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (DomainError, FormatError, MeshError, ValueError, OSError) as exc:
        print(f"fadforge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, SimulationAbort, ReturnMappingError, np.linalg.LinAlgError) as exc:
        print(f"fadforge: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
