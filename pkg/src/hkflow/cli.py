"""Batch command-line front end.

Subcommands: flow (integrate + diagnostics), diagnose (static-mesh
inequality checks), constants (print every named constant), sphere
(closed-form solution queries), blowup (post-process a stored run).

Exit codes: 0 success; 2 I/O error; 3 hypothesis or precondition violation;
4 numerical failure.  dt underflow and quality failure during a run are
valid scientific outcomes: they exit 0 with the termination recorded.
All error output is machine-readable JSON on stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analytic, extension, flow, geometry, io, moser, sobolev
from .errors import (
    BetaTooSmall,
    ExponentOutOfRange,
    HkflowError,
    HypothesisViolated,
    InsufficientSamples,
    InvalidMesh,
    MeshNotFound,
    NegativeField,
    NoBlowup,
    NotMeanConvex,
    ParabolicityLost,
    TimeBeyondTmax,
)
from .kernels import backend_name
from .mesh import Hypersurface, ellipsoid, icosphere, torus

EXIT_OK = 0
EXIT_IO = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4

_IO_ERRORS = (MeshNotFound,)
_HYPOTHESIS_ERRORS = (
    HypothesisViolated, NegativeField, TimeBeyondTmax, ExponentOutOfRange,
    BetaTooSmall, NotMeanConvex, ParabolicityLost, InsufficientSamples,
    NoBlowup, InvalidMesh, ValueError,
)

STATIC_CHECKS = ("michael_simon", "nonlinear_sobolev", "gradient_form")
FLOW_CHECKS = ("spacetime_sobolev", "energy_estimate", "moser_iterate",
               "sup_bound", "extension_monitor", "blowup_sequence",
               "evolution_residuals")
ALL_CHECKS = STATIC_CHECKS + FLOW_CHECKS

# config keys, their parsers, and defaults; command-line flags share names
CONFIG_SCHEMA: dict[str, tuple] = {
    "mesh": (str, "icosphere:3:1.0"),
    "n": (int, 2),
    "k": (int, 2),
    "alphas": (lambda s: [float(x) for x in str(s).split(",") if x], [4.0, 5.0]),
    "stop_T": (float, None),
    "blowup_threshold": (float, None),
    "snapshot_stride": (int, 10),
    "checks": (lambda s: [x for x in str(s).split(",") if x], []),
    "output_dir": (str, "hkflow_out"),
    "seed": (int, 0),
    "dt_safety": (float, 0.25),
    "dt_min": (float, 1e-12),
    "quality_floor": (float, 0.15),
    "monitor_C": (float, 0.1),
    "monitor_alpha": (float, None),
    "blowup_count": (int, 3),
    "moser_beta0": (float, None),
    "moser_m_max": (int, 4),
    "energy_beta": (float, 2.0),
    "num_random_fields": (int, 2),
}


def _json_error(exc: Exception) -> dict:
    return {"kind": "error", "error": type(exc).__name__, "message": str(exc)}


def parse_config_file(path: str) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; keys match CLI flags."""
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                if "=" not in body:
                    raise ValueError(f"{path}:{ln}: expected 'key = value'")
                key, val = body.split("=", 1)
                out[key.strip()] = val.strip()
    except OSError as exc:
        raise MeshNotFound(f"config file not found: {path}") from exc
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit command-line flags."""
    cfg = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}
    if getattr(args, "config", None):
        raw = parse_config_file(args.config)
        for key, val in raw.items():
            if key not in CONFIG_SCHEMA:
                raise ValueError(f"unknown config key {key!r}")
            parse = CONFIG_SCHEMA[key][0]
            cfg[key] = parse(val)
    for key in CONFIG_SCHEMA:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = CONFIG_SCHEMA[key][0](val) if isinstance(val, str) else val
    for check in cfg["checks"]:
        if check not in ALL_CHECKS:
            raise ValueError(f"unknown check {check!r}; choose from {ALL_CHECKS}")
    return cfg


def build_mesh(descriptor: str) -> Hypersurface:
    """Builtin 'icosphere:level:radius', 'ellipsoid:a:b:c:level',
    'torus:R:r' or a path to an .off/.obj file."""
    parts = descriptor.split(":")
    if parts[0] == "icosphere":
        level = int(parts[1]) if len(parts) > 1 else 3
        radius = float(parts[2]) if len(parts) > 2 else 1.0
        return icosphere(level, radius)
    if parts[0] == "ellipsoid":
        a, b, c = (float(x) for x in parts[1:4])
        level = int(parts[4]) if len(parts) > 4 else 3
        return ellipsoid(a, b, c, level)
    if parts[0] == "torus":
        major = float(parts[1]) if len(parts) > 1 else 1.0
        minor = float(parts[2]) if len(parts) > 2 else 0.4
        return torus(major, minor)
    return io.load_mesh(descriptor)


def standard_fields(mesh: Hypersurface, seed: int, num_random: int
                    ) -> dict[str, np.ndarray]:
    """Named nonnegative test fields: constants, coordinates, exponentials,
    and seeded random smooth fields."""
    z = mesh.vertices[:, 2]
    zhat = z / np.abs(z).max()
    fields = {
        "const_one": np.ones(mesh.num_vertices),
        "one_plus_z": 1.0 + zhat,
        "exp_z": np.exp(zhat),
        "coord_x_shifted": mesh.vertices[:, 0] - mesh.vertices[:, 0].min(),
    }
    rng = np.random.default_rng(seed)
    for i in range(num_random):
        fields[f"random_smooth_{i}"] = geometry.random_smooth_field(mesh, rng)
    return fields


def _static_check_reports(mesh: Hypersurface, cfg: dict) -> dict[str, list[dict]]:
    cache = geometry.build_geometry(mesh)
    fields = standard_fields(mesh, cfg["seed"], cfg["num_random_fields"])
    out: dict[str, list[dict]] = {}
    for check in cfg["checks"]:
        if check not in STATIC_CHECKS:
            continue
        reports = []
        for field_name, values in fields.items():
            if check == "michael_simon":
                reps = [sobolev.michael_simon_check(cache, values, cfg["n"])]
            elif check == "nonlinear_sobolev":
                reps = list(sobolev.nonlinear_sobolev_check(
                    cache, values, cfg["n"], cfg["k"]).values())
            else:
                reps = [sobolev.gradient_form_check(cache, values, cfg["n"], cfg["k"])]
            for rep in reps:
                d = rep.to_dict()
                d["field"] = field_name
                reports.append(d)
        out[check] = reports
    return out


def _validate_flow_checks(cfg: dict) -> None:
    wants_blowup = {"blowup_sequence", "extension_monitor"}
    if "blowup_sequence" in cfg["checks"] and cfg["blowup_threshold"] is None:
        raise HypothesisViolated("blowup_sequence requires blowup_threshold")
    if "sup_bound" in cfg["checks"] and (cfg["n"] + 1) < cfg["k"]:
        raise HypothesisViolated(
            f"sup_bound needs n + 1 >= k, got (n, k) = ({cfg['n']}, {cfg['k']})"
        )
    del wants_blowup


def cmd_flow(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _validate_flow_checks(cfg)
    mesh = build_mesh(cfg["mesh"])
    n, k = cfg["n"], cfg["k"]
    alphas = sorted(set(cfg["alphas"]) | {float(n + k + 1)})
    params = flow.FlowParams(
        k=k, dt_safety=cfg["dt_safety"], dt_min=cfg["dt_min"],
        stop_T=cfg["stop_T"], blowup_threshold=cfg["blowup_threshold"],
        quality_floor=cfg["quality_floor"],
    )
    traj = flow.run(mesh, params, alphas=alphas, snapshot_stride=cfg["snapshot_stride"])

    out_dir = cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    io.write_trajectory_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    io.write_snapshots(traj, os.path.join(out_dir, "snapshots"))
    io.write_plot_script(os.path.join(out_dir, "plot.gp"), "trajectory.csv", alphas)

    report: dict = {
        "kind": "flow_report",
        "config": {key: cfg[key] for key in sorted(cfg)},
        "backend": backend_name(),
        "run": {
            "termination": traj.termination,
            "final_time": traj.final_time,
            "steps": traj.num_steps,
            "final_area": float(traj.step_log["area"][-1]),
            "accumulators": {f"{a:g}": v for a, v in traj.accumulators.items()},
        },
        "checks": _static_check_reports(mesh, cfg),
        "extension": None,
        "residuals": None,
        "tmax_estimate": None,
        "typeI_rate": None,
        "moser_iteration": None,
        "blowup": None,
    }

    checks = cfg["checks"]
    if "evolution_residuals" in checks:
        res = flow.evolution_residuals(traj, params)
        report["residuals"] = {key: [float(x) for x in val] for key, val in res.items()}
    if "spacetime_sobolev" in checks:
        rep = sobolev.spacetime_sobolev_check(
            traj, lambda s: np.ones(s.mesh.num_vertices), n, k)
        rep_h = sobolev.spacetime_sobolev_check(
            traj, lambda s: s.cache.mean_curvature, n, k)
        d1, d2 = rep.to_dict(), rep_h.to_dict()
        d1["field"] = "const_one"
        d2["field"] = "mean_curvature"
        report["checks"]["spacetime_sobolev"] = [d1, d2]
    if "energy_estimate" in checks:
        eta = moser.cutoff_schedule(traj.final_time, 2).cutoffs[0]
        rep = moser.energy_estimate_check(traj, k=k, beta=cfg["energy_beta"], eta=eta)
        report["checks"]["energy_estimate"] = [rep.to_dict()]
    if "moser_iterate" in checks:
        beta0 = cfg["moser_beta0"] or max(2.0, (n + k + 1) / k)
        report["moser_iteration"] = moser.iterate_norms(
            traj, k=k, beta0=beta0, m_max=cfg["moser_m_max"])
    if "sup_bound" in checks:
        rep = moser.sup_bound_check(traj, k=k)
        report["checks"]["sup_bound"] = [rep.to_dict()]
    if "extension_monitor" in checks:
        alpha = cfg["monitor_alpha"] or float(n + k + 1)
        ext = extension.monitor(traj, C=cfg["monitor_C"], alpha=alpha)
        report["extension"] = ext.to_dict()
        report["tmax_estimate"] = ext.tmax_estimate
    if traj.termination == "blowup_threshold":
        report["typeI_rate"] = extension.typeI_rate(traj, k)
    if "blowup_sequence" in checks:
        seq = extension.blowup_sequence(traj, k, cfg["blowup_count"])
        report["blowup"] = {
            "k": seq.k,
            "entries": [
                {
                    "index": e.index, "time": e.time, "vertex": e.vertex, "Q": e.Q,
                    "max_rescaled_power": e.max_rescaled_power,
                    "value_at_vertex_power": e.value_at_vertex_power,
                    "curvature_cv": e.curvature_cv,
                }
                for e in seq.entries
            ],
        }
        for e in seq.entries:
            io.write_off(e.rescaled_snapshot,
                         os.path.join(out_dir, f"blowup_{e.index:05d}.off"))

    io.write_json(report, os.path.join(out_dir, "report.json"))
    print(json.dumps({"kind": "flow_report_summary",
                      "termination": traj.termination,
                      "final_time": traj.final_time,
                      "steps": traj.num_steps,
                      "output_dir": out_dir}, sort_keys=True))
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if not cfg["checks"]:
        cfg["checks"] = list(STATIC_CHECKS)
    mesh = build_mesh(cfg["mesh"])
    report = {
        "kind": "diagnose_report",
        "config": {key: cfg[key] for key in sorted(cfg)},
        "backend": backend_name(),
        "checks": _static_check_reports(mesh, cfg),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output_dir:
        os.makedirs(cfg["output_dir"], exist_ok=True)
        io.write_json(report, os.path.join(cfg["output_dir"], "diagnose.json"))
    print(text)
    return EXIT_OK


def cmd_constants(args: argparse.Namespace) -> int:
    sc = sobolev.compute_constants(args.n, args.k, volume=args.volume, T=args.T)
    report: dict = {"kind": "constants_report", "sobolev": sc.as_dict(), "moser": None}
    mc = moser.compute_moser_constants(
        args.n, args.k, T=args.T, volume=args.volume, C0inf=args.C0inf,
        H_norm_accum=args.H_norm, C2=args.C2,
        q=math.inf if args.q is None else args.q, beta=args.beta,
    )
    report["moser"] = mc.as_dict()
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for section in ("sobolev", "moser"):
            print(f"[{section}]")
            for key, val in report[section].items():
                print(f"  {key} = {val:.12g}")
    return EXIT_OK


def cmd_sphere(args: argparse.Namespace) -> int:
    sol = analytic.SphereSolution(args.n, args.k, args.r0)
    report: dict = {
        "kind": "sphere_report",
        "n": args.n, "k": args.k, "r0": args.r0, "tmax": sol.tmax,
        "radius_queries": [], "norm_queries": [],
    }
    for t in args.t or []:
        report["radius_queries"].append({
            "t": t, "radius": sol.radius(t), "mean_curvature": sol.mean_curvature(t),
        })
    for alpha in args.alpha or []:
        T = args.T if args.T is not None else sol.tmax
        norm = sol.spacetime_norm(alpha, T)
        report["norm_queries"].append({
            "alpha": alpha, "T": T,
            "norm": "inf" if math.isinf(norm) else norm,
            "divergent": math.isinf(norm),
        })
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(f"tmax = {sol.tmax:.12g}")
        for rq in report["radius_queries"]:
            print(f"t = {rq['t']:.12g}: r = {rq['radius']:.12g}, "
                  f"H = {rq['mean_curvature']:.12g}")
        for nq in report["norm_queries"]:
            print(f"alpha = {nq['alpha']:g}, T = {nq['T']:.12g}: "
                  f"norm = {nq['norm'] if nq['divergent'] else format(nq['norm'], '.12g')}")
    return EXIT_OK


def cmd_blowup(args: argparse.Namespace) -> int:
    traj = io.read_trajectory_dir(args.run_dir)
    k = args.k if args.k is not None else traj.params.k
    seq = extension.blowup_sequence(traj, k, args.count)
    report: dict = {
        "kind": "blowup_report",
        "k": k,
        "tmax_estimate": flow.estimate_tmax(traj, k).tmax,
        "typeI_rate": extension.typeI_rate(traj, k),
        "extension": extension.monitor(
            traj, C=args.monitor_C,
            alpha=args.monitor_alpha or float(traj.n + k + 1)).to_dict(),
        "entries": [
            {
                "index": e.index, "time": e.time, "vertex": e.vertex, "Q": e.Q,
                "max_rescaled_power": e.max_rescaled_power,
                "value_at_vertex_power": e.value_at_vertex_power,
                "curvature_cv": e.curvature_cv,
            }
            for e in seq.entries
        ],
    }
    io.write_json(report, os.path.join(args.run_dir, "blowup.json"))
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    for key in CONFIG_SCHEMA:
        parser.add_argument(f"--{key}", dest=key, default=None,
                            help=f"override config key {key}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hkflow",
        description="H^k mean curvature flow on triangle meshes with "
                    "inequality verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_flow = sub.add_parser("flow", help="integrate a flow and run diagnostics")
    _add_config_flags(p_flow)
    p_flow.set_defaults(func=cmd_flow)

    p_diag = sub.add_parser("diagnose", help="static-mesh inequality checks")
    _add_config_flags(p_diag)
    p_diag.set_defaults(func=cmd_diagnose)

    p_const = sub.add_parser("constants", help="print every named constant")
    p_const.add_argument("--n", type=int, required=True)
    p_const.add_argument("--k", type=int, required=True)
    p_const.add_argument("--T", type=float, default=1.0)
    p_const.add_argument("--volume", type=float, default=4.0 * math.pi)
    p_const.add_argument("--C0inf", type=float, default=1.0)
    p_const.add_argument("--C2", type=float, default=1.0)
    p_const.add_argument("--H-norm", dest="H_norm", type=float, default=0.0)
    p_const.add_argument("--q", type=float, default=None,
                         help="integrability exponent; omit for infinity")
    p_const.add_argument("--beta", type=float, default=2.0)
    p_const.add_argument("--json", action="store_true")
    p_const.set_defaults(func=cmd_constants)

    p_sphere = sub.add_parser("sphere", help="closed-form sphere solution queries")
    p_sphere.add_argument("--n", type=int, default=2)
    p_sphere.add_argument("--k", type=int, default=2)
    p_sphere.add_argument("--r0", type=float, default=1.0)
    p_sphere.add_argument("--t", type=float, action="append",
                          help="time at which to report r(t), H(t)")
    p_sphere.add_argument("--alpha", type=float, action="append",
                          help="space-time norm exponent to query")
    p_sphere.add_argument("--T", type=float, default=None,
                          help="norm window end (default tmax)")
    p_sphere.add_argument("--json", action="store_true")
    p_sphere.set_defaults(func=cmd_sphere)

    p_blow = sub.add_parser("blowup", help="post-process a stored run directory")
    p_blow.add_argument("run_dir")
    p_blow.add_argument("--k", type=int, default=None)
    p_blow.add_argument("--count", type=int, default=3)
    p_blow.add_argument("--monitor-C", dest="monitor_C", type=float, default=0.1)
    p_blow.add_argument("--monitor-alpha", dest="monitor_alpha", type=float,
                        default=None)
    p_blow.set_defaults(func=cmd_blowup)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except _IO_ERRORS as exc:
        print(json.dumps(_json_error(exc), sort_keys=True))
        return EXIT_IO
    except _HYPOTHESIS_ERRORS as exc:
        print(json.dumps(_json_error(exc), sort_keys=True))
        return EXIT_HYPOTHESIS
    except (HkflowError, FloatingPointError, ArithmeticError) as exc:
        print(json.dumps(_json_error(exc), sort_keys=True))
        return EXIT_NUMERICAL
    except OSError as exc:
        print(json.dumps(_json_error(exc), sort_keys=True))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
