"""Mesh, CSV, JSON, and plot-script I/O for the command-line front end.

Float output always uses repr (shortest round-trip form) so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import InvalidMesh, MeshNotFound
from .flow import FlowParams, FlowTrajectory, _make_state
from .kernels import mesh_pass
from .mesh import Hypersurface

STEP_COLUMNS = ("time", "dt", "h_min", "quality_min", "min_H", "max_H",
                "max_H_pow_kp1", "area")


def _fmt(x: float) -> str:
    return repr(float(x))


def read_off(path: str) -> Hypersurface:
    """Parse an ASCII OFF file (triangles only, comments allowed)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tokens: list[str] = []
            for line in fh:
                body = line.split("#", 1)[0].strip()
                if body:
                    tokens.extend(body.split())
    except OSError as exc:
        raise MeshNotFound(str(exc)) from exc
    if not tokens or tokens[0] != "OFF":
        raise InvalidMesh(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # header + edge count
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            cnt = int(tokens[pos])
            if cnt != 3:
                raise InvalidMesh(f"{path}: only triangle faces supported, got {cnt}")
            faces.append([int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])])
            pos += cnt + 1
    except (ValueError, IndexError) as exc:
        raise InvalidMesh(f"{path}: malformed OFF data ({exc})") from exc
    return Hypersurface(verts, np.array(faces, dtype=np.int32))


def write_off(mesh: Hypersurface, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.num_vertices} {mesh.num_faces} 0\n")
        for v in mesh.vertices:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def read_obj(path: str) -> Hypersurface:
    """Parse a Wavefront OBJ file; vertices and triangular faces only."""
    verts = []
    faces = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    ids = [int(p.split("/")[0]) for p in parts[1:]]
                    if len(ids) != 3:
                        raise InvalidMesh(f"{path}: only triangle faces supported")
                    faces.append([i - 1 for i in ids])
    except OSError as exc:
        raise MeshNotFound(str(exc)) from exc
    except ValueError as exc:
        raise InvalidMesh(f"{path}: malformed OBJ data ({exc})") from exc
    if not verts or not faces:
        raise InvalidMesh(f"{path}: no vertices or faces found")
    return Hypersurface(np.array(verts), np.array(faces, dtype=np.int32))


def write_obj(mesh: Hypersurface, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def load_mesh(path: str) -> Hypersurface:
    """Dispatch on extension: .off or .obj."""
    if not os.path.exists(path):
        raise MeshNotFound(f"mesh file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext == ".off":
        return read_off(path)
    if ext == ".obj":
        return read_obj(path)
    raise InvalidMesh(f"unsupported mesh format {ext!r} (use .off or .obj)")


def accum_column_names(alphas) -> list[str]:
    return [f"accum_alpha_{a:g}" for a in alphas]


def write_trajectory_csv(traj: FlowTrajectory, path: str) -> None:
    """One row per accepted step; columns documented in docs/format.md."""
    alphas = sorted(traj.accum_history)
    header = ["step", *STEP_COLUMNS, *accum_column_names(alphas)]
    nrows = len(traj.step_log["time"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(nrows):
            row = [str(i)]
            row.extend(_fmt(traj.step_log[c][i]) for c in STEP_COLUMNS)
            row.extend(_fmt(traj.accum_history[a][i]) for a in alphas)
            fh.write(",".join(row) + "\n")


def read_trajectory_csv(path: str) -> tuple[dict[str, np.ndarray], dict[float, np.ndarray]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: np.array([float(r[j]) for r in data])
            for j, name in enumerate(header)}
    step_log = {name: cols[name] for name in STEP_COLUMNS}
    accum = {}
    for name, vals in cols.items():
        if name.startswith("accum_alpha_"):
            accum[float(name[len("accum_alpha_"):])] = vals
    return step_log, accum


def write_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_snapshots(traj: FlowTrajectory, out_dir: str) -> dict:
    """OFF snapshots plus a manifest binding files to times and steps."""
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for i, state in enumerate(traj.states):
        name = f"snap_{i:05d}.off"
        write_off(state.mesh, os.path.join(out_dir, name))
        files.append(name)
    manifest = {
        "kind": "trajectory_manifest",
        "k": traj.params.k,
        "n": traj.n,
        "alphas": sorted(traj.accum_history),
        "termination": traj.termination,
        "snapshot_files": files,
        "snapshot_times": [float(s.time) for s in traj.states],
        "snapshot_steps": [int(i) for i in traj.state_steps],
    }
    write_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def read_trajectory_dir(run_dir: str) -> FlowTrajectory:
    """Rebuild a trajectory from trajectory.csv plus the snapshot directory.

    Geometry caches are recomputed from the stored meshes; the step log and
    accumulator histories come back exactly from the CSV.
    """
    manifest_path = os.path.join(run_dir, "snapshots", "manifest.json")
    csv_path = os.path.join(run_dir, "trajectory.csv")
    if not os.path.exists(manifest_path) or not os.path.exists(csv_path):
        raise MeshNotFound(f"{run_dir}: missing trajectory.csv or snapshots/manifest.json")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    step_log, accum = read_trajectory_csv(csv_path)
    states = []
    for name, t in zip(manifest["snapshot_files"], manifest["snapshot_times"]):
        mesh = read_off(os.path.join(run_dir, "snapshots", name))
        normals, h, aw, mixed, stats = mesh_pass(mesh.vertices, mesh.faces)
        states.append(_make_state(float(t), mesh, normals, h, aw, mixed, stats))
    return FlowTrajectory(
        states=states,
        state_steps=[int(i) for i in manifest["snapshot_steps"]],
        step_log=step_log,
        alphas=tuple(float(a) for a in manifest["alphas"]),
        accum_history=accum,
        termination=manifest["termination"],
        params=FlowParams(k=int(manifest["k"])),
        n=int(manifest["n"]),
    )


def write_plot_script(path: str, csv_name: str, alphas) -> None:
    """Emit a gnuplot script for the trajectory CSV (external tool, not run)."""
    accum_cols = accum_column_names(sorted(alphas))
    lines = [
        "# gnuplot script for a flow trajectory CSV",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 1200,900",
        "set output 'trajectory.png'",
        "set multiplot layout 2,2",
        "set logscale y",
        f"plot '{csv_name}' using 2:8 with lines title 'max H^(k+1)'",
        "unset logscale y",
        f"plot '{csv_name}' using 2:9 with lines title 'area'",
        f"plot '{csv_name}' using 2:4 with lines title 'dt'",
    ]
    if accum_cols:
        terms = ", ".join(
            f"'{csv_name}' using 2:{10 + i} with lines title '{c}'"
            for i, c in enumerate(accum_cols)
        )
        lines.append(f"plot {terms}")
    else:
        lines.append(f"plot '{csv_name}' using 2:6 with lines title 'min H'")
    lines.append("unset multiplot")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
