import json
import os
import subprocess
import sys

import pytest

jsonschema = pytest.importorskip("jsonschema")

SCHEMA_PATH = os.path.join(
    os.path.dirname(__file__), "..", "src", "hkflow", "schema", "report.schema.json")
with open(SCHEMA_PATH) as fh:
    SCHEMA = json.load(fh)


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "hkflow.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def validate(doc):
    jsonschema.validate(doc, SCHEMA)


def test_sphere_command(tmp_path):
    out = run_cli(["sphere", "--n", "2", "--k", "2", "--t", "0.0416666666666666",
                   "--alpha", "4", "--alpha", "5", "--json"], tmp_path)
    assert out.returncode == 0
    doc = json.loads(out.stdout)
    validate(doc)
    assert doc["tmax"] == pytest.approx(1 / 12)
    assert doc["radius_queries"][0]["radius"] == pytest.approx(0.5 ** (1 / 3), rel=1e-6)
    norms = {q["alpha"]: q for q in doc["norm_queries"]}
    assert norms[4.0]["norm"] == pytest.approx((16 * 3.141592653589793) ** 0.25)
    assert norms[5.0]["divergent"] is True


def test_sphere_beyond_tmax_exit3(tmp_path):
    out = run_cli(["sphere", "--n", "2", "--k", "2", "--t", "0.2"], tmp_path)
    assert out.returncode == 3
    doc = json.loads(out.stdout)
    validate(doc)
    assert doc["error"] == "TimeBeyondTmax"


def test_constants_command(tmp_path):
    out = run_cli(["constants", "--n", "2", "--k", "2", "--T", "1",
                   "--volume", "12.566370614359172", "--json"], tmp_path)
    assert out.returncode == 0
    doc = json.loads(out.stdout)
    validate(doc)
    assert doc["sobolev"]["Q_k"] == 4.0
    assert doc["sobolev"]["gamma"] == 3.125
    import math

    assert doc["sobolev"]["c_n"] == pytest.approx(64 / math.sqrt(4 * math.pi),
                                                  rel=1e-12)


def test_constants_rejects_2_4(tmp_path):
    out = run_cli(["constants", "--n", "2", "--k", "4"], tmp_path)
    assert out.returncode == 3
    doc = json.loads(out.stdout)
    assert doc["error"] == "HypothesisViolated"


def test_mesh_not_found_exit2(tmp_path):
    out = run_cli(["flow", "--mesh", "does_not_exist.off"], tmp_path)
    assert out.returncode == 2
    doc = json.loads(out.stdout)
    validate(doc)
    assert doc["error"] == "MeshNotFound"


def test_flow_run_and_reports(tmp_path):
    out = run_cli([
        "flow", "--mesh", "icosphere:3:1.0", "--k", "2", "--stop_T", "0.01",
        "--snapshot_stride", "2",
        "--checks", "michael_simon,evolution_residuals,spacetime_sobolev",
        "--output_dir", "out",
    ], tmp_path)
    assert out.returncode == 0, out.stdout + out.stderr
    report = json.load(open(tmp_path / "out" / "report.json"))
    validate(report)
    assert report["run"]["termination"] == "reached_T"
    assert all(c["holds"] for c in report["checks"]["michael_simon"])
    assert all(c["holds"] for c in report["checks"]["spacetime_sobolev"])
    assert max(report["residuals"]["volume_form_rel_l1"]) < 0.05
    manifest = json.load(open(tmp_path / "out" / "snapshots" / "manifest.json"))
    validate(manifest)
    csv_lines = open(tmp_path / "out" / "trajectory.csv").read().splitlines()
    assert csv_lines[0].startswith("step,time,dt,")
    assert len(csv_lines) == report["run"]["steps"] + 2
    assert (tmp_path / "out" / "plot.gp").exists()


def test_flow_blowup_with_diagnostics(tmp_path):
    out = run_cli([
        "flow", "--mesh", "icosphere:3:1.0", "--k", "2",
        "--blowup_threshold", "1e4", "--snapshot_stride", "10",
        "--checks", "extension_monitor,blowup_sequence,sup_bound",
        "--monitor_C", "0.5", "--output_dir", "runout",
    ], tmp_path)
    assert out.returncode == 0, out.stdout + out.stderr
    report = json.load(open(tmp_path / "runout" / "report.json"))
    validate(report)
    assert report["run"]["termination"] == "blowup_threshold"
    assert report["extension"]["verdict"] == "singularity_consistent"
    assert report["tmax_estimate"] == pytest.approx(1 / 12, rel=0.02)
    assert report["typeI_rate"] == pytest.approx(2 / 3, rel=0.05)
    for entry in report["blowup"]["entries"]:
        assert 0.98 <= entry["max_rescaled_power"] <= 1.02

    # post-process the stored directory
    out2 = run_cli(["blowup", "runout", "--count", "2", "--monitor-C", "0.5"], tmp_path)
    assert out2.returncode == 0, out2.stdout + out2.stderr
    doc = json.loads(out2.stdout)
    validate(doc)
    blow = json.load(open(tmp_path / "runout" / "blowup.json"))
    validate(blow)
    assert blow["typeI_rate"] == pytest.approx(2 / 3, rel=0.05)


def test_diagnose_command(tmp_path):
    out = run_cli(["diagnose", "--mesh", "icosphere:3:1.0", "--seed", "1"], tmp_path)
    assert out.returncode == 0, out.stdout + out.stderr
    doc = json.loads(out.stdout)
    validate(doc)
    for name in ("michael_simon", "nonlinear_sobolev", "gradient_form"):
        assert all(c["holds"] for c in doc["checks"][name])


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# flow configuration\n"
        "mesh = icosphere:2:1.0\n"
        "k = 2\n"
        "stop_T = 0.004\n"
        "snapshot_stride = 3\n"
        "output_dir = cfg_out\n"
    )
    out = run_cli(["flow", "--config", str(cfg), "--stop_T", "0.002"], tmp_path)
    assert out.returncode == 0, out.stdout + out.stderr
    report = json.load(open(tmp_path / "cfg_out" / "report.json"))
    assert report["config"]["stop_T"] == 0.002  # flag overrides file
    assert report["config"]["mesh"] == "icosphere:2:1.0"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("meshh = icosphere:2\n")
    out = run_cli(["flow", "--config", str(cfg)], tmp_path)
    assert out.returncode == 3


def test_determinism_byte_identical(tmp_path):
    args = ["flow", "--mesh", "icosphere:2:1.0", "--k", "2", "--stop_T", "0.004",
            "--snapshot_stride", "3", "--checks", "michael_simon",
            "--seed", "7", "--output_dir", "out"]
    for sub in ("a", "b"):
        os.makedirs(tmp_path / sub)
        out = run_cli(args, tmp_path / sub)
        assert out.returncode == 0, out.stdout + out.stderr
    for name in ("trajectory.csv", "report.json", "plot.gp",
                 os.path.join("snapshots", "manifest.json"),
                 os.path.join("snapshots", "snap_00000.off")):
        a = open(tmp_path / "a" / "out" / name, "rb").read()
        b = open(tmp_path / "b" / "out" / name, "rb").read()
        assert a == b, f"{name} differs between identical runs"
