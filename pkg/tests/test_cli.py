import csv
import json
import os

import numpy as np
import pytest

from sarforge import dataset as ds
from sarforge import validate
from sarforge.cli import main
from sarforge.config import ConfigError, load_config, validate_config
from sarforge.oracle import specular_peaks
from sarforge.po import reset_illuminate_call_count, illuminate_call_count


def write_config(tmp_path, cfg, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


PRISM_RCS_CONFIG = {
    "scene": {"objects": [{"kind": "primitive", "primitive": "prism",
                           "dims": {"width": 1, "length": 1, "height": 10}}]},
    "rcs": {"frequency_hz": 1e9, "tx_azimuth_deg": 45.0, "tx_elevation_deg": 0.0,
            "polarization": "H", "rx_elevation_deg": 0.0},
}

WALL_CONFIG = {
    "scene": {"objects": [{"kind": "primitive", "primitive": "wall_on_ground",
                           "dims": {"wall_length": 4, "wall_thickness": 0.2,
                                    "wall_height": 2, "ground_x": 10,
                                    "ground_y": 10, "max_edge": 0.5}}]},
    "shadowmap": {"tx_azimuth_deg": 0.0, "tx_elevation_deg": 15.0,
                  "polarization": "V"},
}

TINY_DATASET_CONFIG = {
    "scene": {},
    "sweep": {"bandwidth_hz": 30e6, "frequency_step_hz": 15e6,
              "rx_azimuth_step_deg": 7.2},
    "imaging": {"swath_deg": 36.0, "stride_steps": 10},
    "dataset": {"targets": ["MSL"], "detail": "coarse",
                "tx_azimuths_deg": [0.0], "elevations_deg": [15.0],
                "polarizations": ["H"]},
}


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_schema_rejects_bad_window(tmp_path):
    cfg = write_config(tmp_path, {"imaging": {"window": "hann"}})
    assert main(["dataset", "--config", cfg, "--dry-run"]) == 2


def test_schema_error_names_field():
    with pytest.raises(ConfigError) as ei:
        validate_config({"imaging": {"stride_steps": 0}})
    assert "imaging" in str(ei.value) and "stride_steps" in str(ei.value)


def test_missing_mesh_file_exit_2_names_field(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "scene": {"objects": [{"kind": "stl", "path": "missing.stl"}]}})
    rc = main(["rcs", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "scene.objects[0].path" in err and "missing.stl" in err


def test_malformed_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["rcs", "--config", str(p)]) == 2


# ---------------------------------------------------------------------------
# rcs
# ---------------------------------------------------------------------------

def test_cmd_rcs_prism_csv_and_peaks(tmp_path):
    cfg = write_config(tmp_path, PRISM_RCS_CONFIG)
    out = tmp_path / "out"
    assert main(["rcs", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "rcs.csv").read_text().splitlines()
    data = [l for l in lines if not l.startswith("#")]
    assert len(data) == 1 + 500            # header + rows
    peak_lines = [l for l in lines if l.startswith("# peak")]
    assert len(peak_lines) == 3
    found = sorted(float(l.split("azimuth=")[1].split()[0]) for l in peak_lines)
    expected = sorted(specular_peaks([0, 90, 180, 270], 45.0))
    for f, e in zip(found, expected):
        assert abs(f - e) <= 2.0


def test_cmd_rcs_plate_broadside_matches_analytic(tmp_path):
    cfg = write_config(tmp_path, {
        "scene": {"objects": [{"kind": "primitive", "primitive": "plate",
                               "dims": {"width": 1, "length": 1}}]},
        "rcs": {"frequency_hz": 1e9, "tx_azimuth_deg": 0.0,
                "tx_elevation_deg": 90.0, "polarization": "H",
                "rx_elevation_deg": 90.0, "rx_azimuth_step_deg": 90.0},
    })
    out = tmp_path / "out"
    assert main(["rcs", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "rcs.csv") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    sigma = float(rows[1][1])              # first data row, rx azimuth 0
    from sarforge.oracle import plate_rcs_analytic
    assert sigma == pytest.approx(plate_rcs_analytic(1, 1, 1e9), abs=0.5)


# ---------------------------------------------------------------------------
# shadowmap
# ---------------------------------------------------------------------------

def _shadow_counts(tmp_path, elevation):
    cfg_d = json.loads(json.dumps(WALL_CONFIG))
    cfg_d["shadowmap"]["tx_elevation_deg"] = elevation
    cfg = write_config(tmp_path, cfg_d, name=f"cfg{elevation}.json")
    out = tmp_path / f"out{elevation}"
    assert main(["shadowmap", "--config", cfg, "--out", str(out)]) == 0
    unlit = 0
    with open(out / "shadowmap.csv") as f:
        rows = list(csv.DictReader(f))
    for r in rows:
        if r["lit"] == "0":
            unlit += 1
            for key in ("re_jx", "im_jx", "re_jy", "im_jy", "re_jz", "im_jz"):
                assert float(r[key]) == 0.0
    return unlit, len(rows)


def test_cmd_shadowmap_zero_current_in_shadow(tmp_path):
    unlit15, total = _shadow_counts(tmp_path, 15.0)
    assert total == 812
    assert unlit15 > 0


def test_cmd_shadowmap_shadow_shrinks_with_elevation(tmp_path):
    unlit15, _ = _shadow_counts(tmp_path, 15.0)
    unlit45, _ = _shadow_counts(tmp_path, 45.0)
    assert unlit45 < unlit15


def test_cmd_shadowmap_needs_ground(tmp_path):
    cfg = write_config(tmp_path, {
        "scene": {"objects": [{"kind": "primitive", "primitive": "box",
                               "dims": {"width": 1, "length": 1, "height": 1}}]},
        "shadowmap": {},
    })
    assert main(["shadowmap", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------------------
# sweep + image
# ---------------------------------------------------------------------------

def test_cmd_sweep_and_image_pipeline(tmp_path):
    cfg = write_config(tmp_path, {
        "scene": {"objects": [{"kind": "primitive", "primitive": "box",
                               "dims": {"width": 0.5, "length": 0.5,
                                        "height": 0.5}}]},
        "sweep": {"tx_azimuth_deg": 0.0, "tx_elevation_deg": 15.0,
                  "rx_elevation_deg": 15.0, "bandwidth_hz": 30e6,
                  "frequency_step_hz": 15e6, "rx_azimuth_step_deg": 7.2},
        "imaging": {"swath_deg": 36.0, "stride_steps": 10},
    })
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    run_file = out / "run.bsar"
    assert run_file.exists()
    img_out = tmp_path / "clips"
    assert main(["image", "--run", str(run_file), "--config", cfg,
                 "--out", str(img_out)]) == 0
    pngs = sorted(img_out.glob("*.png"))
    assert len(pngs) == 5                   # 50 azimuths / stride 10
    sidecar = json.loads((img_out / "000.json").read_text())
    assert "beta_mean_deg" in sidecar and "predicted" in sidecar


def test_cmd_image_requires_run(tmp_path, capsys):
    assert main(["image", "--out", str(tmp_path)]) == 2


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

def test_dataset_dry_run_declares_plan(tmp_path):
    cfg = write_config(tmp_path, TINY_DATASET_CONFIG)
    out = tmp_path / "ds"
    assert main(["dataset", "--config", cfg, "--out", str(out), "--dry-run"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["runs"]) == 1
    assert manifest["runs"][0]["status"] == "planned"
    assert not (out / "MSL").exists()


def test_dataset_full_plan_dry_run_counts(tmp_path):
    cfg_d = json.loads(json.dumps(TINY_DATASET_CONFIG))
    cfg_d["dataset"] = {"targets": ["APC", "MBT", "STR", "MSL"],
                        "polarizations": ["H", "V"]}
    cfg = write_config(tmp_path, cfg_d)
    out = tmp_path / "ds"
    assert main(["dataset", "--config", cfg, "--out", str(out), "--dry-run"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["runs"]) == 384     # 4 targets x 48 x 2 polarizations


def test_dataset_generate_resume_and_tree(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "946684800")
    cfg = write_config(tmp_path, TINY_DATASET_CONFIG)
    out = tmp_path / "ds"
    assert main(["dataset", "--config", cfg, "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    run0 = manifest["runs"][0]
    assert run0["status"] == "done"
    assert len(run0["clips"]) == 5
    assert (out / run0["run_file"]).exists()
    h1 = ds.tree_hash(str(out))
    missing, orphans = ds.verify_tree(str(out))
    assert missing == [] and orphans == []

    # resume: the sweep must be skipped (no illuminate calls), tree unchanged
    reset_illuminate_call_count()
    assert main(["dataset", "--config", cfg, "--out", str(out)]) == 0
    assert illuminate_call_count() == 0
    assert ds.tree_hash(str(out)) == h1


def test_dataset_orphan_detection(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "946684800")
    cfg = write_config(tmp_path, TINY_DATASET_CONFIG)
    out = tmp_path / "ds"
    assert main(["dataset", "--config", cfg, "--out", str(out)]) == 0
    (out / "stray.txt").write_text("boo")
    missing, orphans = ds.verify_tree(str(out))
    assert orphans == ["stray.txt"] and missing == []


def test_sarforge_out_env_override(tmp_path, monkeypatch):
    out = tmp_path / "env-out"
    monkeypatch.setenv("SARFORGE_OUT", str(out))
    cfg = write_config(tmp_path, PRISM_RCS_CONFIG)
    assert main(["rcs", "--config", cfg]) == 0
    assert (out / "rcs.csv").exists()


# ---------------------------------------------------------------------------
# validate: negative control
# ---------------------------------------------------------------------------

def test_perturbed_keystone_fails_shift_theorem(monkeypatch):
    r = validate.check_shift_theorem()
    assert r.passed
    monkeypatch.setenv("SARFORGE_TEST_PERTURB", "keystone")
    r2 = validate.check_shift_theorem()
    assert not r2.passed


def test_validate_reports_resolution_detail():
    r = validate.check_bistatic_degradation()
    assert r.passed
    assert "predicted" in r.detail and "measured" in r.detail
