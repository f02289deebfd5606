"""Batch dataset generation: plan -> runs -> clips -> manifest.

Directory layout under the output root:

    manifest.json
    <target>/<tx_az>_<tx_el>_<pol>/run.bsar
    <target>/<tx_az>_<tx_el>_<pol>/clips/NNN.png
    <target>/<tx_az>_<tx_el>_<pol>/clips/NNN.json

The manifest is written up front with every planned run (dry-run stops
there), then rewritten as runs complete, so every artifact on disk is
reachable from it.  A rerun skips runs whose files already verify
(matching config digest and payload checksum), which makes interrupted
generations resumable and repeated generations idempotent.  Runs execute
in a process pool; each run is pure and deterministic, so worker count
cannot change the artifacts.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os

from . import imaging
from .config import build_scene, imaging_params, sweep_config_from
from .container import ContainerError, creation_timestamp
from .sweep import (SweepConfig, load_run, load_run_header, plan_dataset,
                    run_sweep, save_run)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_digest(cfg_dict):
    return hashlib.sha256(
        json.dumps(cfg_dict, sort_keys=True).encode()
    ).hexdigest()[:16]


def run_dir_name(planned):
    c = planned.config
    return f"{c.tx_azimuth_deg:g}_{c.tx_elevation_deg:g}_{c.tx_polarization}"


def _planned_entry(planned):
    return {
        "target": planned.target,
        "dir": f"{planned.target}/{run_dir_name(planned)}",
        "sweep_config": planned.config.to_dict(),
        "config_digest": config_digest(planned.config.to_dict()),
        "status": "planned",
    }


def write_manifest(out_dir, manifest):
    path = os.path.join(out_dir, "manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)
    return path


def _run_complete(out_dir, entry):
    """True when the run file on disk matches the planned config."""
    run_path = os.path.join(out_dir, entry["dir"], "run.bsar")
    if not os.path.exists(run_path):
        return False
    try:
        header = load_run_header(run_path)
    except (ContainerError, ValueError):
        return False
    return config_digest(header["sweep_config"]) == entry["config_digest"]


def execute_run(project_cfg, entry, out_dir):
    """Worker: simulate one planned run and form its clips.

    Skips the sweep when a verified run file already exists; always
    (re)creates missing clips.  Returns the completed manifest entry.
    """
    img_par = imaging_params(project_cfg)
    run_dir = os.path.join(out_dir, entry["dir"])
    clips_dir = os.path.join(run_dir, "clips")
    os.makedirs(clips_dir, exist_ok=True)
    run_path = os.path.join(run_dir, "run.bsar")

    cfg = SweepConfig.from_dict(entry["sweep_config"])
    detail = project_cfg.get("dataset", {}).get("detail", "coarse")
    if _run_complete(out_dir, entry):
        run = load_run(run_path)
    else:
        mesh = build_scene(project_cfg, extra_target=entry["target"], detail=detail,
                           name=entry["target"])
        run = run_sweep(mesh, cfg)
        save_run(run, run_path)

    run_hash = file_sha256(run_path)
    clips, skipped = imaging.clip_series(
        run,
        swath_deg=img_par["swath_deg"],
        stride_steps=img_par["stride_steps"],
        window=img_par["window"],
        nx=img_par["grid"], ny=img_par["grid"],
        image_nx=img_par["image_grid"], image_ny=img_par["image_grid"],
        oversample=img_par["oversample"],
    )
    clip_records = []
    for n, clip in enumerate(clips):
        png = os.path.join(clips_dir, f"{n:03d}.png")
        sidecar = os.path.join(clips_dir, f"{n:03d}.json")
        imaging.save_png(clip, png, floor_db=img_par["floor_db"])
        imaging.write_sidecar(clip, sidecar, cfg=run.config, extra={
            "run_file": "../run.bsar",
            "run_sha256": run_hash,
            "start_index": clip.meta.get("start_index"),
        })
        clip_records.append({
            "png": f"{entry['dir']}/clips/{n:03d}.png",
            "json": f"{entry['dir']}/clips/{n:03d}.json",
            "start_index": clip.meta.get("start_index"),
            "beta_mean_deg": clip.beta_mean_deg,
            "png_sha256": file_sha256(png),
            "json_sha256": file_sha256(sidecar),
        })

    done = dict(entry)
    done.update({
        "status": "done",
        "run_file": f"{entry['dir']}/run.bsar",
        "run_sha256": run_hash,
        "mesh_hash": run.mesh_hash,
        "clips": clip_records,
        "skipped_clips": [{"start_index": s, "reason": r} for s, r in skipped],
    })
    return done


def generate_dataset(project_cfg, out_dir, jobs=1, dry_run=False, log=print):
    """Execute the full dataset plan; returns the manifest dict."""
    ds = project_cfg.get("dataset", {})
    targets = ds.get("targets", ["MSL"])
    plan = plan_dataset(
        targets,
        tx_azimuths_deg=ds.get("tx_azimuths_deg"),
        elevations_deg=ds.get("elevations_deg", (10.0, 15.0)),
        polarizations=ds.get("polarizations", ("H",)),
        base_config=sweep_config_from(project_cfg) if "sweep" in project_cfg else None,
    )
    os.makedirs(out_dir, exist_ok=True)
    from .targets import TARGET_DIMENSIONS

    manifest = {
        "schema": "sarforge-dataset-1",
        "created": creation_timestamp(),
        "imaging": imaging_params(project_cfg),
        "target_dimensions": {t: TARGET_DIMENSIONS[t] for t in targets
                              if t in TARGET_DIMENSIONS},
        "runs": [_planned_entry(p) for p in plan],
    }
    write_manifest(out_dir, manifest)
    log(f"planned {len(plan)} runs -> {out_dir}/manifest.json")
    if dry_run:
        return manifest

    clean_cfg = {k: v for k, v in project_cfg.items() if not k.startswith("_")}
    clean_cfg["_base_dir"] = project_cfg.get("_base_dir", ".")
    if jobs <= 1 or len(plan) == 1:
        results = [execute_run(clean_cfg, e, out_dir) for e in manifest["runs"]]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(execute_run, clean_cfg, e, out_dir)
                       for e in manifest["runs"]]
            results = [f.result() for f in futures]
    manifest["runs"] = results
    write_manifest(out_dir, manifest)
    n_clips = sum(len(r["clips"]) for r in results)
    log(f"completed {len(results)} runs, {n_clips} clips")
    return manifest


def verify_tree(out_dir):
    """Compare the manifest against the files on disk.

    Returns (missing, orphans): manifest references without files, and
    files (under the root) no manifest entry accounts for.
    """
    with open(os.path.join(out_dir, "manifest.json")) as f:
        manifest = json.load(f)
    expected = {"manifest.json"}
    for run in manifest["runs"]:
        if run.get("status") != "done":
            continue
        expected.add(run["run_file"])
        for c in run["clips"]:
            expected.add(c["png"])
            expected.add(c["json"])
    actual = set()
    for root, _dirs, files in os.walk(out_dir):
        for fn in files:
            rel = os.path.relpath(os.path.join(root, fn), out_dir)
            actual.add(rel.replace(os.sep, "/"))
    missing = sorted(expected - actual)
    orphans = sorted(actual - expected)
    return missing, orphans


def tree_hash(out_dir):
    """Order-independent digest of every file in the tree (for
    determinism checks)."""
    entries = []
    for root, _dirs, files in os.walk(out_dir):
        for fn in files:
            p = os.path.join(root, fn)
            rel = os.path.relpath(p, out_dir).replace(os.sep, "/")
            entries.append((rel, file_sha256(p)))
    entries.sort()
    h = hashlib.sha256()
    for rel, digest in entries:
        h.update(rel.encode())
        h.update(digest.encode())
    return h.hexdigest()
