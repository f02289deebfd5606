"""Command-line front end.

Subcommands: rcs, shadowmap, sweep, image, dataset, validate.
Exit codes: 0 success, 1 runtime failure, 2 configuration error.
The SARFORGE_OUT environment variable overrides the output root.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import dataset as ds
from . import imaging, oracle, po, validate
from .config import ConfigError, build_scene, imaging_params, load_config, sweep_config_from
from .sweep import load_run, run_sweep, save_run


def _out_dir(args, default="out"):
    out = args.out or os.environ.get("SARFORGE_OUT") or default
    os.makedirs(out, exist_ok=True)
    return out


def cmd_rcs(args):
    cfg = load_config(args.config)
    mesh = build_scene(cfg)
    r = cfg.get("rcs", {})
    exc = po.PlaneWaveExcitation(
        frequency_hz=r.get("frequency_hz", 1e9),
        tx_azimuth_deg=r.get("tx_azimuth_deg", 45.0),
        tx_elevation_deg=r.get("tx_elevation_deg", 0.0),
        polarization=r.get("polarization", "H"),
    )
    rx_el = r.get("rx_elevation_deg", 0.0)
    step = r.get("rx_azimuth_step_deg", 0.72)
    azimuths = np.arange(0.0, 360.0, step)
    samples, fields = po.bistatic_rcs_sweep(mesh, exc, rx_el, azimuths)
    cross = fields[:, 1] if exc.polarization == "H" else fields[:, 0]
    cross_db = po.rcs_dbsm(cross, exc.amplitude)
    db = np.array([s.sigma_dbsm for s in samples])
    peaks = oracle.circular_peaks(db, azimuths)

    out = _out_dir(args)
    path = os.path.join(out, "rcs.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["rx_azimuth_deg", "sigma_co_dbsm", "sigma_cross_dbsm"])
        for i, s in enumerate(samples):
            w.writerow([f"{s.rx_azimuth_deg:.4f}", f"{s.sigma_dbsm:.6f}",
                        f"{cross_db[i]:.6f}"])
        f.write(f"# scene: {mesh.name} ({mesh.facet_count} facets, hash {mesh.content_hash()})\n")
        f.write(f"# tx az {exc.tx_azimuth_deg} el {exc.tx_elevation_deg} pol {exc.polarization} "
                f"f {exc.frequency_hz:g} Hz, rx el {rx_el}\n")
        f.write(f"# detected peaks ({len(peaks)}):\n")
        for p_az, p_db in peaks:
            f.write(f"# peak azimuth={p_az:.2f} deg level={p_db:.2f} dBsm\n")
    print(f"wrote {path}: {len(samples)} rows, {len(peaks)} peaks "
          f"at {[round(p, 2) for p, _ in peaks]}")
    return 0


def cmd_shadowmap(args):
    cfg = load_config(args.config)
    mesh = build_scene(cfg)
    if "ground" not in mesh.parts and not any(
            n.startswith("wall_on_ground") or n == "ground" for n in mesh.parts):
        raise ConfigError("config.scene: shadowmap needs a scene with a ground patch")
    s = cfg.get("shadowmap", {})
    exc = po.PlaneWaveExcitation(
        frequency_hz=s.get("frequency_hz", 1e9),
        tx_azimuth_deg=s.get("tx_azimuth_deg", 0.0),
        tx_elevation_deg=s.get("tx_elevation_deg", 15.0),
        polarization=s.get("polarization", "V"),
    )
    currents = po.illuminate(mesh, exc)
    out = _out_dir(args)
    path = os.path.join(out, "shadowmap.csv")
    po.current_map_to_csv(mesh, currents, path)
    n_shadow = int((~currents.lit).sum())
    print(f"wrote {path}: {mesh.facet_count} facets, {n_shadow} unlit")
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    mesh = build_scene(cfg)
    sweep_cfg = sweep_config_from(cfg)
    print(f"sweeping {mesh.name}: {mesh.facet_count} facets, "
          f"{sweep_cfg.n_frequencies} frequencies x {sweep_cfg.n_azimuths} azimuths")
    run = run_sweep(mesh, sweep_cfg,
                    progress=lambda i, n: print(f"  frequency {i}/{n}", end="\r"))
    print()
    out = _out_dir(args)
    path = os.path.join(out, "run.bsar")
    save_run(run, path)
    print(f"wrote {path}")
    return 0


def cmd_image(args):
    if not args.run:
        print("error: image requires --run RUNFILE", file=sys.stderr)
        return 2
    cfg = load_config(args.config) if args.config else {}
    par = imaging_params(cfg)
    run = load_run(args.run)
    run_hash = ds.file_sha256(args.run)
    out = _out_dir(args)
    clips, skipped = imaging.clip_series(
        run, swath_deg=par["swath_deg"], stride_steps=par["stride_steps"],
        window=par["window"], nx=par["grid"], ny=par["grid"],
        image_nx=par["image_grid"], image_ny=par["image_grid"],
        oversample=par["oversample"])
    for n, clip in enumerate(clips):
        imaging.save_image(clip, os.path.join(out, f"{n:03d}.bsar"))
        imaging.save_png(clip, os.path.join(out, f"{n:03d}.png"),
                         floor_db=par["floor_db"])
        imaging.write_sidecar(clip, os.path.join(out, f"{n:03d}.json"),
                              cfg=run.config, extra={"run_sha256": run_hash})
    print(f"wrote {len(clips)} clips to {out}"
          + (f" ({len(skipped)} skipped: support collapsed)" if skipped else ""))
    return 0


def cmd_dataset(args):
    cfg = load_config(args.config)
    out = args.out or os.environ.get("SARFORGE_OUT") or cfg.get("output_dir", "dataset")
    ds.generate_dataset(cfg, out, jobs=args.jobs, dry_run=args.dry_run)
    return 0


def cmd_validate(args):
    results = validate.run_all_checks(skip_slow=args.skip_slow)
    name_w = max(len(r.name) for r in results)
    print(f"{'check':<{name_w}}  {'crit':>4}  {'status':<6}  measured | expected")
    print("-" * 100)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{name_w}}  {r.criterion:>4}  {status:<6}  "
              f"{r.measured}  |  {r.expected}  [{r.elapsed_s:.1f} s]")
        if r.detail and args.verbose:
            for line in r.detail.splitlines():
                print(f"{'':<{name_w}}        {line}")
    n_fail = sum(not r.passed for r in results)
    print("-" * 100)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 1 if n_fail else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sarforge",
        description="Bistatic SAR signature simulation: PO solver, sweeps, "
                    "keystone polar-format imaging, dataset generation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, needs_config=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=needs_config, help="project config JSON")
        p.add_argument("--out", help="output directory (SARFORGE_OUT overrides)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--dry-run", action="store_true",
                       help="plan only; write the manifest and stop")
        p.set_defaults(fn=fn)
        return p

    add("rcs", cmd_rcs, "bistatic RCS sweep to CSV")
    add("shadowmap", cmd_shadowmap, "per-facet surface-current CSV with lit flags")
    add("sweep", cmd_sweep, "run one stepped-frequency sweep to a BSAR1 file")
    add("dataset", cmd_dataset, "generate the full run/clip dataset tree")
    p_img = add("image", cmd_image, "form image clips from a run file",
                needs_config=False)
    p_img.add_argument("--run", help="input run.bsar")
    p_val = add("validate", cmd_validate, "run the built-in validation suite",
                needs_config=False)
    p_val.add_argument("--skip-slow", action="store_true",
                       help="skip the multi-minute MSL demo determinism check")
    p_val.add_argument("--verbose", action="store_true", help="print per-check detail")

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
