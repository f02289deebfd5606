"""Scripted demo scenes: the missile-launcher image built up feature by
feature, for qualitative inspection of how image-domain features track
physical features (flat plate -> body -> antenna -> missile -> ground).

Each stage is a scene mesh; image one stage with `stage_image` and
difference consecutive stages to see what a feature adds.  The stage
geometry uses the standard demo viewing setup: transmitter at azimuth 0,
both elevations 15 degrees, receiver swath starting at azimuth 0.
"""

from __future__ import annotations

import numpy as np

from . import imaging
from .geometry import merge_meshes
from .sweep import SweepConfig, run_sweep
from .targets import TARGET_DIMENSIONS, build_plate, build_target

MSL_STAGES = ("plate", "body", "body+antenna", "body+antenna+missile", "full")


def demo_sweep_config(swath_deg=36.0, elevation_deg=15.0):
    """Partial-circle sweep covering exactly one imaging swath."""
    return SweepConfig(
        rx_elevation_deg=elevation_deg,
        tx_azimuth_deg=0.0,
        tx_elevation_deg=elevation_deg,
        tx_polarization="H",
        rx_azimuth_start_deg=0.0,
        rx_azimuth_end_deg=swath_deg,
    )


def msl_stage_mesh(stage, detail="coarse", ground_size=(10.0, 10.0),
                   ground_edge=0.5):
    """Scene mesh for one build-up stage of the missile launcher."""
    if stage == "plate":
        base_l, base_w, _ = TARGET_DIMENSIONS["MSL"]["base"]
        return build_plate(base_l, base_w, name="plate")
    msl = build_target("MSL", detail)
    keep_parts = {"base", "cab"}
    if stage in ("body+antenna", "body+antenna+missile", "full"):
        keep_parts.add("antenna")
    if stage in ("body+antenna+missile", "full"):
        keep_parts.add("missile")
    idx = np.concatenate([msl.part_facets(p) for p in sorted(keep_parts)])
    scene = msl.submesh(np.sort(idx), name=f"msl-{stage}")
    if stage == "full":
        ground = build_plate(ground_size[0], ground_size[1],
                             max_edge=ground_edge, name="ground")
        scene = merge_meshes([scene, ground], name="msl-full")
    return scene


def stage_image(stage, swath_deg=36.0, detail="coarse", image_grid=256):
    """Run the demo sweep for one stage and form its clip."""
    cfg = demo_sweep_config(swath_deg)
    mesh = msl_stage_mesh(stage, detail)
    run = run_sweep(mesh, cfg)
    return imaging.form_clip(run, 0, swath_deg,
                             image_nx=image_grid, image_ny=image_grid)


def feature_difference(img_with, img_without):
    """Coherent difference image isolating what a feature added."""
    if img_with.pixels.shape != img_without.pixels.shape:
        raise ValueError("stage images must share a grid")
    out = imaging.SarImage(
        pixels=img_with.pixels - img_without.pixels,
        dx=img_with.dx, dy=img_with.dy,
        theta_deg=img_with.theta_deg,
        beta_mean_deg=img_with.beta_mean_deg,
        window=img_with.window,
        meta={"difference": True},
    )
    return out
