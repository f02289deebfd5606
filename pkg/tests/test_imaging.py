import numpy as np
import pytest

from sarforge import (
    PointScatterer,
    SupportCollapsedError,
    SweepConfig,
    UnboundedResolutionError,
    clip_series,
    extract_patch,
    form_clip,
    form_image,
    keystone_resample,
    kspace_coords,
    load_image,
    predict_geometry,
    save_image,
    save_pgm,
    save_png,
    synth_run,
)
from sarforge.constants import SPEED_OF_LIGHT
from sarforge.geometry import direction_from_angles
from sarforge.oracle import find_peak


def default_cfg(**kw):
    d = dict(rx_elevation_deg=10.0, tx_azimuth_deg=0.0, tx_elevation_deg=10.0)
    d.update(kw)
    return SweepConfig(**d)


# ---------------------------------------------------------------------------
# kspace_coords
# ---------------------------------------------------------------------------

def test_kspace_monostatic():
    d = direction_from_angles(30, 0)
    kx, ky, beta = kspace_coords(d, d, 1e9)
    assert beta == pytest.approx(0.0, abs=1e-9)
    assert np.hypot(kx, ky) == pytest.approx(4 * np.pi * 1e9 / SPEED_OF_LIGHT)
    assert np.hypot(kx, ky) == pytest.approx(41.917, abs=1e-3)


def test_kspace_forward_nullifies():
    d = direction_from_angles(10, 0)
    kx, ky, beta = kspace_coords(d, -d, 1e9)
    assert beta == pytest.approx(180.0)
    assert np.hypot(kx, ky) == pytest.approx(0.0, abs=1e-12)


def test_kspace_bistatic_example():
    tx = direction_from_angles(0, 15)
    rx = direction_from_angles(30, 15)
    _, _, beta = kspace_coords(tx, rx, 1e9)
    assert beta == pytest.approx(28.96, abs=0.05)
    assert np.cos(np.deg2rad(beta) / 2) == pytest.approx(0.968, abs=5e-4)


# ---------------------------------------------------------------------------
# extract_patch
# ---------------------------------------------------------------------------

def test_patch_default_dimensions():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 0, 36.0)
    assert patch.values.shape == (50, 51)
    assert patch.kx.shape == (50, 51)
    assert patch.beta.shape == (50, 51)


def test_patch_wraparound():
    run = synth_run([PointScatterer((1, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 490, 36.0)
    assert patch.values.shape == (50, 51)
    # wrapped part must equal the run's first columns
    assert np.array_equal(patch.values[10:], run.samples[:40, :, 0])
    # azimuth coordinate stays monotone across the wrap
    assert np.all(np.diff(patch.rx_azimuths_deg) > 0)


def test_patch_swath_must_be_integral():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    with pytest.raises(ValueError):
        extract_patch(run, 0, 36.5)


def test_single_column_patch_accepted():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 3, 0.72)
    assert patch.values.shape == (1, 51)


# ---------------------------------------------------------------------------
# keystone_resample
# ---------------------------------------------------------------------------

def test_resample_constant_patch_stays_one():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 100, 36.0)
    patch.values = np.ones_like(patch.values)
    grid = keystone_resample(patch)
    assert grid.support.any()
    assert np.abs(grid.grid[grid.support] - 1.0).max() <= 1e-9
    assert np.all(grid.grid[~grid.support] == 0)


def test_resample_matches_analytic_phase_function():
    # value = exp(-j K . r0): the resampled grid must equal the same
    # analytic function at the grid nodes
    r0 = np.array([0.2, -0.15, 0.0])
    cfg = default_cfg()
    run = synth_run([PointScatterer(tuple(r0), 1.0)], cfg)
    patch = extract_patch(run, 40, 36.0)
    g = keystone_resample(patch)
    nx, ny = g.grid.shape
    t = np.deg2rad(g.theta_deg)
    ku = g.k_center + (np.arange(nx) - nx // 2) * g.dk_range
    kv = (np.arange(ny) - ny // 2) * g.dk_cross
    KU, KV = np.meshgrid(ku, kv, indexing="ij")
    KX = np.cos(t) * KU - np.sin(t) * KV
    KY = np.sin(t) * KU + np.cos(t) * KV
    expect = np.exp(-1j * (KX * r0[0] + KY * r0[1]))
    err = np.abs(g.grid[g.support] - expect[g.support]).max()
    assert err < 1e-2


def test_resample_collapse_error():
    cfg = default_cfg(rx_elevation_deg=0.0, tx_elevation_deg=0.0)
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], cfg)
    patch = extract_patch(run, 245, 7.2)    # centered on the anti-tx azimuth
    assert patch.beta_mean_deg > 175
    with pytest.raises(SupportCollapsedError):
        keystone_resample(patch)


def test_resample_grid_must_cover_patch():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 0, 36.0)
    with pytest.raises(ValueError):
        keystone_resample(patch, nx=32, ny=64)


def test_support_mask_monotone_in_swath():
    cfg = default_cfg()
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], cfg)
    areas = []
    for swath in (14.4, 21.6, 28.8, 36.0):
        patch = extract_patch(run, 0, swath)
        g = keystone_resample(patch, dk_range=0.65, dk_cross=0.3)
        areas.append(int(g.support.sum()))
    assert all(a <= b for a, b in zip(areas, areas[1:]))


# ---------------------------------------------------------------------------
# form_image
# ---------------------------------------------------------------------------

def test_image_of_constant_support_peaks_at_center():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 0, 36.0)
    g = keystone_resample(patch)
    img = form_image(g)
    i, j = np.unravel_index(np.argmax(np.abs(img.pixels)), img.pixels.shape)
    assert (i, j) == (img.pixels.shape[0] // 2, img.pixels.shape[1] // 2)
    x, y = img.pixel_to_scene(i, j)
    assert abs(x) < 1e-9 and abs(y) < 1e-9


def test_parseval_unitary():
    run = synth_run([PointScatterer((0.7, 0.3, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 20, 36.0)
    g = keystone_resample(patch)
    img = form_image(g, window="rectangular")
    assert np.sum(np.abs(img.pixels) ** 2) == pytest.approx(
        np.sum(np.abs(g.grid) ** 2), rel=1e-10)


def test_zero_input_zero_image():
    run = synth_run([PointScatterer((0, 0, 0), 0.0 + 0.0j)], default_cfg())
    img = form_clip(run, 0, 36.0)
    assert np.all(img.pixels == 0)


def test_windows_accepted_and_recorded():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    patch = extract_patch(run, 0, 36.0)
    g = keystone_resample(patch)
    for w in ("rectangular", "raised_cosine"):
        img = form_image(g, window=w)
        assert img.window == w
    with pytest.raises(ValueError):
        form_image(g, window="hann")


def test_point_scatterer_peak_within_cell():
    cfg = default_cfg()
    run = synth_run([PointScatterer((1.0, 2.0, 0.0), 1.0)], cfg)
    img = form_clip(run, 0, 36.0)
    peaks = find_peak(img, exclusion_radius_px=8, max_peaks=1)
    x, y, _ = peaks[0]
    pred = predict_geometry(cfg, 36.0, img.beta_mean_deg)
    cell = max(pred.range_res_m, pred.crossrange_res_m)
    assert np.hypot(x - 1.0, y - 2.0) <= cell


@pytest.mark.parametrize("beta_center", [10.0, 60.0, 120.0])
def test_scatterer_recovery_across_bistatic_angles(beta_center):
    # recovery holds out to large bistatic angles (degrading resolution)
    cfg = default_cfg(rx_elevation_deg=0.0, tx_elevation_deg=0.0)
    run = synth_run([PointScatterer((1.0, 2.0, 0.0), 1.0)], cfg)
    start = int(round((beta_center - 18.0) / cfg.rx_azimuth_step_deg))
    img = form_clip(run, start, 36.0, image_nx=256, image_ny=256)
    x, y, _ = find_peak(img, exclusion_radius_px=12, max_peaks=1)[0]
    pred = predict_geometry(cfg, 36.0, img.beta_mean_deg)
    cell = max(pred.range_res_m, pred.crossrange_res_m)
    assert np.hypot(x - 1.0, y - 2.0) <= cell


def test_amplitude_ordering_six_db():
    cfg = default_cfg()
    run = synth_run([PointScatterer((0.0, 0.0, 0.0), 1.0),
                     PointScatterer((1.0, 2.0, 0.0), 0.5)], cfg)
    img = form_clip(run, 0, 36.0, image_nx=256, image_ny=256)
    peaks = find_peak(img, exclusion_radius_px=13, max_peaks=2)
    assert len(peaks) == 2
    assert peaks[0][2] - peaks[1][2] == pytest.approx(6.02, abs=1.0)


# ---------------------------------------------------------------------------
# clip_series
# ---------------------------------------------------------------------------

def test_clip_series_counts():
    run = synth_run([PointScatterer((0.5, 0, 0), 1.0)], default_cfg())
    clips, skipped = clip_series(run, 36.0, 10)
    assert len(clips) == 50 and not skipped
    clips, skipped = clip_series(run, 36.0, 20)
    assert len(clips) == 25 and not skipped


def test_clip_series_skips_collapsed_near_forward():
    cfg = default_cfg(rx_elevation_deg=0.0, tx_elevation_deg=0.0)
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], cfg)
    clips, skipped = clip_series(run, 7.2, 25)
    assert skipped, "clips opposite the transmitter must collapse"
    assert len(clips) + len(skipped) == 20
    for start, reason in skipped:
        az_mid = (start + 5) * 0.72
        assert 160 < az_mid < 200
        assert "cos(beta/2)" in reason


def test_clip_series_stride_validated():
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    with pytest.raises(ValueError):
        clip_series(run, 36.0, 0)


# ---------------------------------------------------------------------------
# predict_geometry
# ---------------------------------------------------------------------------

def test_predict_geometry_paper_defaults():
    cfg = default_cfg()
    p = predict_geometry(cfg, 36.0, 0.0)
    assert p.range_res_m == pytest.approx(SPEED_OF_LIGHT / 1.5e9, abs=1e-12)
    assert round(p.range_res_m, 1) == 0.2
    assert p.range_extent_m == pytest.approx(SPEED_OF_LIGHT / 30e6, abs=1e-12)
    assert round(p.range_extent_m, 1) == 10.0
    assert p.crossrange_res_m == pytest.approx(0.239, abs=5e-4)
    assert p.crossrange_extent_m == pytest.approx(11.93, abs=5e-3)


def test_predict_geometry_beta_scaling():
    cfg = default_cfg()
    p0 = predict_geometry(cfg, 36.0, 0.0)
    p60 = predict_geometry(cfg, 36.0, 60.0)
    assert p60.range_res_m == pytest.approx(p0.range_res_m / np.cos(np.pi / 6))
    with pytest.raises(UnboundedResolutionError):
        predict_geometry(cfg, 36.0, 179.5)


# ---------------------------------------------------------------------------
# persistence and rendering
# ---------------------------------------------------------------------------

def test_image_save_load_roundtrip(tmp_path):
    run = synth_run([PointScatterer((1, 1, 0), 1.0)], default_cfg())
    img = form_clip(run, 30, 36.0)
    p = tmp_path / "clip.bsar"
    save_image(img, p)
    back = load_image(p)
    assert np.array_equal(back.pixels, img.pixels)
    assert back.dx == img.dx and back.dy == img.dy
    assert back.theta_deg == img.theta_deg
    assert back.window == img.window


def test_render_outputs(tmp_path):
    run = synth_run([PointScatterer((0, 0, 0), 1.0)], default_cfg())
    img = form_clip(run, 0, 36.0)
    png = tmp_path / "clip.png"
    pgm = tmp_path / "clip.pgm"
    save_png(img, png)
    save_pgm(img, pgm)
    assert png.stat().st_size > 100
    head = pgm.read_bytes()[:20]
    assert head.startswith(b"P5\n128 128\n65535")
    from PIL import Image as PILImage
    im = PILImage.open(png)
    assert im.size == (128, 128)
    arr = np.asarray(im)
    assert arr.max() == 65535    # peak maps to full scale
