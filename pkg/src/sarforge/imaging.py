"""K-space mapping, keystone polar-to-rectangular resampling, and SAR
image formation by inverse FFT.

Every sweep sample measures the scene's Fourier transform at
K = (2 pi f / c)(u_tx + u_rx); with a fixed transmitter the ground-plane
projection of an angular patch of samples has polar support along rays
whose angle and radial scale vary with receiver azimuth (a warped
annulus, since the bistatic angle changes along the sweep).  Resampling
is applied to the exact per-sample coordinates:

  1. the patch is presampled on its uniform (azimuth x frequency) grid
     by band-limited Dirichlet interpolation (exact for scenes inside
     the unambiguous extents, and exactly preserves constants);
  2. pass one linearly interpolates each azimuth column in radial
     wavenumber onto common radii (the keystone trapezoid);
  3. pass two linearly interpolates across columns onto uniform
     cross-range wavenumber rows.

The output grid is uniform and centered on the patch-center K, with
cells outside the polar support zero-filled and recorded in a support
mask.  Image axes: x along the patch-center ground direction ("range"),
y across it; the stored rotation maps pixels back to scene x-y.

All transforms are pure and deterministic; clips in a series may be
formed in parallel.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .container import read_container, write_container
from .geometry import direction_from_angles

DEFAULT_RESAMPLE_GRID = 64      # resampled k-space grid (per axis)
DEFAULT_IMAGE_GRID = 128        # image pixels (per axis), zero-padded FFT
DEFAULT_OVERSAMPLE = 8          # band-limited presampling factor
COLLAPSE_MEAN_COS = 0.05        # patch-mean cos(beta/2) below this is degenerate

WINDOWS = ("rectangular", "raised_cosine")


class SupportCollapsedError(RuntimeError):
    """Patch k-space support vanished (bistatic angle too close to 180)."""


class UnboundedResolutionError(ValueError):
    """Resolution prediction requested at beta >= 179 degrees."""


def kspace_coords(tx_dir, rx_dir, frequency_hz):
    """Ground-plane k-space coordinates and bistatic angle of samples.

    tx_dir, rx_dir: unit direction vectors (..., 3); frequency in Hz.
    Returns (kx, ky, beta_deg) with kx, ky in rad/m.
    """
    tx = np.asarray(tx_dir, float)
    rx = np.asarray(rx_dir, float)
    f = np.asarray(frequency_hz, float)
    cosb = np.clip(np.sum(tx * rx, axis=-1), -1.0, 1.0)
    beta = np.rad2deg(np.arccos(cosb))
    scale = 2 * np.pi * f / SPEED_OF_LIGHT
    s = tx + rx
    kx = scale * s[..., 0]
    ky = scale * s[..., 1]
    return kx, ky, beta


@dataclass
class KSpacePatch:
    """Contiguous angular swath of one run with per-sample k coordinates.

    values/kx/ky/beta: (n_columns, n_frequencies); columns are receiver
    azimuth steps (wrapping through zero is allowed on full circles).
    """

    values: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    beta: np.ndarray
    frequencies: np.ndarray
    rx_azimuths_deg: np.ndarray
    rx_elevation_deg: float
    tx_azimuth_deg: float
    tx_elevation_deg: float
    start_index: int
    swath_deg: float
    channel: int = 0

    @property
    def beta_mean_deg(self):
        return float(self.beta.mean())

    def mean_cos_half_beta(self):
        return float(np.cos(np.deg2rad(self.beta) / 2).mean())


def extract_patch(run, start_azimuth_index, swath_deg, channel=0):
    """Cut a swath of consecutive azimuth columns from a run.

    The swath must span an integral number of azimuth steps; indices
    wrap modulo the full circle.
    """
    cfg = run.config
    step = cfg.rx_azimuth_step_deg
    ncols_f = swath_deg / step
    if abs(ncols_f - round(ncols_f)) > 1e-9 * max(1.0, abs(ncols_f)):
        raise ValueError(f"swath {swath_deg} deg is not a multiple of the {step} deg step")
    ncols = int(round(ncols_f))
    if ncols < 1:
        raise ValueError("swath must cover at least one azimuth step")
    n_az = cfg.n_azimuths
    if ncols > n_az:
        raise ValueError("swath exceeds the run's azimuth coverage")
    idx = (int(start_azimuth_index) + np.arange(ncols)) % n_az
    if not cfg.full_circle and np.any(np.diff(idx) != 1):
        raise ValueError("swath wraps but the run does not cover a full circle")

    # monotone azimuth coordinate even across the 0/360 wrap
    azs = cfg.rx_azimuth_start_deg + (int(start_azimuth_index) + np.arange(ncols)) * step
    freqs = cfg.frequencies()
    u_tx = direction_from_angles(cfg.tx_azimuth_deg, cfg.tx_elevation_deg)
    u_rx = direction_from_angles(azs, np.full_like(azs, cfg.rx_elevation_deg))
    kx, ky, beta = kspace_coords(u_tx[None, None, :], u_rx[:, None, :],
                                 freqs[None, :])
    beta = np.broadcast_to(beta, kx.shape).copy()
    values = run.samples[idx, :, channel]
    return KSpacePatch(
        values=values, kx=kx, ky=ky, beta=beta, frequencies=freqs,
        rx_azimuths_deg=azs, rx_elevation_deg=cfg.rx_elevation_deg,
        tx_azimuth_deg=cfg.tx_azimuth_deg, tx_elevation_deg=cfg.tx_elevation_deg,
        start_index=int(start_azimuth_index), swath_deg=float(swath_deg),
        channel=channel,
    )


def fft_upsample(values, factor, axis):
    """Band-limited upsampling of uniformly sampled complex data.

    Each 1-D slice along `axis` is demodulated by its dominant linear
    phase (estimated from the mean adjacent-sample product), upsampled
    by zero-padding the DFT spectrum, and remodulated at the dense
    positions.  A single complex exponential therefore upsamples
    exactly (no edge ringing), constants stay exactly constant, and
    mixtures are accurate to their band-limitedness.  Returns factor*n
    samples at spacing d/factor starting from the original first sample.
    """
    vals = np.asarray(values, complex)
    n = vals.shape[axis]
    if factor == 1 or n < 2:
        return vals.copy() if factor == 1 else np.repeat(vals, factor, axis=axis)
    x = np.moveaxis(vals, axis, -1)
    rate = np.angle(np.sum(x[..., 1:] * np.conj(x[..., :-1]), axis=-1))
    idx = np.arange(n)
    demod = x * np.exp(-1j * rate[..., None] * idx)

    m = n * factor
    F = np.fft.fft(demod, axis=-1)
    shape = list(demod.shape)
    shape[-1] = m
    Fz = np.zeros(shape, complex)
    h = (n + 1) // 2
    Fz[..., :h] = F[..., :h]
    Fz[..., m - (n - h):] = F[..., h:]
    if n % 2 == 0:
        # split the Nyquist bin symmetrically
        Fz[..., m - (n - h)] *= 0.5
        Fz[..., h] = Fz[..., m - (n - h)]
    up = np.fft.ifft(Fz, axis=-1) * factor
    dense_idx = np.arange(m) / factor
    out = up * np.exp(1j * rate[..., None] * dense_idx)
    return np.moveaxis(out, -1, axis)


def _interp_complex(x, xp, fp):
    """1-D linear interpolation of complex samples; out-of-range target
    points come back as 0 with a False validity flag."""
    if len(xp) < 2:
        valid = np.zeros(len(x), bool)
        return np.zeros(len(x), complex), valid
    if xp[0] > xp[-1]:
        xp = xp[::-1]
        fp = fp[::-1]
    re = np.interp(x, xp, fp.real, left=np.nan, right=np.nan)
    im = np.interp(x, xp, fp.imag, left=np.nan, right=np.nan)
    valid = np.isfinite(re) & np.isfinite(im)
    out = np.where(valid, np.nan_to_num(re) + 1j * np.nan_to_num(im), 0.0)
    return out, valid


@dataclass
class ResampledGrid:
    """Uniform rectangular k-space grid from keystone_resample.

    grid: (nx, ny) complex, axis 0 = range wavenumber (frequency
    derived), axis 1 = cross-range wavenumber (azimuth derived);
    support: validity mask; dk_range/dk_cross: cell sizes; k_center:
    radial wavenumber at the grid center; theta_deg: scene azimuth of
    the range axis.
    """

    grid: np.ndarray
    support: np.ndarray
    dk_range: float
    dk_cross: float
    k_center: float
    theta_deg: float
    beta_mean_deg: float
    meta: dict = field(default_factory=dict)


def keystone_resample(patch, nx=DEFAULT_RESAMPLE_GRID, ny=DEFAULT_RESAMPLE_GRID,
                      oversample=DEFAULT_OVERSAMPLE, dk_range=None, dk_cross=None):
    """Two-pass separable linear reformat of a polar patch onto a uniform
    rectangular grid centered on the patch-center K.

    nx, ny: output grid cells along range/cross-range wavenumber (must
    cover the patch sample counts).  dk_range/dk_cross default to the
    native sample spacings, so the support occupies roughly the patch's
    sample count in cells and the rest of the grid is zero-fill margin.

    Raises SupportCollapsedError when the patch-mean cos(beta/2) falls
    below COLLAPSE_MEAN_COS.
    """
    n_cols, n_f = patch.values.shape
    if nx < n_f or ny < n_cols:
        raise ValueError(f"output grid {nx}x{ny} smaller than patch {n_f}x{n_cols}")
    if n_cols < 2 or n_f < 2:
        raise ValueError("patch needs at least 2 azimuth columns and 2 frequencies "
                         "to resample")
    if patch.mean_cos_half_beta() < COLLAPSE_MEAN_COS:
        raise SupportCollapsedError(
            f"patch-mean cos(beta/2) = {patch.mean_cos_half_beta():.4f} < {COLLAPSE_MEAN_COS}"
        )

    # densify the uniformly sampled patch before the linear passes
    dense = fft_upsample(patch.values, oversample, axis=0)
    dense = fft_upsample(dense, oversample, axis=1)
    df = patch.frequencies[1] - patch.frequencies[0] if n_f > 1 else 0.0
    daz = (patch.rx_azimuths_deg[1] - patch.rx_azimuths_deg[0]) if n_cols > 1 else 0.0
    freqs_d = patch.frequencies[0] + np.arange(n_f * oversample) * (df / oversample)
    azs_d = patch.rx_azimuths_deg[0] + np.arange(n_cols * oversample) * (daz / oversample)
    keep_f = freqs_d <= patch.frequencies[-1] + 1e-6
    keep_a = azs_d <= patch.rx_azimuths_deg[-1] + 1e-9
    dense = dense[np.ix_(keep_a, keep_f)]
    freqs_d = freqs_d[keep_f]
    azs_d = azs_d[keep_a]

    u_tx = direction_from_angles(patch.tx_azimuth_deg, patch.tx_elevation_deg)
    u_rx = direction_from_angles(azs_d, np.full_like(azs_d, patch.rx_elevation_deg))
    g = u_tx[None, :] + u_rx                       # (cols, 3)
    gn = np.hypot(g[:, 0], g[:, 1])                # ground-plane norm
    theta = np.unwrap(np.arctan2(g[:, 1], g[:, 0]))
    tbar = theta.mean()
    phi = theta - tbar
    kap = 2 * np.pi * freqs_d / SPEED_OF_LIGHT

    # native spacings (of the original, not densified, sampling)
    gn_mean = gn.mean()
    rho_c = (2 * np.pi * patch.frequencies.mean() / SPEED_OF_LIGHT) * gn_mean
    dku = dk_range if dk_range is not None else (2 * np.pi * df / SPEED_OF_LIGHT) * gn_mean
    if dk_cross is not None:
        dkv = dk_cross
    elif n_cols > 1:
        dkv = rho_c * float(np.abs(np.diff(theta)).mean()) * oversample
    else:
        dkv = dku
    if dku <= 0 or dkv <= 0:
        raise SupportCollapsedError("degenerate k-space sample spacing")

    ku = rho_c + (np.arange(nx) - nx // 2) * dku
    kv = (np.arange(ny) - ny // 2) * dkv

    cross_scale = 1.0
    if "keystone" in os.environ.get("SARFORGE_TEST_PERTURB", ""):
        cross_scale = 1.5   # negative-control hook: breaks the shift theorem

    cosphi = np.cos(phi)
    pass1 = np.zeros((nx, len(azs_d)), complex)
    valid1 = np.zeros((nx, len(azs_d)), bool)
    for j in range(len(azs_d)):
        if cosphi[j] <= 1e-6 or gn[j] <= 1e-9:
            continue
        pass1[:, j], valid1[:, j] = _interp_complex(ku / cosphi[j], kap * gn[j], dense[j])

    grid = np.zeros((nx, ny), complex)
    support = np.zeros((nx, ny), bool)
    order = np.argsort(phi)
    tanphi = np.tan(phi[order]) * cross_scale
    for i in range(nx):
        src = ku[i] * tanphi
        vals = np.where(valid1[i, order], pass1[i, order], np.nan + 0j)
        row, ok = _interp_complex(kv, src, vals)
        ok &= np.isfinite(row.real)
        grid[i] = np.where(ok, np.nan_to_num(row), 0.0)
        support[i] = ok

    return ResampledGrid(
        grid=grid, support=support, dk_range=float(dku), dk_cross=float(dkv),
        k_center=float(rho_c), theta_deg=float(np.rad2deg(tbar)),
        beta_mean_deg=patch.beta_mean_deg,
        meta={
            "start_index": patch.start_index,
            "swath_deg": patch.swath_deg,
            "rx_elevation_deg": patch.rx_elevation_deg,
            "tx_azimuth_deg": patch.tx_azimuth_deg,
            "tx_elevation_deg": patch.tx_elevation_deg,
            "channel": patch.channel,
            "oversample": oversample,
        },
    )


def _window_1d(n, lo, hi, kind):
    w = np.zeros(n)
    span = hi - lo
    if span < 0:
        return w
    idx = np.arange(lo, hi + 1)
    if kind == "rectangular":
        w[idx] = 1.0
    elif kind == "raised_cosine":
        if span == 0:
            w[idx] = 1.0
        else:
            t = (idx - lo) / span
            w[idx] = 0.5 - 0.5 * np.cos(2 * np.pi * t)
    else:
        raise ValueError(f"unknown window {kind!r}; expected one of {WINDOWS}")
    return w


@dataclass
class SarImage:
    """Complex SAR image clip; scene origin maps to the center pixel.

    pixels: (nx, ny) complex, axis 0 = range direction (the patch-center
    ground direction, scene azimuth theta_deg), axis 1 = cross-range.
    dx, dy: meters per pixel along those axes.
    """

    pixels: np.ndarray
    dx: float
    dy: float
    theta_deg: float
    beta_mean_deg: float
    window: str
    meta: dict = field(default_factory=dict)

    center = (0.0, 0.0)

    @property
    def shape(self):
        return self.pixels.shape

    def pixel_to_scene(self, i, j):
        """Scene (x, y) in meters of (possibly fractional) pixel (i, j)."""
        nx, ny = self.pixels.shape
        u = (np.asarray(i, float) - nx // 2) * self.dx
        v = (np.asarray(j, float) - ny // 2) * self.dy
        t = np.deg2rad(self.theta_deg)
        return np.cos(t) * u - np.sin(t) * v, np.sin(t) * u + np.cos(t) * v

    def scene_to_pixel(self, x, y):
        t = np.deg2rad(self.theta_deg)
        u = np.cos(t) * x + np.sin(t) * y
        v = -np.sin(t) * x + np.cos(t) * y
        nx, ny = self.pixels.shape
        return u / self.dx + nx // 2, v / self.dy + ny // 2

    def magnitude_db(self, floor_db=40.0):
        mag = np.abs(self.pixels)
        peak = mag.max()
        if peak == 0:
            return np.full(mag.shape, -floor_db)
        db = 20 * np.log10(np.maximum(mag, peak * 10 ** (-floor_db / 20 - 1)) / peak)
        return np.maximum(db, -floor_db)


def form_image(resampled, window="rectangular", nx=DEFAULT_IMAGE_GRID,
               ny=DEFAULT_IMAGE_GRID):
    """Window the resampled grid over its support, zero-pad to (nx, ny),
    and take the unitary 2-D inverse FFT with the scene origin at the
    center pixel."""
    if window not in WINDOWS:
        raise ValueError(f"unknown window {window!r}; expected one of {WINDOWS}")
    g = resampled.grid
    gx, gy = g.shape
    if nx < gx or ny < gy:
        raise ValueError(f"image grid {nx}x{ny} smaller than k-space grid {gx}x{gy}")
    if resampled.support.any():
        rows = np.nonzero(resampled.support.any(axis=1))[0]
        cols = np.nonzero(resampled.support.any(axis=0))[0]
        wu = _window_1d(gx, rows[0], rows[-1], window)
        wv = _window_1d(gy, cols[0], cols[-1], window)
        g = g * wu[:, None] * wv[None, :]
    padded = np.zeros((nx, ny), complex)
    ox = nx // 2 - gx // 2
    oy = ny // 2 - gy // 2
    padded[ox:ox + gx, oy:oy + gy] = g
    pixels = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(padded), norm="ortho"))
    dx = 2 * np.pi / (nx * resampled.dk_range)
    dy = 2 * np.pi / (ny * resampled.dk_cross)
    meta = dict(resampled.meta)
    meta.update({
        "k_center": resampled.k_center,
        "dk_range": resampled.dk_range,
        "dk_cross": resampled.dk_cross,
        "support_cells": int(resampled.support.sum()),
    })
    return SarImage(pixels=pixels, dx=float(dx), dy=float(dy),
                    theta_deg=resampled.theta_deg,
                    beta_mean_deg=resampled.beta_mean_deg,
                    window=window, meta=meta)


def form_clip(run, start_index, swath_deg, window="rectangular",
              nx=DEFAULT_RESAMPLE_GRID, ny=DEFAULT_RESAMPLE_GRID,
              image_nx=DEFAULT_IMAGE_GRID, image_ny=DEFAULT_IMAGE_GRID,
              oversample=DEFAULT_OVERSAMPLE, channel=0):
    """extract_patch -> keystone_resample -> form_image for one clip."""
    patch = extract_patch(run, start_index, swath_deg, channel=channel)
    grid = keystone_resample(patch, nx, ny, oversample=oversample)
    img = form_image(grid, window=window, nx=image_nx, ny=image_ny)
    img.meta["mesh_hash"] = run.mesh_hash
    img.meta["mesh_name"] = run.mesh_name
    return img


def clip_series(run, swath_deg=36.0, stride_steps=10, window="rectangular",
                nx=DEFAULT_RESAMPLE_GRID, ny=DEFAULT_RESAMPLE_GRID,
                image_nx=DEFAULT_IMAGE_GRID, image_ny=DEFAULT_IMAGE_GRID,
                oversample=DEFAULT_OVERSAMPLE, channel=0):
    """Form clips at start indices 0, stride, 2*stride, ... over the full
    circle (wrapping).  Returns (clips, skipped) where skipped lists
    (start_index, reason) for clips whose support collapsed.
    """
    if stride_steps < 1:
        raise ValueError("stride must be >= 1")
    n_az = run.config.n_azimuths
    clips, skipped = [], []
    for start in range(0, n_az, stride_steps):
        try:
            clips.append(form_clip(run, start, swath_deg, window=window,
                                   nx=nx, ny=ny, image_nx=image_nx,
                                   image_ny=image_ny, oversample=oversample,
                                   channel=channel))
        except SupportCollapsedError as e:
            skipped.append((start, str(e)))
    return clips, skipped


@dataclass(frozen=True)
class GeometryPrediction:
    range_res_m: float
    crossrange_res_m: float
    range_extent_m: float
    crossrange_extent_m: float


def predict_geometry(cfg, swath_deg=36.0, beta_deg=0.0):
    """Nominal image geometry from the sweep parameters.

    range_res = c / (2 B cos(beta/2)); crossrange_res =
    lambda_c / (2 swath cos(beta/2)); extents from the frequency and
    angular steps (no bistatic factor).  beta and lambda at band/patch
    center.
    """
    if beta_deg >= 179.0:
        raise UnboundedResolutionError(f"beta = {beta_deg} deg >= 179: resolution unbounded")
    lam_c = SPEED_OF_LIGHT / cfg.center_frequency_hz
    cosb2 = np.cos(np.deg2rad(beta_deg) / 2)
    return GeometryPrediction(
        range_res_m=SPEED_OF_LIGHT / (2 * cfg.bandwidth_hz * cosb2),
        crossrange_res_m=lam_c / (2 * np.deg2rad(swath_deg) * cosb2),
        range_extent_m=SPEED_OF_LIGHT / (2 * cfg.frequency_step_hz),
        crossrange_extent_m=lam_c / (2 * np.deg2rad(cfg.rx_azimuth_step_deg)),
    )


# ---------------------------------------------------------------------------
# persistence and rendering
# ---------------------------------------------------------------------------

def save_image(image, path):
    header = {
        "variant": "image",
        "dx_m": image.dx,
        "dy_m": image.dy,
        "theta_deg": image.theta_deg,
        "beta_mean_deg": image.beta_mean_deg,
        "window": image.window,
        "meta": image.meta,
        "axes": ["range", "crossrange"],
    }
    return write_container(path, header, image.pixels)


def load_image(path):
    header, payload = read_container(path)
    if header.get("variant") != "image":
        raise ValueError(f"{path} is not an image file (variant={header.get('variant')!r})")
    return SarImage(pixels=payload, dx=header["dx_m"], dy=header["dy_m"],
                    theta_deg=header["theta_deg"],
                    beta_mean_deg=header["beta_mean_deg"],
                    window=header["window"], meta=header.get("meta", {}))


def render_u16(image, floor_db=40.0):
    """Magnitude in dB mapped to uint16, 0 at the floor, 65535 at peak.
    Row 0 is the largest range coordinate (image x points up)."""
    db = image.magnitude_db(floor_db)
    scaled = (db + floor_db) / floor_db
    return np.round(scaled * 65535).astype(np.uint16)[::-1, :]


def save_pgm(image, path, floor_db=40.0):
    pix = render_u16(image, floor_db)
    with open(path, "wb") as f:
        f.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n65535\n".encode("ascii"))
        f.write(pix.astype(">u2").tobytes())


def save_png(image, path, floor_db=40.0):
    from PIL import Image as PILImage

    pix = render_u16(image, floor_db)
    PILImage.fromarray(pix).save(path)


def image_sidecar(image, cfg=None, extra=None):
    """JSON-able provenance record for one clip."""
    d = {
        "dx_m": image.dx,
        "dy_m": image.dy,
        "shape": list(image.pixels.shape),
        "theta_deg": image.theta_deg,
        "beta_mean_deg": image.beta_mean_deg,
        "window": image.window,
        "meta": image.meta,
    }
    if cfg is not None:
        pred = predict_geometry(cfg, image.meta.get("swath_deg", 36.0),
                                min(image.beta_mean_deg, 178.9))
        d["predicted"] = {
            "range_res_m": pred.range_res_m,
            "crossrange_res_m": pred.crossrange_res_m,
            "range_extent_m": pred.range_extent_m,
            "crossrange_extent_m": pred.crossrange_extent_m,
        }
    if extra:
        d.update(extra)
    return d


def write_sidecar(image, path, cfg=None, extra=None):
    with open(path, "w") as f:
        json.dump(image_sidecar(image, cfg, extra), f, indent=2, sort_keys=True)
        f.write("\n")
