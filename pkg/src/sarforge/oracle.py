"""Independent ground truth used to validate the solver and imaging chain.

Point scatterers here are isotropic and frequency-flat, which real PO
scattering centers are not: the synthetic runs validate the imaging
chain, the closed forms validate the solver, and only the plate/prism/
shadow experiments couple the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .geometry import direction_from_angles


@dataclass(frozen=True)
class PointScatterer:
    """Isotropic, frequency-flat scattering center."""

    position: tuple
    amplitude: complex = 1.0


def synth_run(scatterers, cfg):
    """Ideal phase-sum samples for a sweep: sum_i A_i exp(-j K . r_i).

    Returns a RunData on the same grid a real solver run would fill;
    both receive channels are identical (the oracle is polarization
    blind).
    """
    from .sweep import RunData  # local import avoids a cycle

    if not scatterers:
        raise ValueError("scatterer list must be non-empty")
    freqs = cfg.frequencies()
    azs = cfg.rx_azimuths()
    u_tx = direction_from_angles(cfg.tx_azimuth_deg, cfg.tx_elevation_deg)
    u_rx = direction_from_angles(azs, np.full_like(azs, cfg.rx_elevation_deg))
    s = u_tx[None, :] + u_rx                                # (n_az, 3)
    kap = 2 * np.pi * freqs / SPEED_OF_LIGHT                # (n_f,)
    vals = np.zeros((len(azs), len(freqs)), dtype=complex)
    for sc in scatterers:
        r = np.asarray(sc.position, dtype=float)
        vals += complex(sc.amplitude) * np.exp(-1j * np.outer(s @ r, kap))
    samples = np.stack([vals, vals], axis=2)
    import hashlib

    h = hashlib.sha256()
    for sc in scatterers:
        h.update(np.asarray(sc.position, float).tobytes())
        h.update(np.complex128(sc.amplitude).tobytes())
    return RunData(config=cfg, samples=samples, mesh_name="point-scatterers",
                   mesh_hash=h.hexdigest()[:16])


def quadrature_phase_integral(v0, v1, v2, q, order=256):
    """Gauss-Legendre reference for the linear-phase triangle integral.

    Evaluates int exp(j q . r) dA over one triangle by tensor-product
    quadrature on the parameter simplex; independent of the closed form
    it checks.  Accurate to ~1e-12 relative for phase swings up to a few
    hundred radians at the default order.
    """
    v0 = np.asarray(v0, float)
    e1 = np.asarray(v1, float) - v0
    e2 = np.asarray(v2, float) - v0
    q = np.asarray(q, float)
    a = float(q @ e1)
    b = float(q @ e2)
    two_area = float(np.linalg.norm(np.cross(e1, e2)))
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    # inner integral over v in [0, 1-u] mapped to [-1, 1]
    L = 1.0 - u                                        # (n,)
    vv = 0.5 * L[:, None] * (x[None, :] + 1.0)          # (n, n)
    wv = 0.5 * L[:, None] * w[None, :]
    inner = np.sum(wv * np.exp(1j * (a * u[:, None] + b * vv)), axis=1)
    d = np.sum(wu * inner)
    return two_area * np.exp(1j * float(q @ v0)) * d


def plate_rcs_analytic(a_m, b_m, frequency_hz):
    """Classic PO broadside flat-plate RCS, sigma = 4 pi (a b)^2 / lambda^2, in dBsm."""
    if a_m <= 0 or b_m <= 0:
        raise ValueError("plate dimensions must be positive")
    lam = SPEED_OF_LIGHT / frequency_hz
    return 10 * np.log10(4 * np.pi * (a_m * b_m) ** 2 / lam**2)


def specular_peaks(face_normal_azimuths_deg, tx_azimuth_deg, merge_tol_deg=1.0):
    """Receiver azimuths of the expected RCS lobes for in-plane geometry.

    Mirror-law reflection of the incoming propagation direction about
    each illuminated face normal, plus the forward direction; peaks
    closer than merge_tol are merged.  All angles degrees, elevation 0.
    """
    tx = np.deg2rad(tx_azimuth_deg)
    d = -np.array([np.cos(tx), np.sin(tx)])        # propagation direction
    peaks = []
    for az_n in face_normal_azimuths_deg:
        n = np.array([np.cos(np.deg2rad(az_n)), np.sin(np.deg2rad(az_n))])
        if -d @ n <= 0:
            continue                                # face not illuminated
        refl = d - 2 * (d @ n) * n
        peaks.append(float(np.rad2deg(np.arctan2(refl[1], refl[0]))) % 360.0)
    peaks.append(float(np.rad2deg(np.arctan2(d[1], d[0]))) % 360.0)   # forward
    peaks.sort()
    merged = []
    for p in peaks:
        if merged and min(abs(p - merged[-1]), 360 - abs(p - merged[-1])) <= merge_tol_deg:
            continue
        merged.append(p)
    if len(merged) > 1 and (360 - abs(merged[-1] - merged[0])) <= merge_tol_deg:
        merged.pop()
    return merged


# ---------------------------------------------------------------------------
# peak extraction
# ---------------------------------------------------------------------------

def circular_peaks(levels_db, positions_deg, min_prominence_db=20.0,
                   below_peak_db=20.0):
    """Qualified maxima of a periodic dB curve.

    A peak is a local maximum (plateaus allowed; reported at the plateau
    center) whose level is within below_peak_db of the global maximum
    and whose circular prominence is at least min_prominence_db.
    Returns a list of (position_deg, level_db) sorted by position.
    """
    y = np.asarray(levels_db, dtype=float)
    pos = np.asarray(positions_deg, dtype=float)
    n = len(y)
    if n < 3:
        return []
    gmax = y.max()
    peaks = []
    i = 0
    while i < n:
        j = i
        while y[(j + 1) % n] == y[i]:
            j += 1
            if j - i >= n:          # constant curve
                return []
        if y[(i - 1) % n] < y[i] and y[(j + 1) % n] < y[i]:
            center = (i + j) // 2 if (i + j) % 2 == 0 else (i + j + 1) // 2
            peaks.append((center % n, y[i]))
        i = j + 1
    out = []
    for idx, level in peaks:
        if level < gmax - below_peak_db:
            continue
        mins = []
        for step in (1, -1):
            m = level
            k = idx
            for _ in range(n - 1):
                k = (k + step) % n
                if y[k] > level:
                    break
                m = min(m, y[k])
            mins.append(m)
        if level - max(mins) >= min_prominence_db:
            out.append((float(pos[idx]), float(level)))
    out.sort()
    return out


def find_peak(image, exclusion_radius_px, max_peaks=10, floor_db=40.0,
              refine=True):
    """Greedy maxima extraction from a SAR image.

    Repeatedly takes the strongest remaining pixel, masks a disc of
    exclusion_radius_px around it, and stops below floor_db under the
    first peak or after max_peaks.  Positions are reported in scene
    meters via the image's pixel-to-scene mapping; amplitudes in dB re
    the image maximum.  With refine=True a local quadratic fit sharpens
    both position and amplitude to sub-pixel accuracy.

    An all-zero image yields an empty list.
    """
    mag = np.abs(image.pixels)
    if not mag.any():
        return []
    work = mag.copy()
    n0, n1 = mag.shape
    ii, jj = np.meshgrid(np.arange(n0), np.arange(n1), indexing="ij")
    top = mag.max()
    peaks = []
    for _ in range(max_peaks):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        amp = work[i, j]
        if amp <= 0 or 20 * np.log10(amp / top) < -floor_db:
            break
        fi, fj, famp = float(i), float(j), float(amp)
        if refine and 0 < i < n0 - 1 and 0 < j < n1 - 1:
            fi, famp_i = _parabolic(mag[i - 1, j], mag[i, j], mag[i + 1, j], i)
            fj, famp_j = _parabolic(mag[i, j - 1], mag[i, j], mag[i, j + 1], j)
            famp = amp + (famp_i - amp) + (famp_j - amp)
        x, y = image.pixel_to_scene(fi, fj)
        peaks.append((float(x), float(y), 20 * np.log10(famp / top)))
        work[(ii - i) ** 2 + (jj - j) ** 2 <= exclusion_radius_px**2] = 0.0
    return peaks


def _parabolic(ym, y0, yp, i0):
    denom = ym - 2 * y0 + yp
    if denom >= 0:
        return float(i0), float(y0)
    d = 0.5 * (ym - yp) / denom
    d = float(np.clip(d, -0.5, 0.5))
    return i0 + d, float(y0 - 0.25 * (ym - yp) * d)


def load_scatterers_json(path_or_file):
    """Scatterer list from JSON: [{"position": [x, y, z], "amplitude": a
    or [re, im]}, ...]."""
    import json

    if hasattr(path_or_file, "read"):
        data = json.load(path_or_file)
    else:
        with open(path_or_file) as f:
            data = json.load(f)
    out = []
    for d in data:
        amp = d.get("amplitude", 1.0)
        if isinstance(amp, (list, tuple)):
            amp = complex(amp[0], amp[1])
        out.append(PointScatterer(tuple(float(x) for x in d["position"]),
                                  complex(amp)))
    return out


def save_peaks_csv(peaks, path_or_file):
    """Peak report: x_m, y_m, amplitude_db rows."""
    import csv

    own = False
    if not hasattr(path_or_file, "write"):
        path_or_file = open(path_or_file, "w", newline="")
        own = True
    try:
        w = csv.writer(path_or_file)
        w.writerow(["x_m", "y_m", "amplitude_db"])
        for x, y, a in peaks:
            w.writerow([f"{x:.6f}", f"{y:.6f}", f"{a:.3f}"])
    finally:
        if own:
            path_or_file.close()


def mainlobe_width_m(image, axis=0):
    """-3 dB width (m) of the image mainlobe along one image axis,
    measured through the peak with linear interpolation of the
    half-power crossings."""
    mag = np.abs(image.pixels)
    i0, j0 = np.unravel_index(np.argmax(mag), mag.shape)
    prof = mag[:, j0] if axis == 0 else mag[i0, :]
    peak = prof.max()
    ipk = int(np.argmax(prof))
    half = peak / np.sqrt(2.0)
    lo = ipk
    while lo > 0 and prof[lo] > half:
        lo -= 1
    if prof[lo] > half:
        raise ValueError("mainlobe left crossing not inside the image")
    left = lo + (half - prof[lo]) / (prof[lo + 1] - prof[lo])
    hi = ipk
    n = len(prof)
    while hi < n - 1 and prof[hi] > half:
        hi += 1
    if prof[hi] > half:
        raise ValueError("mainlobe right crossing not inside the image")
    right = hi - (half - prof[hi]) / (prof[hi - 1] - prof[hi])
    step = image.dx if axis == 0 else image.dy
    return float((right - left) * step)
