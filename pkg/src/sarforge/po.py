"""Physical-optics scattering of a plane wave by a faceted PEC mesh.

Tangent-plane PO: a facet is lit iff its normal faces the incoming wave
and the ray from its centroid toward the transmitter is unobstructed;
lit facets carry the induced surface current J = 2 n x H_inc, shadowed
facets carry exactly zero.  The far field is the PO radiation integral
with the linear-phase integral over each flat triangle evaluated in
closed form, so electrically large flat facets are exact and meshes do
not need lambda-scale refinement on planar faces.

Conventions: exp(-i w t) time dependence, so the incident wave from
transmitter direction u_tx has spatial phase exp(-j k u_tx . r) and a
range-normalized sample at receiver direction u_rx carries the phase
exp(-j K . r') per scatterer, K = (2 pi f / c)(u_tx + u_rx).  This makes
solver output and the point-scatterer oracle directly comparable and
images come out un-mirrored.  Polarization: H = azimuth unit vector
(phi-hat), V = r-hat x H (points up at low elevation).

illuminate/far_field are pure functions of (mesh, excitation); samples
may be evaluated in parallel across frequency and receiver angle.  The
facet reduction inside one sample is a fixed-order numpy sum, so results
are bit-reproducible regardless of worker count.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import factorial

import numpy as np

from .constants import ETA0, SPEED_OF_LIGHT
from .geometry import MeshError, direction_from_angles

# phase-argument threshold below which the exact two-exponential form of
# the triangle integral switches to its double power series
SMALL_PHASE = 1e-4

_illuminate_calls = 0


def illuminate_call_count():
    """Instrumentation counter: number of illuminate() calls so far."""
    return _illuminate_calls


def reset_illuminate_call_count():
    global _illuminate_calls
    _illuminate_calls = 0


class PolarizationError(ValueError):
    pass


class FrequencyMismatchError(ValueError):
    """far_field called with a frequency other than the current map's."""


@dataclass(frozen=True)
class PlaneWaveExcitation:
    """Incident plane wave arriving from (tx_azimuth, tx_elevation)."""

    frequency_hz: float
    tx_azimuth_deg: float
    tx_elevation_deg: float
    polarization: str = "H"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ValueError("frequency must be positive")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.polarization not in ("H", "V"):
            raise PolarizationError(f"polarization must be 'H' or 'V', got {self.polarization!r}")

    @property
    def tx_direction(self):
        return direction_from_angles(self.tx_azimuth_deg, self.tx_elevation_deg)


@dataclass
class CurrentMap:
    """PO surface currents for one (mesh, excitation) pair.

    J has shape (n_facets, 3), complex A/m, evaluated at each facet
    centroid (incident phase included); lit is the per-facet shadow
    mask.  J is exactly zero wherever lit is False.
    """

    J: np.ndarray
    lit: np.ndarray
    excitation: PlaneWaveExcitation

    @property
    def frequency_hz(self):
        return self.excitation.frequency_hz


@dataclass(frozen=True)
class FieldSample:
    """Range-normalized scattered far field (volts): lim r->inf of r*E."""

    E_H: complex
    E_V: complex
    rx_azimuth_deg: float
    rx_elevation_deg: float
    frequency_hz: float


@dataclass(frozen=True)
class RcsSample:
    sigma_dbsm: float
    rx_azimuth_deg: float
    rx_elevation_deg: float


def polarization_basis(azimuth_deg, elevation_deg):
    """(h_hat, v_hat) at a direction: h = phi-hat, v = r-hat x h."""
    az = np.deg2rad(np.asarray(azimuth_deg, dtype=float))
    zeros = np.zeros_like(az)
    h = np.stack([-np.sin(az), np.cos(az), zeros], axis=-1)
    r = direction_from_angles(azimuth_deg, elevation_deg)
    v = np.cross(r, h)
    return h, v


# ---------------------------------------------------------------------------
# analytic linear-phase triangle integral
# ---------------------------------------------------------------------------

def _edge_mean(x):
    # (exp(jx) - 1)/(jx) = exp(jx/2) sinc(x/2), cancellation-free
    return np.exp(0.5j * x) * np.sinc(x / (2 * np.pi))


def _simplex_integral(a, b):
    """D(a, b) = int_0^1 int_0^{1-u} exp(j(a u + b v)) dv du.

    Exact form with the larger argument in the denominator; double power
    series (sum_{m,n} (ja)^m (jb)^n / (m+n+2)!) once both |a| and |b|
    drop below SMALL_PHASE, keeping relative error ~1e-12 everywhere.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    scalar = a.ndim == 0
    a, b = np.atleast_1d(a), np.atleast_1d(b)
    swap = np.abs(b) < np.abs(a)
    lo = np.where(swap, b, a)
    hi = np.where(swap, a, b)
    small = np.abs(hi) < SMALL_PHASE
    hi_safe = np.where(small, 1.0, hi)
    out = (np.exp(1j * hi) * _edge_mean(lo - hi) - _edge_mean(lo)) / (1j * hi_safe)
    if np.any(small):
        ja = 1j * lo[small]
        jb = 1j * hi[small]
        ser = np.zeros(ja.shape, dtype=complex)
        for m in range(7):
            for n in range(7 - m):
                ser += ja**m * jb**n / factorial(m + n + 2)
        out[small] = ser
    return out[0] if scalar else out


def facet_phase_integral(v0, v1, v2, q):
    """Closed-form integral of exp(j q . r) dA over flat triangles.

    v0, v1, v2: (..., 3) triangle corners; q: (..., 3) wavevector in
    rad/m (broadcastable).  At q = 0 the value is exactly the area.
    """
    v0 = np.asarray(v0, float)
    e1 = np.asarray(v1, float) - v0
    e2 = np.asarray(v2, float) - v0
    q = np.asarray(q, float)
    a = np.sum(q * e1, axis=-1)
    b = np.sum(q * e2, axis=-1)
    two_area = np.linalg.norm(np.cross(e1, e2), axis=-1)
    return two_area * np.exp(1j * np.sum(q * v0, axis=-1)) * _simplex_integral(a, b)


# ---------------------------------------------------------------------------
# shadowing
# ---------------------------------------------------------------------------

_RAY_OFFSET = 1e-9  # m, self-intersection guard along the ray


def ray_occluded(mesh, origins, direction, exclude=None):
    """Whether the ray from each origin along `direction` hits any facet.

    Watertight-enough Moller-Trumbore over all mesh triangles, vectorized
    as (n_rays, n_facets); origins are nudged _RAY_OFFSET along the ray
    and the matching `exclude` facet index is ignored per ray.
    """
    origins = np.atleast_2d(np.asarray(origins, float))
    d = np.asarray(direction, float)
    v0, v1, v2 = mesh.triangles()
    e1 = v1 - v0
    e2 = v2 - v0
    o = origins + _RAY_OFFSET * d

    pvec = np.cross(d, e2)                        # (m, 3)
    det = np.sum(e1 * pvec, axis=1)               # (m,)
    ok = np.abs(det) > 1e-14
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)

    tvec = o[:, None, :] - v0[None, :, :]          # (r, m, 3)
    u = np.sum(tvec * pvec[None, :, :], axis=2) * inv_det[None, :]
    qvec = np.cross(tvec, e1[None, :, :])          # (r, m, 3)
    v = np.sum(qvec * d, axis=2) * inv_det[None, :]
    t = np.sum(qvec * e2[None, :, :], axis=2) * inv_det[None, :]

    hit = (
        ok[None, :]
        & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
        & (t > _RAY_OFFSET)
    )
    if exclude is not None:
        hit[np.arange(len(origins)), np.asarray(exclude)] = False
    return hit.any(axis=1)


def illuminate(mesh, exc):
    """PO surface currents on a mesh for one plane-wave excitation.

    A facet is lit iff normal . u_tx > 0 and its centroid sees the
    transmitter past every other facet.  Lit facets carry
    J = 2 n x H_inc at the centroid; shadowed facets carry exact zeros.
    """
    global _illuminate_calls
    _illuminate_calls += 1
    if mesh.facet_count == 0:
        raise MeshError("empty mesh")
    u_tx = exc.tx_direction
    k = 2 * np.pi * exc.frequency_hz / SPEED_OF_LIGHT
    h_t, v_t = polarization_basis(exc.tx_azimuth_deg, exc.tx_elevation_deg)
    e_pol = h_t if exc.polarization == "H" else v_t
    # incident H field amplitude at the origin (propagation along -u_tx)
    H0 = np.cross(-u_tx, e_pol) * (exc.amplitude / ETA0)

    facing = mesh.normals @ u_tx > 0.0
    lit = facing.copy()
    idx = np.nonzero(facing)[0]
    if idx.size:
        occ = ray_occluded(mesh, mesh.centroids[idx], u_tx, exclude=idx)
        lit[idx[occ]] = False

    phase = np.exp(-1j * k * (mesh.centroids @ u_tx))
    J = 2.0 * np.cross(mesh.normals, H0) * phase[:, None]
    J = np.where(lit[:, None], J, 0.0 + 0.0j)
    return CurrentMap(J=J, lit=lit, excitation=exc)


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------

def far_field_batch(mesh, currents, rx_azimuth_deg, rx_elevation_deg,
                    rx_occlusion=False):
    """Range-normalized far field at many receiver directions at once.

    Returns a complex array (n_rx, 2) with columns (E_H, E_V).  The facet
    sum runs in facet-index order for bit reproducibility.  With
    rx_occlusion=True, facets whose centroid cannot see the receiver are
    dropped per direction (off by default: PO forward scattering relies
    on lit-facet radiation through the shadow region).
    """
    exc = currents.excitation
    k = 2 * np.pi * exc.frequency_hz / SPEED_OF_LIGHT
    u_tx = exc.tx_direction

    rx_az = np.atleast_1d(np.asarray(rx_azimuth_deg, dtype=float))
    rx_el = np.broadcast_to(np.asarray(rx_elevation_deg, dtype=float), rx_az.shape)
    u_rx = direction_from_angles(rx_az, rx_el)            # (n, 3)
    h_r, v_r = polarization_basis(rx_az, rx_el)

    # constant current amplitude per facet (strip the incident phase)
    tx_phase = np.exp(-1j * k * (mesh.centroids @ u_tx))
    J0 = currents.J / tx_phase[:, None]                   # (m, 3)
    J0 = np.where(currents.lit[:, None], J0, 0.0 + 0.0j)

    v0, v1, v2 = mesh.triangles()
    q = -k * (u_tx[None, :] + u_rx)                       # (n, 3)
    integrals = facet_phase_integral(
        v0[None, :, :], v1[None, :, :], v2[None, :, :], q[:, None, :]
    )                                                     # (n, m)
    if rx_occlusion:
        keep = np.empty((len(u_rx), mesh.facet_count), dtype=bool)
        for i, ur in enumerate(u_rx):
            facing = mesh.normals @ ur > 0.0
            vis = facing.copy()
            idx = np.nonzero(facing)[0]
            if idx.size:
                occ = ray_occluded(mesh, mesh.centroids[idx], ur, exclude=idx)
                vis[idx[occ]] = False
            keep[i] = vis
        integrals = np.where(keep, integrals, 0.0)

    # explicit outer-product dot keeps the facet arithmetic off BLAS so
    # results stay bit-identical whatever the thread configuration
    proj = (J0[:, 0][:, None] * u_rx[:, 0][None, :]
            + J0[:, 1][:, None] * u_rx[:, 1][None, :]
            + J0[:, 2][:, None] * u_rx[:, 2][None, :])       # (m, n)
    contrib = J0[None, :, :] * integrals[:, :, None] \
        - u_rx[:, None, :] * (proj.T * integrals)[:, :, None]
    N = (1j * k * ETA0 / (4 * np.pi)) * contrib.sum(axis=1)   # (n, 3)

    EH = np.sum(N * h_r, axis=1)
    EV = np.sum(N * v_r, axis=1)
    return np.stack([EH, EV], axis=1)


def far_field(mesh, currents, frequency_hz, rx_azimuth_deg, rx_elevation_deg,
              rx_occlusion=False):
    """Far field at a single receiver direction (see far_field_batch)."""
    if frequency_hz != currents.frequency_hz:
        raise FrequencyMismatchError(
            f"currents computed at {currents.frequency_hz} Hz, asked for {frequency_hz} Hz"
        )
    eh, ev = far_field_batch(mesh, currents, [rx_azimuth_deg], rx_elevation_deg,
                             rx_occlusion=rx_occlusion)[0]
    return FieldSample(E_H=complex(eh), E_V=complex(ev),
                       rx_azimuth_deg=float(rx_azimuth_deg),
                       rx_elevation_deg=float(rx_elevation_deg),
                       frequency_hz=float(frequency_hz))


def rcs_dbsm(field_value, incident_amplitude=1.0):
    sigma = 4 * np.pi * np.abs(field_value) ** 2 / incident_amplitude**2
    return 10 * np.log10(np.maximum(sigma, 1e-30))


def bistatic_rcs_sweep(mesh, exc, rx_elevation_deg, rx_azimuths_deg,
                       rx_occlusion=False):
    """Bistatic RCS versus receiver azimuth for the co-polarized channel.

    Returns (samples, fields): a list of RcsSample plus the raw (n, 2)
    field array so cross-pol is available without re-solving.
    """
    rx_azimuths_deg = np.asarray(rx_azimuths_deg, dtype=float)
    if rx_azimuths_deg.size == 0:
        raise ValueError("azimuth list must be non-empty")
    currents = illuminate(mesh, exc)
    fields = far_field_batch(mesh, currents, rx_azimuths_deg, rx_elevation_deg,
                             rx_occlusion=rx_occlusion)
    co = fields[:, 0] if exc.polarization == "H" else fields[:, 1]
    db = rcs_dbsm(co, exc.amplitude)
    samples = [
        RcsSample(sigma_dbsm=float(db[i]), rx_azimuth_deg=float(rx_azimuths_deg[i]),
                  rx_elevation_deg=float(rx_elevation_deg))
        for i in range(len(rx_azimuths_deg))
    ]
    return samples, fields


def current_map_to_csv(mesh, currents, path_or_file):
    """Per-facet current export: index, centroid, Re/Im of J, lit flag."""
    own = False
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "w", newline="")
        own = True
    else:
        f = path_or_file
    try:
        w = csv.writer(f)
        w.writerow(["facet", "cx", "cy", "cz",
                    "re_jx", "im_jx", "re_jy", "im_jy", "re_jz", "im_jz", "lit"])
        for i in range(mesh.facet_count):
            c = mesh.centroids[i]
            J = currents.J[i]
            w.writerow([i, repr(float(c[0])), repr(float(c[1])), repr(float(c[2])),
                        repr(float(J[0].real)), repr(float(J[0].imag)),
                        repr(float(J[1].real)), repr(float(J[1].imag)),
                        repr(float(J[2].real)), repr(float(J[2].imag)),
                        int(currents.lit[i])])
    finally:
        if own:
            f.close()
