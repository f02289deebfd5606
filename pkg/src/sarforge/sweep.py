"""Data collection: fixed transmitter, receiver swept in azimuth at fixed
elevation, stepped frequency.

One run = the complex scattered field on the full
(receiver azimuth x frequency) grid for both receive channels and one
transmit configuration.  Surface currents are computed once per
frequency and reused across all receiver angles, mirroring the
store-currents-then-scan-receiver procedure; each sample is a
single-frequency solve and wideband behavior arises only from the
stepped sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import po
from .container import read_container, read_header, write_container

_INT_TOL = 1e-9


def _near_integer(x):
    return abs(x - round(x)) <= _INT_TOL * max(1.0, abs(x))


@dataclass(frozen=True)
class SweepConfig:
    """Sweep parameters; defaults follow the standard 1 GHz / 750 MHz /
    15 MHz / 0.72-degree data-collection setup."""

    rx_elevation_deg: float
    tx_azimuth_deg: float
    tx_elevation_deg: float
    tx_polarization: str = "H"
    center_frequency_hz: float = 1e9
    bandwidth_hz: float = 750e6
    frequency_step_hz: float = 15e6
    rx_azimuth_start_deg: float = 0.0
    rx_azimuth_end_deg: float = 360.0
    rx_azimuth_step_deg: float = 0.72
    amplitude: float = 1.0

    def __post_init__(self):
        if self.tx_polarization not in ("H", "V"):
            raise ValueError(f"tx_polarization must be 'H' or 'V', got {self.tx_polarization!r}")
        if self.bandwidth_hz < 0 or self.frequency_step_hz <= 0:
            raise ValueError("bandwidth must be >= 0 and frequency step > 0")
        if not _near_integer(self.bandwidth_hz / self.frequency_step_hz):
            raise ValueError("bandwidth must be an integral number of frequency steps")
        span = self.rx_azimuth_end_deg - self.rx_azimuth_start_deg
        if span <= 0 or self.rx_azimuth_step_deg <= 0:
            raise ValueError("azimuth span and step must be positive")
        if not _near_integer(span / self.rx_azimuth_step_deg):
            raise ValueError("azimuth span must be an integral number of steps")
        if self.center_frequency_hz - self.bandwidth_hz / 2 <= 0:
            raise ValueError("frequency grid extends to non-positive frequencies")

    @property
    def n_frequencies(self):
        return int(round(self.bandwidth_hz / self.frequency_step_hz)) + 1

    @property
    def full_circle(self):
        span = self.rx_azimuth_end_deg - self.rx_azimuth_start_deg
        return _near_integer(span / 360.0)

    @property
    def n_azimuths(self):
        span = self.rx_azimuth_end_deg - self.rx_azimuth_start_deg
        n = int(round(span / self.rx_azimuth_step_deg))
        return n if self.full_circle else n + 1   # end-exclusive on full circles

    def frequencies(self):
        f0 = self.center_frequency_hz - self.bandwidth_hz / 2
        return f0 + np.arange(self.n_frequencies) * self.frequency_step_hz

    def rx_azimuths(self):
        return (self.rx_azimuth_start_deg
                + np.arange(self.n_azimuths) * self.rx_azimuth_step_deg)

    def to_dict(self):
        return {
            "rx_elevation_deg": self.rx_elevation_deg,
            "tx_azimuth_deg": self.tx_azimuth_deg,
            "tx_elevation_deg": self.tx_elevation_deg,
            "tx_polarization": self.tx_polarization,
            "center_frequency_hz": self.center_frequency_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "frequency_step_hz": self.frequency_step_hz,
            "rx_azimuth_start_deg": self.rx_azimuth_start_deg,
            "rx_azimuth_end_deg": self.rx_azimuth_end_deg,
            "rx_azimuth_step_deg": self.rx_azimuth_step_deg,
            "amplitude": self.amplitude,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class RunData:
    """Samples of one run: complex grid (n_azimuth, n_frequency, 2),
    channel 0 = E_H, channel 1 = E_V."""

    config: SweepConfig
    samples: np.ndarray
    mesh_name: str
    mesh_hash: str

    def __post_init__(self):
        expect = (self.config.n_azimuths, self.config.n_frequencies, 2)
        if self.samples.shape != expect:
            raise ValueError(f"sample grid {self.samples.shape} does not match config {expect}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples in run data")


class NonFiniteSampleError(RuntimeError):
    def __init__(self, frequency_hz, azimuth_index):
        self.frequency_hz = frequency_hz
        self.azimuth_index = azimuth_index
        super().__init__(
            f"non-finite far-field sample at f={frequency_hz} Hz, azimuth index {azimuth_index}"
        )


def run_sweep(mesh, cfg, rx_occlusion=False, progress=None):
    """Execute one run: illuminate once per frequency, then evaluate the
    far field over the whole receiver circle at that frequency.

    Aborts with NonFiniteSampleError if any sample comes out non-finite.
    """
    freqs = cfg.frequencies()
    azimuths = cfg.rx_azimuths()
    grid = np.empty((cfg.n_azimuths, cfg.n_frequencies, 2), dtype=np.complex128)
    for fi, f in enumerate(freqs):
        exc = po.PlaneWaveExcitation(
            frequency_hz=float(f),
            tx_azimuth_deg=cfg.tx_azimuth_deg,
            tx_elevation_deg=cfg.tx_elevation_deg,
            polarization=cfg.tx_polarization,
            amplitude=cfg.amplitude,
        )
        currents = po.illuminate(mesh, exc)
        fields = po.far_field_batch(mesh, currents, azimuths, cfg.rx_elevation_deg,
                                    rx_occlusion=rx_occlusion)
        bad = ~np.isfinite(fields)
        if bad.any():
            raise NonFiniteSampleError(float(f), int(np.nonzero(bad.any(axis=1))[0][0]))
        grid[:, fi, :] = fields
        if progress is not None:
            progress(fi + 1, len(freqs))
    return RunData(config=cfg, samples=grid, mesh_name=mesh.name,
                   mesh_hash=mesh.content_hash())


def save_run(run, path, extra_header=None):
    """Persist a run losslessly to a BSAR1 file."""
    header = {
        "variant": "run",
        "sweep_config": run.config.to_dict(),
        "mesh_name": run.mesh_name,
        "mesh_hash": run.mesh_hash,
        "channels": ["E_H", "E_V"],
        "axes": ["rx_azimuth", "frequency", "channel"],
    }
    if extra_header:
        header.update(extra_header)
    return write_container(path, header, run.samples)


def load_run(path):
    header, payload = read_container(path)
    if header.get("variant") != "run":
        raise ValueError(f"{path} is not a run file (variant={header.get('variant')!r})")
    cfg = SweepConfig.from_dict(header["sweep_config"])
    return RunData(config=cfg, samples=payload,
                   mesh_name=header.get("mesh_name", ""),
                   mesh_hash=header.get("mesh_hash", ""))


def load_run_header(path):
    """Config and provenance without touching the sample payload."""
    header = read_header(path)
    if header.get("variant") != "run":
        raise ValueError(f"{path} is not a run file (variant={header.get('variant')!r})")
    return header


DEFAULT_TX_AZIMUTH_COUNT = 24
DEFAULT_ELEVATIONS = (10.0, 15.0)


@dataclass(frozen=True)
class PlannedRun:
    target: str
    config: SweepConfig


def plan_dataset(targets, tx_azimuths_deg=None, elevations_deg=DEFAULT_ELEVATIONS,
                 polarizations=("H",), base_config=None):
    """Cartesian-product dataset plan.

    The default transmitter grid of 24 azimuths and elevations
    {10, 15} yields 48 runs per polarization per target.  Each planned
    run pairs a target name with a complete SweepConfig whose receiver
    elevation tracks the transmitter elevation.
    """
    if tx_azimuths_deg is None:
        tx_azimuths_deg = [360.0 * i / DEFAULT_TX_AZIMUTH_COUNT
                           for i in range(DEFAULT_TX_AZIMUTH_COUNT)]
    plan = []
    for target in targets:
        for pol in polarizations:
            for el in elevations_deg:
                for az in tx_azimuths_deg:
                    if base_config is not None:
                        cfg = replace(base_config, tx_azimuth_deg=float(az),
                                      tx_elevation_deg=float(el),
                                      rx_elevation_deg=float(el),
                                      tx_polarization=pol)
                    else:
                        cfg = SweepConfig(rx_elevation_deg=float(el),
                                          tx_azimuth_deg=float(az),
                                          tx_elevation_deg=float(el),
                                          tx_polarization=pol)
                    plan.append(PlannedRun(target=str(target), config=cfg))
    return plan
