"""Power spectral density and energy bandwidth of the fading process.

The estimator is an averaged periodogram over independent traces (segments
of a quarter trace length, 50% overlap, per-trace mean removal). The default
rectangular window is deliberate: the fading process observed over a finite
record carries spectral mass beyond the nominal Doppler edge v/lambda in a
skirt that decays near 20 dB per decade, and that skirt is exactly what the
energy-bandwidth analysis quantifies. A Hann window would bury it below its
own -60 dB sidelobe floor; pass ``window="hann"`` to see that happen.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .constants import carrier_wavelength
from .fading import ensemble_traces, room_for_trajectory

__all__ = ["Spectrum", "psd_estimate", "energy_bandwidth"]


@dataclass(frozen=True)
class Spectrum:
    """One-sided PSD with frequencies in cycles/meter (temporal Hz / speed)."""

    frequencies: np.ndarray
    power_density: np.ndarray
    total_energy: float
    speed: float

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        p = np.asarray(self.power_density, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "power_density", p)
        if f.shape != p.shape or f.ndim != 1:
            raise ValueError("frequencies and power_density must match")
        if np.any(p < 0):
            raise ValueError("power density must be nonnegative")
        integral = float(np.trapezoid(p, f))
        if not np.isclose(integral, self.total_energy, rtol=1e-9, atol=0.0):
            raise ValueError("total_energy must equal the integral of the density")

    def temporal_frequencies(self) -> np.ndarray:
        return self.frequencies * self.speed

    def cumulative_energy(self) -> np.ndarray:
        df = np.diff(self.frequencies)
        mids = 0.5 * (self.power_density[1:] + self.power_density[:-1])
        return np.concatenate([[0.0], np.cumsum(mids * df)])


def psd_estimate(
    v: float,
    carrier_freq: float,
    duration: float,
    sample_rate: float,
    n_traces: int = 64,
    n_scatterers: int = 100,
    seed: int = 0,
    window: str = "boxcar",
    segments_per_trace: int = 4,
) -> Spectrum:
    """Averaged one-sided periodogram of the fading process.

    Traces are simulated over independent environments in a room large enough
    to contain the full sweep. The returned density integrates to the mean
    trace variance, with frequencies normalized to cycles/meter.
    """
    lam = carrier_wavelength(carrier_freq)
    if sample_rate <= 20.0 * v / lam:
        raise ValueError(
            f"sample_rate {sample_rate:g} Hz is too low: need > 20 v/lambda = "
            f"{20.0 * v / lam:g} Hz to resolve content beyond the Doppler edge"
        )
    if duration * v < 100.0 * lam:
        raise ValueError(
            f"duration {duration:g} s sweeps only {duration * v / lam:.1f} wavelengths; "
            f"need at least 100 (duration >= {100.0 * lam / v:g} s at this speed)"
        )
    n_samples = int(round(duration * sample_rate))
    times = np.arange(n_samples) / sample_rate
    room = room_for_trajectory(v, duration)
    traces = ensemble_traces(
        v, lam, times, n_traces, n_scatterers, seed, room=room, batch=max(1, int(2.5e7 / (n_samples * n_scatterers)))
    )
    traces = traces - traces.mean(axis=1, keepdims=True)

    nper = n_samples // segments_per_trace
    acc = None
    for h in traces:
        f, p = signal.welch(
            h,
            fs=sample_rate,
            window=window,
            nperseg=nper,
            noverlap=nper // 2,
            detrend=False,
            scaling="density",
            return_onesided=False,
        )
        acc = p if acc is None else acc + p
    acc /= n_traces

    # Fold the two-sided density onto nonnegative frequencies.
    half = len(f) // 2
    freqs = np.concatenate([[0.0], f[1:half], [abs(f[half])]])
    density = np.concatenate([[acc[0]], acc[1:half] + acc[-1:-half:-1], [acc[half]]])

    spatial = freqs / v
    density_spatial = density * v  # preserve the integral under the change of units
    total = float(np.trapezoid(density_spatial, spatial))
    return Spectrum(
        frequencies=spatial, power_density=density_spatial, total_energy=total, speed=v
    )


def energy_bandwidth(spec: Spectrum, fraction: float) -> float:
    """Smallest band about zero holding >= ``fraction`` of the spectrum energy.

    Linear interpolation between bins; same units as ``spec.frequencies``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    if spec.total_energy <= 0:
        raise ValueError("spectrum carries no energy")
    cum = spec.cumulative_energy()
    cum /= cum[-1]
    return float(np.interp(fraction, cum, spec.frequencies))
