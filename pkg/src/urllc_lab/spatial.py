"""Spatial correlation of fades between node positions.

Conditioning one link's fade on another a given distance away tightens the
variance by (1 - rho^2) and shifts the mean by rho h_p; for nodes a few
wavelengths apart rho is already small, which is why spatially separated
relays provide usable diversity. The pessimistic copy model trades that
structure for a single knob q = P(fresh fade per link).
"""

from dataclasses import dataclass

import numpy as np

from .special import bessel_j0
from .streams import substream

__all__ = [
    "SpatialFadeConditional",
    "spatial_correlation",
    "conditional_spatial_fade",
    "correlation_variance_penalty_db",
    "q_correlated_link_fades",
]


@dataclass(frozen=True)
class SpatialFadeConditional:
    """CN(mean, variance) law of a fade given a fade at another position."""

    mean: complex
    variance: float
    rho: float

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("correlation must lie in [-1, 1]")
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        std = np.sqrt(self.variance / 2.0)
        noise = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        return self.mean + std * noise


def spatial_correlation(distance: float, wavelength: float) -> float:
    """Fade correlation between two points a given distance apart."""
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    return float(bessel_j0(2.0 * np.pi * distance / wavelength))


def conditional_spatial_fade(
    h_p: complex, distance: float, wavelength: float, sigma_sq: float
) -> SpatialFadeConditional:
    """Law of the fade at distance ``distance`` from a point with fade ``h_p``."""
    if sigma_sq <= 0:
        raise ValueError("unconditional variance must be positive")
    rho = spatial_correlation(distance, wavelength)
    return SpatialFadeConditional(
        mean=rho * h_p, variance=sigma_sq * (1.0 - rho**2), rho=rho
    )


def correlation_variance_penalty_db(rho: float) -> float:
    """SNR increase (dB) restoring the unconditional variance at correlation rho.

    Worst case is a deeply faded conditioning point (h_p = 0), where the
    conditional fade is CN(0, sigma^2 (1 - rho^2)); the lost variance is
    equivalent to an SNR drop of -10 log10(1 - rho^2).
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("|rho| must be strictly below 1")
    return float(-10.0 * np.log10(1.0 - rho**2))


def q_correlated_link_fades(n_links: int, q: float, seed: int) -> np.ndarray:
    """Pessimistically correlated link fades.

    The first fade is a fresh CN(0, 1) draw; each later link is fresh with
    probability q and otherwise an exact copy of a uniformly chosen earlier
    fade (complex coefficient, not just its magnitude). Every fade remains
    marginally CN(0, 1) for any q.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if n_links < 1:
        raise ValueError("need at least one link")
    rng = substream(seed, 3)
    fades = np.empty(n_links, dtype=complex)
    fades[0] = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
    for k in range(1, n_links):
        if rng.random() < q:
            fades[k] = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
        else:
            fades[k] = fades[rng.integers(0, k)]
    return fades
