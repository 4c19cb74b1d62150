"""Gaussian-process channel prediction.

Past complex channel samples condition a zero-mean Gaussian process whose
per-component covariance is J0(2 pi v dt / lambda) / 2. The conditional law
of a future coefficient is complex normal, so the future channel energy is
noncentral chi-square with two degrees of freedom; exceedance probabilities
come from the Marcum Q function.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import carrier_wavelength, db_to_linear
from .fading import component_covariance, ensemble_traces
from .intervals import clopper_pearson
from .special import marcum_q1

__all__ = [
    "ObservationSet",
    "GpPrediction",
    "PastWindow",
    "GpChannelPredictor",
    "build_covariance",
    "predict",
    "energy_exceedance",
    "predictive_energy_quantile",
    "good_amplitude_threshold",
    "MispredictionEstimate",
    "misprediction_probability",
    "coherence_distance",
]

_JITTER_START = 1e-10
_JITTER_LIMIT = 1e-6


@dataclass(frozen=True)
class ObservationSet:
    """Past channel measurements h_1..h_m at strictly increasing times."""

    times: np.ndarray
    coefficients: np.ndarray
    speed: float
    wavelength: float

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        h = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coefficients", h)
        if t.size < 1 or t.shape != h.shape:
            raise ValueError("need m >= 1 observations with matching times")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("observation times must be strictly increasing")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")


@dataclass(frozen=True)
class GpPrediction:
    """Conditional distribution of the channel at one future time."""

    mu_i: float
    mu_q: float
    sigma_sq: float  # per-component conditional variance
    t_future: float

    def __post_init__(self):
        if not (-1e-9 <= self.sigma_sq <= 0.5 + 1e-9):
            raise ValueError("conditional variance must lie in [0, 1/2]")
        if not (math.isfinite(self.mu_i) and math.isfinite(self.mu_q)):
            raise ValueError("conditional mean must be finite")
        object.__setattr__(self, "sigma_sq", float(min(max(self.sigma_sq, 0.0), 0.5)))

    @property
    def nu(self) -> float:
        return math.hypot(self.mu_i, self.mu_q)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @property
    def mean(self) -> complex:
        return complex(self.mu_i, self.mu_q)


def build_covariance(obs: ObservationSet, t_future: float):
    """Kernel blocks (K, k_star, k_star_star) for the observation times."""
    dt = obs.times[:, None] - obs.times[None, :]
    K = component_covariance(obs.speed, dt, obs.wavelength)
    k_star = component_covariance(obs.speed, t_future - obs.times, obs.wavelength)
    k_star_star = 0.5
    return np.atleast_2d(K), np.atleast_1d(k_star), k_star_star


def _solve_spd(K: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve K x = rhs with escalating diagonal jitter on Cholesky failure."""
    jitter = _JITTER_START
    while True:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
            return np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > _JITTER_LIMIT:
                raise np.linalg.LinAlgError(
                    "covariance matrix is singular even after jitter; "
                    "observation times are too close together"
                )


def predict(obs: ObservationSet, t_future: float) -> GpPrediction:
    """Conditional mean and per-component variance of h(t_future)."""
    K, k_star, k_ss = build_covariance(obs, t_future)
    w = _solve_spd(K, k_star)
    mu = complex(np.dot(w, obs.coefficients))
    sigma_sq = float(k_ss - np.dot(k_star, w))
    return GpPrediction(mu_i=mu.real, mu_q=mu.imag, sigma_sq=max(sigma_sq, 0.0), t_future=t_future)


class GpChannelPredictor:
    """Estimator-style wrapper: fit on past samples, predict future times.

    The kernel is fixed by the physics (speed and wavelength); fitting only
    stores the observations and factorizes the covariance once.
    """

    def __init__(self, speed: float, wavelength: float):
        self.speed = speed
        self.wavelength = wavelength
        self._obs = None

    def get_params(self) -> dict:
        return {"speed": self.speed, "wavelength": self.wavelength}

    def fit(self, times, coefficients) -> "GpChannelPredictor":
        self._obs = ObservationSet(
            times=times, coefficients=coefficients, speed=self.speed, wavelength=self.wavelength
        )
        return self

    def predict(self, t_future: float) -> GpPrediction:
        if self._obs is None:
            raise RuntimeError("predictor is not fitted; call fit(times, coefficients) first")
        return predict(self._obs, t_future)


def energy_exceedance(pred: GpPrediction, threshold: float) -> float:
    """P(|h(t_future)|^2 > threshold) under the conditional law."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if threshold == 0.0:
        return 1.0
    if pred.sigma_sq == 0.0:
        return 1.0 if pred.nu**2 > threshold else 0.0
    return marcum_q1(pred.nu / pred.sigma, math.sqrt(threshold) / pred.sigma)


def predictive_energy_quantile(pred: GpPrediction, prob: float) -> float:
    """Energy level x with P(|h|^2 <= x) = prob under the conditional law."""
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie strictly between 0 and 1")
    if pred.sigma_sq == 0.0:
        return pred.nu**2
    lo, hi = 0.0, (pred.nu + 10.0 * pred.sigma) ** 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - energy_exceedance(pred, mid) < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * (1.0 + hi):
            break
    return 0.5 * (lo + hi)


def good_amplitude_threshold(sigma: float, energy_threshold: float) -> float:
    """Smallest conditional-mean magnitude that classifies a channel as good.

    Good means the predicted exceedance P(|h|^2 > threshold) is above 1/2;
    exceedance is monotone in the mean magnitude, so thresholding the
    magnitude is an exact restatement of the rule.
    """
    if sigma == 0.0:
        return math.sqrt(energy_threshold)
    b = math.sqrt(energy_threshold) / sigma
    if marcum_q1(0.0, b) >= 0.5:
        return 0.0
    lo, hi = 0.0, math.sqrt(energy_threshold) + 10.0 * sigma
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if marcum_q1(mid / sigma, b) < 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PastWindow:
    """Observation schedule: samples every ``spacing`` over the past ``window``.

    Times run from -window to 0 inclusive, so the most recent measurement is
    the reference the prediction horizon is measured from.
    """

    window_s: float = 3e-3
    spacing_s: float = 1e-3

    def times(self) -> np.ndarray:
        m = int(round(self.window_s / self.spacing_s))
        return -self.spacing_s * np.arange(m, -1, -1)


@dataclass(frozen=True)
class MispredictionEstimate:
    horizon_wavelengths: float
    error_rate: float
    errors: int
    trials: int
    ci_low: float
    ci_high: float
    energy_threshold: float


def misprediction_probability(
    nominal_snr_db: float,
    horizon_wavelengths: float,
    v: float = 10.0,
    carrier_freq: float = 3e9,
    sampling: PastWindow = PastWindow(),
    rate: float = 1.0,
    energy_threshold: float | None = None,
    n_trials: int = 100_000,
    n_scatterers: int = 100,
    seed: int = 0,
) -> MispredictionEstimate:
    """Monte Carlo rate of good/bad channel misclassification at one horizon.

    A channel is good when its energy supports ``rate`` at the nominal SNR
    (threshold (2^rate - 1)/snr unless given explicitly). Each trial draws a
    fresh environment, observes the channel on the past window, classifies
    the future instant by thresholding the predicted exceedance at 1/2, and
    compares with the simulated truth.
    """
    lam = carrier_wavelength(carrier_freq)
    if energy_threshold is None:
        energy_threshold = (2.0**rate - 1.0) / db_to_linear(nominal_snr_db)
    t_obs = sampling.times()
    t_future = horizon_wavelengths * lam / v

    dt = t_obs[:, None] - t_obs[None, :]
    K = np.atleast_2d(component_covariance(v, dt, lam))
    k_star = np.atleast_1d(component_covariance(v, t_future - t_obs, lam))
    w = _solve_spd(K, k_star)
    sigma_sq = max(float(0.5 - np.dot(k_star, w)), 0.0)
    nu_star = good_amplitude_threshold(math.sqrt(sigma_sq), energy_threshold)

    if t_future > t_obs[-1]:
        times = np.concatenate([t_obs, [t_future]])
        future_col = len(t_obs)
    else:
        times = t_obs
        future_col = int(np.argmin(np.abs(t_obs - t_future)))

    traces = ensemble_traces(v, lam, times, n_trials, n_scatterers, seed)
    h_obs = traces[:, : len(t_obs)]
    h_future = traces[:, future_col]
    nu = np.abs(h_obs @ w)
    predicted_good = nu > nu_star
    true_good = np.abs(h_future) ** 2 > energy_threshold
    errors = int(np.sum(predicted_good != true_good))
    lo, hi = clopper_pearson(errors, n_trials)
    return MispredictionEstimate(
        horizon_wavelengths=horizon_wavelengths,
        error_rate=errors / n_trials,
        errors=errors,
        trials=n_trials,
        ci_low=lo,
        ci_high=hi,
        energy_threshold=energy_threshold,
    )


def coherence_distance(
    reliability: float,
    nominal_snr_db: float,
    v: float = 10.0,
    carrier_freq: float = 3e9,
    sampling: PastWindow = PastWindow(),
    rate: float = 1.0,
    n_trials: int = 50_000,
    seed: int = 0,
    horizon_lo_wl: float = 1e-3,
    horizon_hi_wl: float = 0.5,
    iterations: int = 12,
) -> float:
    """Distance (meters) a node can move before misprediction exceeds ``reliability``.

    Bisection over the horizon with a Monte Carlo misprediction estimate at
    each probe. Raises if even the plateau (fully decorrelated) misprediction
    stays below the requested level.
    """
    lam = carrier_wavelength(carrier_freq)

    def p_at(h_wl: float, probe: int) -> float:
        return misprediction_probability(
            nominal_snr_db,
            h_wl,
            v=v,
            carrier_freq=carrier_freq,
            sampling=sampling,
            rate=rate,
            n_trials=n_trials,
            seed=seed + probe,
        ).error_rate

    p_hi = p_at(horizon_hi_wl, 0)
    if p_hi < reliability:
        raise ValueError(
            f"unreachable reliability {reliability:g}: misprediction plateaus near {p_hi:g}"
        )
    if p_at(horizon_lo_wl, 1) >= reliability:
        return horizon_lo_wl * lam

    lo, hi = math.log(horizon_lo_wl), math.log(horizon_hi_wl)
    for i in range(iterations):
        mid = 0.5 * (lo + hi)
        if p_at(math.exp(mid), 2 + i) >= reliability:
            hi = mid
        else:
            lo = mid
    return math.exp(0.5 * (lo + hi)) * lam
