"""Sum-of-scatterers fading engine.

A scatter environment is a 2-D room with static point scatterers and a
static transmitter at the room center. The channel to a receiver is the
normalized sum of unit-magnitude paths bounced off each scatterer; motion
of the receiver through the room produces the fading process. Distances
are always computed exactly (no small-motion approximation), so the
closed-form covariance J0(2 pi v t / lambda) can be validated against the
engine rather than being baked into it.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .constants import carrier_wavelength
from .special import bessel_j0
from .streams import substream

__all__ = [
    "ScatterEnvironment",
    "Trajectory",
    "ChannelTrace",
    "EmpiricalCdf",
    "WithinPacketVariation",
    "sample_environment",
    "channel_at",
    "channel_trace",
    "theoretical_covariance",
    "component_covariance",
    "empirical_covariance",
    "energy_samples",
    "empirical_energy_cdf",
    "within_packet_variation",
    "room_for_trajectory",
]

ENVIRONMENT_FORMAT = "scatter-environment/1"

# Fraction of packet-start channel energy (in dB, relative to the unit mean)
# above which a channel counts as "good".
DEFAULT_GOOD_THRESHOLD_DB = -7.0


@dataclass(frozen=True)
class ScatterEnvironment:
    """One multipath realization: room, scatterers, transmitter, wavelength."""

    room_width: float
    room_height: float
    scatterers: np.ndarray  # (n, 2) meters
    tx_position: np.ndarray  # (2,) meters
    wavelength: float
    seed: int

    def __post_init__(self):
        sc = np.asarray(self.scatterers, dtype=float)
        tx = np.asarray(self.tx_position, dtype=float)
        object.__setattr__(self, "scatterers", sc)
        object.__setattr__(self, "tx_position", tx)
        if self.room_width <= 0 or self.room_height <= 0:
            raise ValueError("room dimensions must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if sc.ndim != 2 or sc.shape[1] != 2 or sc.shape[0] < 1:
            raise ValueError("scatterers must be an (n >= 1, 2) array")
        for name, pts in (("scatterer", sc), ("tx_position", tx[None, :])):
            if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > self.room_width) or np.any(
                pts[:, 1] < 0
            ) or np.any(pts[:, 1] > self.room_height):
                raise ValueError(f"{name} positions must lie inside the room")

    @property
    def n_scatterers(self) -> int:
        return self.scatterers.shape[0]

    def contains(self, positions: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(positions)
        return (
            (p[:, 0] >= 0)
            & (p[:, 0] <= self.room_width)
            & (p[:, 1] >= 0)
            & (p[:, 1] <= self.room_height)
        )

    def to_json(self) -> str:
        doc = {
            "format": ENVIRONMENT_FORMAT,
            "room_width": self.room_width,
            "room_height": self.room_height,
            "scatterers": self.scatterers.tolist(),
            "tx_position": self.tx_position.tolist(),
            "wavelength": self.wavelength,
            "seed": int(self.seed),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScatterEnvironment":
        doc = json.loads(text)
        fmt = doc.get("format")
        if fmt != ENVIRONMENT_FORMAT:
            raise ValueError(f"unsupported environment format: {fmt!r}")
        return cls(
            room_width=doc["room_width"],
            room_height=doc["room_height"],
            scatterers=np.asarray(doc["scatterers"], dtype=float),
            tx_position=np.asarray(doc["tx_position"], dtype=float),
            wavelength=doc["wavelength"],
            seed=doc["seed"],
        )


@dataclass(frozen=True)
class Trajectory:
    """Constant-velocity receiver path: position(t) = start + v t (cos, sin)."""

    start: np.ndarray  # (2,) meters
    speed: float  # m/s
    heading: float  # radians

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        if self.speed < 0:
            raise ValueError("speed must be nonnegative")

    def positions_at(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        direction = np.array([np.cos(self.heading), np.sin(self.heading)])
        return self.start[None, :] + self.speed * t[:, None] * direction[None, :]


@dataclass(frozen=True)
class ChannelTrace:
    """Time-stamped complex channel coefficients along a trajectory."""

    times: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        h = np.asarray(self.coefficients, dtype=complex)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coefficients", h)
        if t.shape != h.shape or t.ndim != 1:
            raise ValueError("times and coefficients must be 1-D and of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(h)):
            raise ValueError("coefficients must be finite")

    def energies(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("time_s,h_real,h_imag\n")
            for t, h in zip(self.times, self.coefficients):
                f.write(f"{float(t)!r},{float(h.real)!r},{float(h.imag)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "ChannelTrace":
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        return cls(data["time_s"], data["h_real"] + 1j * data["h_imag"])


def sample_environment(
    n_scatterers: int,
    room: tuple[float, float],
    carrier_freq: float,
    seed: int,
) -> ScatterEnvironment:
    """Draw scatterers i.i.d. uniform over the room; transmitter at the center."""
    if n_scatterers < 1:
        raise ValueError("need at least one scatterer")
    width, height = float(room[0]), float(room[1])
    if width <= 0 or height <= 0:
        raise ValueError("room dimensions must be positive")
    wavelength = carrier_wavelength(carrier_freq)
    rng = substream(seed, 0)
    scatterers = rng.uniform((0.0, 0.0), (width, height), size=(n_scatterers, 2))
    return ScatterEnvironment(
        room_width=width,
        room_height=height,
        scatterers=scatterers,
        tx_position=np.array([width / 2.0, height / 2.0]),
        wavelength=wavelength,
        seed=int(seed),
    )


def _coefficients(
    scatterers: np.ndarray,
    tx: np.ndarray,
    positions: np.ndarray,
    wavelength: float,
) -> np.ndarray:
    """Channel at each receiver position: (1/sqrt(n)) sum_i e^{j 2 pi (d_rx + d_tx)/lambda}."""
    d_rx = np.linalg.norm(positions[..., None, :] - scatterers, axis=-1)
    d_tx = np.linalg.norm(scatterers - tx, axis=-1)
    phases = 2.0 * np.pi * (d_rx + d_tx) / wavelength
    n = scatterers.shape[-2]
    return np.exp(1j * phases).sum(axis=-1) / np.sqrt(n)


def channel_at(env: ScatterEnvironment, rx_position) -> complex:
    """Exact channel coefficient at one receiver position."""
    pos = np.asarray(rx_position, dtype=float)
    if not env.contains(pos)[0]:
        raise ValueError(f"receiver position {pos.tolist()} lies outside the room")
    return complex(_coefficients(env.scatterers, env.tx_position, pos[None, :], env.wavelength)[0])


def channel_trace(env: ScatterEnvironment, traj: Trajectory, times) -> ChannelTrace:
    """Channel coefficients along a trajectory, from exact path lengths."""
    t = np.asarray(times, dtype=float)
    positions = traj.positions_at(t)
    inside = env.contains(positions)
    if not np.all(inside):
        first = t[np.argmin(inside)]
        raise ValueError(f"trajectory exits the room, first at t = {first:g} s")
    h = _coefficients(env.scatterers, env.tx_position, positions, env.wavelength)
    if np.any(np.abs(h) > np.sqrt(env.n_scatterers) * (1 + 1e-12)):
        raise AssertionError("coefficient magnitude exceeded sqrt(n)")
    return ChannelTrace(times=t, coefficients=h)


def theoretical_covariance(v: float, t, wavelength: float):
    """Closed-form cross-covariance E[h(t) h*(0)] = J0(2 pi v t / lambda)."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return bessel_j0(2.0 * np.pi * v * np.asarray(t, dtype=float) / wavelength)


def component_covariance(v: float, t, wavelength: float):
    """Per-component (in-phase or quadrature) covariance, half the complex one."""
    return theoretical_covariance(v, t, wavelength) / 2.0


def room_for_trajectory(v: float, duration: float, base: float = 20.0) -> float:
    """Square room side that keeps any central-half start inside for the sweep."""
    return max(base, 4.0 * v * duration * 1.01)


def _start_points(rng: np.random.Generator, room: float, count: int) -> np.ndarray:
    # Central half of the room, so short sweeps cannot exit.
    return rng.uniform(room / 4.0, 3.0 * room / 4.0, size=(count, 2))


def ensemble_traces(
    v: float,
    wavelength: float,
    times: np.ndarray,
    n_envs: int,
    n_scatterers: int = 100,
    seed: int = 0,
    room: float | None = None,
    batch: int = 4000,
) -> np.ndarray:
    """Channel coefficients (n_envs, len(times)) over independent environments.

    Each environment gets fresh uniform scatterers, a fresh start point in the
    central half of the room, and a fresh heading; randomness is derived per
    batch from the master seed, so results do not depend on batch scheduling.
    """
    t = np.asarray(times, dtype=float)
    duration = float(t.max(initial=0.0) - min(t.min(initial=0.0), 0.0))
    if room is None:
        room = room_for_trajectory(v, duration)
    tx = np.array([room / 2.0, room / 2.0])
    out = np.empty((n_envs, t.size), dtype=complex)
    done = 0
    batch_index = 0
    max_elems = 2.5e7
    batch = max(1, min(batch, int(max_elems / max(1, t.size * n_scatterers))))
    while done < n_envs:
        b = min(batch, n_envs - done)
        rng = substream(seed, 1, batch_index)
        sc = rng.uniform(0.0, room, size=(b, n_scatterers, 2))
        start = _start_points(rng, room, b)
        heading = rng.uniform(0.0, 2.0 * np.pi, size=b)
        direction = np.stack([np.cos(heading), np.sin(heading)], axis=1)
        pos = start[:, None, :] + v * t[None, :, None] * direction[:, None, :]
        d_rx = np.linalg.norm(pos[:, :, None, :] - sc[:, None, :, :], axis=3)
        d_tx = np.linalg.norm(sc - tx[None, None, :], axis=2)
        h = np.exp(2j * np.pi * (d_rx + d_tx[:, None, :]) / wavelength).sum(axis=2)
        out[done : done + b] = h / np.sqrt(n_scatterers)
        done += b
        batch_index += 1
    return out


def empirical_covariance(
    v: float,
    carrier_freq: float,
    lags_wavelengths: np.ndarray,
    n_envs: int = 10_000,
    n_scatterers: int = 100,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble estimate of E[h(tau) h*(0)] at the given spatial lags.

    Returns (lags_wavelengths, complex covariance estimates).
    """
    lam = carrier_wavelength(carrier_freq)
    lags = np.asarray(lags_wavelengths, dtype=float)
    times = np.concatenate([[0.0], lags * lam / v])
    traces = ensemble_traces(v, lam, times, n_envs, n_scatterers, seed)
    ref = traces[:, :1]
    cov = (traces[:, 1:] * np.conj(ref)).mean(axis=0)
    return lags, cov


def energy_samples(
    n_scatterers: int,
    samples: int,
    seed: int,
    room: float = 20.0,
    carrier_freq: float = 3e9,
) -> np.ndarray:
    """|h|^2 over fresh environments and receiver positions."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lam = carrier_wavelength(carrier_freq)
    tx = np.array([room / 2.0, room / 2.0])
    out = np.empty(samples)
    done = 0
    batch_index = 0
    batch = max(1, int(2.5e7 / max(1, n_scatterers)))
    while done < samples:
        b = min(batch, samples - done)
        rng = substream(seed, 2, batch_index)
        sc = rng.uniform(0.0, room, size=(b, n_scatterers, 2))
        rx = _start_points(rng, room, b)
        d_rx = np.linalg.norm(sc - rx[:, None, :], axis=2)
        d_tx = np.linalg.norm(sc - tx[None, None, :], axis=2)
        h = np.exp(2j * np.pi * (d_rx + d_tx) / lam).sum(axis=1) / np.sqrt(n_scatterers)
        out[done : done + b] = np.abs(h) ** 2
        done += b
        batch_index += 1
    return out


@dataclass(frozen=True)
class EmpiricalCdf:
    """Sorted sample values with their empirical CDF."""

    values: np.ndarray
    cdf: np.ndarray

    def ks_distance_to(self, reference_cdf) -> float:
        """Sup-distance between the empirical CDF and a reference CDF callable."""
        ref = reference_cdf(self.values)
        n = self.values.size
        upper = np.max(np.abs(ref - np.arange(1, n + 1) / n))
        lower = np.max(np.abs(ref - np.arange(0, n) / n))
        return float(max(upper, lower))

    def probability_below(self, x: float) -> float:
        return float(np.searchsorted(self.values, x, side="right") / self.values.size)


def empirical_energy_cdf(
    n_scatterers: int,
    samples: int,
    seed: int,
    room: float = 20.0,
    carrier_freq: float = 3e9,
) -> EmpiricalCdf:
    """Empirical CDF of channel energy over fresh environments."""
    e = np.sort(energy_samples(n_scatterers, samples, seed, room, carrier_freq))
    return EmpiricalCdf(values=e, cdf=np.arange(1, samples + 1) / samples)


@dataclass(frozen=True)
class WithinPacketVariation:
    """CCDFs of the within-packet max/min energy ratio (dB)."""

    ratios_db_all: np.ndarray = field(repr=False)
    ratios_db_good_start: np.ndarray = field(repr=False)
    good_threshold_db: float = DEFAULT_GOOD_THRESHOLD_DB

    @staticmethod
    def _ccdf(sorted_vals: np.ndarray, x: np.ndarray) -> np.ndarray:
        return 1.0 - np.searchsorted(sorted_vals, x, side="right") / sorted_vals.size

    def ccdf_tables(self, grid: np.ndarray | None = None):
        """(ratio_db, ccdf_all, ccdf_good_start) on a shared grid."""
        if grid is None:
            hi = max(self.ratios_db_all.max(initial=0.0), 1.0)
            grid = np.linspace(0.0, hi, 512)
        return grid, self._ccdf(self.ratios_db_all, grid), self._ccdf(
            self.ratios_db_good_start, grid
        )

    def percentile_good_start(self, q: float) -> float:
        return float(np.percentile(self.ratios_db_good_start, q))

    def percentile_all(self, q: float) -> float:
        return float(np.percentile(self.ratios_db_all, q))


def within_packet_variation(
    v: float,
    wavelength: float,
    packet_duration: float,
    good_threshold_db: float = DEFAULT_GOOD_THRESHOLD_DB,
    n_trials: int = 20_000,
    points_per_packet: int = 50,
    n_scatterers: int = 100,
    seed: int = 0,
) -> WithinPacketVariation:
    """Distribution of max/min channel energy over one packet duration.

    Each trial samples a fresh environment and sweeps the packet at
    ``points_per_packet`` uniformly spaced instants (minimum 50, so even at
    20 m/s and millisecond packets the motion between samples stays far below
    a wavelength). The conditioned table keeps trials whose energy at the
    packet start exceeds ``good_threshold_db`` relative to the unit mean.
    """
    if packet_duration <= 0:
        raise ValueError("packet duration must be positive")
    if n_trials < 1:
        raise ValueError("need at least one trial")
    points = max(50, points_per_packet)
    times = np.linspace(0.0, packet_duration, points)
    traces = ensemble_traces(v, wavelength, times, n_trials, n_scatterers, seed)
    energies = np.abs(traces) ** 2
    ratios = 10.0 * np.log10(energies.max(axis=1) / energies.min(axis=1))
    good0 = energies[:, 0] > 10.0 ** (good_threshold_db / 10.0)
    return WithinPacketVariation(
        ratios_db_all=np.sort(ratios),
        ratios_db_good_start=np.sort(ratios[good0]),
        good_threshold_db=good_threshold_db,
    )
