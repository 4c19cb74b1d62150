"""Analytic reliability of the flooding-relay cooperative protocols.

Two schedules are modeled over a star of one controller and n nodes. The
four-phase scheme broadcasts every downlink message k1 times, relays each
k2 times through every node that decoded it, then repeats the structure for
uplink. The three-phase variant replaces the two relay phases with a single
XOR phase in which a helper that holds both messages of a node broadcasts
their XOR, serving node and controller at once.

Failure sources: static per-pair link fades (probability p_link, reciprocal
and fixed for the cycle), per-slot per-transmitter corruption (p_c, shared
by all receivers of the slot and compounding with simultaneous
transmitters), and per-slot per-receiver corruption (p_g). All slot events
are independent across slots.

The cycle-failure computation conditions on the number ``a`` of nodes with a
good controller link and, per node, on the number ``z`` of its good links
into that set. Given ``z``, a node's downlink and uplink fates are exactly
independent (the shared links enter only through ``z``), so reciprocity is
preserved; failures of distinct nodes are treated as independent given
``a``, which ignores only the reuse of node-to-node edges across different
nodes' relay pools. The Monte Carlo oracle simulates the schedule directly
and is the ground truth the approximation is validated against.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from .constants import db_to_linear

__all__ = [
    "Scheme",
    "Dynamics",
    "ProtocolConfig",
    "UncertaintyBudget",
    "OutageReport",
    "MinSnrResult",
    "spectral_efficiency",
    "link_outage",
    "snr_for_link_outage",
    "robust_link",
    "ideal_cycle_outage",
    "max_tolerable_plink",
    "capped_cycle_outage",
    "robust_cycle_outage",
    "phase_refresh_cycle_outage",
    "min_snr",
]


class Scheme(str, enum.Enum):
    OCCUPY = "occupy"
    XOR = "xor"


class Dynamics(str, enum.Enum):
    QUASI_STATIC = "quasi-static"
    PHASE_REFRESH = "phase-refresh"


@dataclass(frozen=True)
class ProtocolConfig:
    scheme: Scheme = Scheme.OCCUPY
    n: int = 30
    message_bits: float = 160.0
    cycle_time: float = 2e-3
    bandwidth: float = 20e6
    k1: int = 1
    k2: int = 1
    cap: int | None = None
    dynamics: Dynamics = Dynamics.QUASI_STATIC
    q: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "dynamics", Dynamics(self.dynamics))
        if self.n < 1:
            raise ValueError("need at least one node")
        if min(self.message_bits, self.cycle_time, self.bandwidth) <= 0:
            raise ValueError("message size, cycle time and bandwidth must be positive")
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("repetition counts must be >= 1")
        if self.cap is not None and self.cap < 1:
            raise ValueError("transmitter cap must be >= 1")
        if self.q is not None and not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")


@dataclass(frozen=True)
class UncertaintyBudget:
    """Unmodeled-error bounds: per-link offset, per-transmitter and per-receiver slot corruption."""

    p_off: float = 0.0
    p_c: float = 0.0
    p_g: float = 0.0

    RANGES = {"p_off": 0.1, "p_c": 1e-2, "p_g": 1e-2}

    def __post_init__(self):
        for name in ("p_off", "p_c", "p_g"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
            if val > self.RANGES[name]:
                warnings.warn(
                    f"{name} = {val:g} exceeds the modeled range [0, {self.RANGES[name]:g}]",
                    stacklevel=3,
                )

    def is_zero(self) -> bool:
        return self.p_off == self.p_c == self.p_g == 0.0


@dataclass(frozen=True)
class OutageReport:
    p_fail: float
    p_link: float
    spectral_efficiency: float
    snr_db: float
    breakdown: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must be a probability")


def spectral_efficiency(cfg: ProtocolConfig) -> float:
    """Per-slot rate in bits/s/Hz implied by fitting all slots into the cycle."""
    slots = (
        2 * cfg.n * (cfg.k1 + cfg.k2)
        if cfg.scheme is Scheme.OCCUPY
        else cfg.n * (2 * cfg.k1 + cfg.k2)
    )
    return cfg.message_bits * slots / (cfg.cycle_time * cfg.bandwidth)


def link_outage(snr_linear: float, rate: float) -> float:
    """P(single Rayleigh link cannot carry ``rate``) = 1 - exp(-(2^R - 1)/snr)."""
    if snr_linear <= 0:
        raise ValueError("snr must be positive")
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    return float(-math.expm1(-(2.0**rate - 1.0) / snr_linear))


def snr_for_link_outage(p_w: float, rate: float) -> float:
    """Inverse of link_outage in the snr argument (linear scale)."""
    if not 0.0 < p_w < 1.0:
        raise ValueError("p_w must lie strictly inside (0, 1)")
    return (2.0**rate - 1.0) / (-math.log1p(-p_w))


def robust_link(p_w: float, p_off: float) -> float:
    """Total link failure probability with the modeling-slack offset."""
    if not (0.0 <= p_w <= 1.0 and 0.0 <= p_off <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return min(1.0, p_w + p_off)


def _binom_pmf(n: int, p: float) -> np.ndarray:
    """Binomial(n, p) pmf for k = 0..n, evaluated in the log domain."""
    k = np.arange(n + 1)
    if p <= 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if p >= 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    logpmf = (
        gammaln(n + 1)
        - gammaln(k + 1)
        - gammaln(n - k + 1)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    return np.exp(logpmf)


def ideal_cycle_outage(n: int, p: float) -> float:
    """Cycle failure with static reciprocal links and no slot events.

    Sums, over the number a of nodes with good controller links, the chance
    that some remaining node reaches none of them. The a = n term is zero.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if p == 0.0:
        return 0.0
    pmf = _binom_pmf(n, 1.0 - p)
    terms = []
    for a in range(n):
        p_a = math.exp(a * math.log(p)) if a else 1.0
        fail_given_a = 1.0 if p_a == 1.0 else -math.expm1((n - a) * math.log1p(-p_a))
        terms.append(pmf[a] * fail_given_a)
    return min(1.0, math.fsum(terms))


def max_tolerable_plink(n: int, target: float) -> float:
    """Largest per-link failure probability meeting the cycle-failure target."""
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie strictly between 0 and 1")
    if n == 1:
        return target
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-6 * max(hi, 1e-12):
        mid = 0.5 * (lo + hi)
        if ideal_cycle_outage(n, mid) > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def capped_cycle_outage(n: int, p: float, cap: int) -> float:
    """Cycle failure when at most ``cap`` decoded nodes may relay simultaneously.

    Single repetition per phase; the per-destination relay miss probability
    becomes p^min(a, cap) instead of p^a.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if p == 0.0:
        return 0.0
    pmf = _binom_pmf(n, 1.0 - p)
    terms = []
    for a in range(n):
        eff = min(a, cap)
        p_a = math.exp(eff * math.log(p)) if eff else 1.0
        fail_given_a = 1.0 if p_a == 1.0 else -math.expm1((n - a) * math.log1p(-p_a))
        terms.append(pmf[a] * fail_given_a)
    return min(1.0, math.fsum(terms))


# --- robust engine -----------------------------------------------------------


def _decode_probs(k1: int, p_c: float, p_g: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights over b (clean initial slots) and decode probability 1 - p_g^b."""
    wb = _binom_pmf(k1, 1.0 - p_c)
    b = np.arange(k1 + 1)
    g = 1.0 - np.where(b > 0, p_g ** np.maximum(b, 1), 1.0)
    return wb, g


def _occupy_direction_fail(
    m: int,
    n_b: int,
    mem: int,
    z: np.ndarray,
    wb: np.ndarray,
    g: np.ndarray,
    p: float,
    p_c: float,
    p_g: float,
    k2: int,
    uplink: bool,
) -> np.ndarray:
    """Per-node failure of one direction, as a function of z (good links into A).

    Downlink: relays are decoded members of A; delivery additionally needs a
    good link from a relay to the node, which is what z counts. Uplink:
    relays are decoders of the node's broadcast (so z gates membership), any
    of the n_b nodes outside A may also decode and transmit, adding to the
    per-slot compounding without ever delivering.
    """
    fail = np.zeros_like(z, dtype=float)
    one_minus_c_pow = (1.0 - p_c) ** np.arange(k2 + 1)
    binom_k2 = [math.comb(k2, l) for l in range(k2 + 1)]
    for b_idx, weight in enumerate(wb):
        if weight == 0.0:
            continue
        gb = g[b_idx]
        direct_fail = 1.0 - mem * gb
        no_useful = (1.0 - gb) ** z
        relay_fail = no_useful.astype(float).copy()
        for l in range(k2 + 1):
            coeff = binom_k2[l] * (-(1.0 - p_g)) ** l
            shrink = 1.0 - one_minus_c_pow[l]
            if uplink:
                psi = 1.0 - gb * shrink
                chi = 1.0 - (1.0 - p) * gb * shrink
                bracket = (psi**z - no_useful) * chi**n_b
            else:
                phi = 1.0 - gb * shrink
                bracket = phi**m - no_useful * phi ** (m - z)
            relay_fail = relay_fail + coeff * bracket
        fail += weight * direct_fail * np.clip(relay_fail, 0.0, 1.0)
    return np.clip(fail, 0.0, 1.0)


def _occupy_node_fail(n: int, a: int, mem: int, p: float, budget, k1: int, k2: int):
    m = a - mem
    n_b = n - a - (1 - mem)
    z = np.arange(m + 1)
    wz = _binom_pmf(m, 1.0 - p)
    wb, g = _decode_probs(k1, budget.p_c, budget.p_g)
    dl = _occupy_direction_fail(m, n_b, mem, z, wb, g, p, budget.p_c, budget.p_g, k2, False)
    ul = _occupy_direction_fail(m, n_b, mem, z, wb, g, p, budget.p_c, budget.p_g, k2, True)
    joint = dl + ul - dl * ul
    return float(wz @ joint), float(wz @ dl), float(wz @ ul)


def _xor_node_fail(n: int, a: int, mem: int, p: float, budget, k1: int, k2: int):
    m = a - mem
    z = np.arange(m + 1)
    wz = _binom_pmf(m, 1.0 - p)
    wb, g = _decode_probs(k1, budget.p_c, budget.p_g)
    c_pow = (1.0 - budget.p_c) ** np.arange(k2 + 1)
    binom_k2 = [math.comb(k2, l) for l in range(k2 + 1)]
    s_single = 1.0 - budget.p_g
    s_both = 1.0 - budget.p_g**2  # per-slot P(at least one of the two receivers ok)

    joint = np.zeros_like(z, dtype=float)
    dl_only = np.zeros_like(joint)
    ul_only = np.zeros_like(joint)
    for b_dl, w_dl in enumerate(wb):
        if w_dl == 0.0:
            continue
        g1 = g[b_dl]
        for b_ul, w_ul in enumerate(wb):
            if w_ul == 0.0:
                continue
            g2 = g[b_ul]
            h = g1 * g2  # helper holds both messages of the node
            t0 = (1.0 - h) ** z

            def relay_fail(s: float) -> np.ndarray:
                out = t0.astype(float).copy()
                for l in range(k2 + 1):
                    eta = 1.0 - h * (1.0 - c_pow[l])
                    out = out + binom_k2[l] * (-s) ** l * (eta**z - t0)
                return out

            rf_single = np.clip(relay_fail(s_single), 0.0, 1.0)
            rf_both = np.clip(relay_fail(s_both), 0.0, 1.0)
            d1 = mem * g1
            d2 = mem * g2
            dl_f = (1.0 - d1) * rf_single
            ul_f = (1.0 - d2) * rf_single
            both_f = (1.0 - d1) * (1.0 - d2) * rf_both
            w = w_dl * w_ul
            joint += w * (dl_f + ul_f - both_f)
            dl_only += w * dl_f
            ul_only += w * ul_f
    joint = np.clip(joint, 0.0, 1.0)
    return float(wz @ joint), float(wz @ dl_only), float(wz @ ul_only)


def robust_cycle_outage(
    cfg: ProtocolConfig, snr_db: float, budget: UncertaintyBudget
) -> OutageReport:
    """Cycle failure under link fading, the p_off offset, and slot corruption.

    Quasi-static analysis; phase-refresh dynamics, transmitter caps and the
    pessimistic q-correlation model go through the Monte Carlo oracle.
    """
    if cfg.dynamics is not Dynamics.QUASI_STATIC:
        raise ValueError("analytic outage covers quasi-static dynamics only")
    if cfg.cap is not None:
        raise ValueError("transmitter caps are handled by capped_cycle_outage or the oracle")
    if cfg.q is not None:
        raise ValueError("q-correlated fades are handled by the Monte Carlo oracle")

    rate = spectral_efficiency(cfg)
    p_w = link_outage(db_to_linear(snr_db), rate)
    p = robust_link(p_w, budget.p_off)
    n = cfg.n

    node_fail = _occupy_node_fail if cfg.scheme is Scheme.OCCUPY else _xor_node_fail

    pmf_a = _binom_pmf(n, 1.0 - p)
    totals = []
    dl_totals = []
    ul_totals = []
    for a in range(n + 1):
        if pmf_a[a] == 0.0:
            continue
        f_out, dl_out, ul_out = node_fail(n, a, 0, p, budget, cfg.k1, cfg.k2) if a < n else (
            0.0,
            0.0,
            0.0,
        )
        if a > 0:
            f_in, dl_in, ul_in = node_fail(n, a, 1, p, budget, cfg.k1, cfg.k2)
        else:
            f_in = dl_in = ul_in = 0.0

        def assemble(fi, fo):
            if (a > 0 and fi >= 1.0) or (a < n and fo >= 1.0):
                return 1.0
            log_ok = a * math.log1p(-fi) + (n - a) * math.log1p(-fo)
            return -math.expm1(log_ok)

        totals.append(pmf_a[a] * assemble(f_in, f_out))
        dl_totals.append(pmf_a[a] * assemble(dl_in, dl_out))
        ul_totals.append(pmf_a[a] * assemble(ul_in, ul_out))

    p_fail = min(1.0, math.fsum(totals))
    return OutageReport(
        p_fail=p_fail,
        p_link=p,
        spectral_efficiency=rate,
        snr_db=snr_db,
        breakdown=[
            ("downlink_any_fail", min(1.0, math.fsum(dl_totals))),
            ("uplink_any_fail", min(1.0, math.fsum(ul_totals))),
        ],
    )


def phase_refresh_cycle_outage(
    cfg: ProtocolConfig, snr_db: float, trials: int = 1_000_000, seed: int = 0
):
    """Monte Carlo outage when link states refresh at phase boundaries."""
    from . import mc

    refreshed = replace(cfg, dynamics=Dynamics.PHASE_REFRESH)
    return mc.estimate_outage(refreshed, snr_db, UncertaintyBudget(), trials, seed)


@dataclass(frozen=True)
class MinSnrResult:
    feasible: bool
    snr_db: float | None
    k1: int | None
    k2: int | None
    target: float

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "snr_db": self.snr_db,
            "k1": self.k1,
            "k2": self.k2,
            "target": self.target,
        }


def min_snr(
    cfg: ProtocolConfig,
    budget: UncertaintyBudget,
    target: float,
    k1_range=range(1, 9),
    k2_range=range(1, 9),
    snr_lo_db: float = -10.0,
    snr_hi_db: float = 60.0,
    tol_db: float = 0.1,
) -> MinSnrResult:
    """Smallest nominal SNR (over the repetition grid) meeting the target.

    For each (k1, k2) the outage is monotone decreasing in SNR, so a plain
    bisection finds the requirement; infeasible grid points are ones that
    miss the target even at the top of the search window. Ties prefer fewer
    total repetitions, then fewer initial repetitions.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie strictly between 0 and 1")
    best = None
    for k1 in k1_range:
        for k2 in k2_range:
            candidate = replace(cfg, k1=k1, k2=k2)
            if robust_cycle_outage(candidate, snr_hi_db, budget).p_fail > target:
                continue
            lo, hi = snr_lo_db, snr_hi_db
            if robust_cycle_outage(candidate, lo, budget).p_fail <= target:
                hi = lo
            while hi - lo > tol_db:
                mid = 0.5 * (lo + hi)
                if robust_cycle_outage(candidate, mid, budget).p_fail <= target:
                    hi = mid
                else:
                    lo = mid
            key = (round(hi / tol_db), k1 + k2, k1)
            if best is None or key < best[0]:
                best = (key, hi, k1, k2)
    if best is None:
        return MinSnrResult(feasible=False, snr_db=None, k1=None, k2=None, target=target)
    return MinSnrResult(feasible=True, snr_db=best[1], k1=best[2], k2=best[3], target=target)
