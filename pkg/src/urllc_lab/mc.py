"""Direct Monte Carlo simulation of full protocol cycles.

The simulator executes the slot schedule literally: it draws link states
(static, refreshed per phase, or thresholded from pessimistically copied
fades), per-message counts of corruption-free initial slots, per-receiver
decode events, relay pools, optional transmitter caps, and per-relay-slot
corruption, then marks every message delivered or not. It is the ground
truth the analytic engine is validated against.

Trials are processed in fixed-size batches, each drawing from its own
counter-based stream, so estimates depend only on (config, seed, trials)
and never on scheduling.
"""

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .constants import db_to_linear
from .intervals import clopper_pearson
from .protocol import (
    Dynamics,
    ProtocolConfig,
    Scheme,
    UncertaintyBudget,
    link_outage,
    robust_link,
    spectral_efficiency,
)
from .streams import substream

__all__ = [
    "CycleRealization",
    "OutageEstimate",
    "simulate_cycle",
    "estimate_outage",
    "sweep",
    "SCENARIO_AXES",
]


@dataclass(frozen=True)
class CycleRealization:
    """Link states, slot-event summary, and deliveries of one simulated cycle."""

    controller_links: np.ndarray  # (phases, n) bool
    pair_links: np.ndarray  # (phases, n, n) bool, symmetric within a phase
    clean_initial_slots: dict  # direction -> (n,) count of transmitter-clean slots
    delivered_downlink: np.ndarray  # (n,) bool
    delivered_uplink: np.ndarray  # (n,) bool

    @property
    def failed(self) -> bool:
        return not (self.delivered_downlink.all() and self.delivered_uplink.all())

    def link_state(self, endpoint_a, endpoint_b, phase: int) -> bool:
        """Good/bad state of a pair in a phase; 'C' names the controller."""
        if endpoint_a == "C" or endpoint_b == "C":
            node = endpoint_b if endpoint_a == "C" else endpoint_a
            return bool(self.controller_links[phase, node])
        return bool(self.pair_links[phase, endpoint_a, endpoint_b])


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    trials: int
    failures: int
    ci95: tuple
    failures_downlink: int = 0
    failures_uplink: int = 0

    def __post_init__(self):
        if self.failures > self.trials:
            raise ValueError("failures cannot exceed trials")
        lo, hi = self.ci95
        if not lo <= self.p_hat <= hi:
            raise ValueError("ci95 must contain p_hat")


def _phase_draw_map(cfg: ProtocolConfig, refresh: str) -> list[int]:
    """Which link draw each protocol phase uses."""
    n_phases = 4 if cfg.scheme is Scheme.OCCUPY else 3
    if cfg.dynamics is Dynamics.QUASI_STATIC:
        return [0] * n_phases
    if refresh == "every-phase":
        return list(range(n_phases))
    if refresh == "dl-ul-boundary":
        return [0, 0, 1, 1] if cfg.scheme is Scheme.OCCUPY else [0, 1, 1]
    raise ValueError(f"unknown refresh mode: {refresh!r}")


def _draw_links(n, q, p_link, fade_threshold, extra_fail, rng, batch, n_draws):
    """Controller and pair link states, (draws, B, n) and (draws, B, n, n)."""
    if q is None:
        thresh = np.float32(1.0 - p_link)
        a = rng.random((n_draws, batch, n), dtype=np.float32) < thresh
        upper = rng.random((n_draws, batch, n, n), dtype=np.float32) < thresh
        links = np.triu(upper, k=1)
        links = links | links.transpose(0, 1, 3, 2)
        return a, links
    # Pessimistic correlation: enumerate links (controller first, then pairs
    # lexicographically); each after the first is fresh with probability q,
    # otherwise copies an earlier realized fade. Fades are thresholded by the
    # same rate/SNR rule as the i.i.d. link model; the independent extra
    # failure restores the marginal p_link when an offset budget is present.
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    n_links = n + len(pairs)
    fades = np.empty((batch, n_links), dtype=complex)
    fades[:, 0] = (rng.standard_normal(batch) + 1j * rng.standard_normal(batch)) / math.sqrt(2)
    fresh = rng.random((batch, n_links)) < q
    fresh_vals = (
        rng.standard_normal((batch, n_links)) + 1j * rng.standard_normal((batch, n_links))
    ) / math.sqrt(2)
    copy_src = (rng.random((batch, n_links)) * np.arange(n_links)).astype(np.int64)
    rows = np.arange(batch)
    for k in range(1, n_links):
        copied = fades[rows, copy_src[:, k]]
        fades[:, k] = np.where(fresh[:, k], fresh_vals[:, k], copied)
    good = np.abs(fades) ** 2 >= fade_threshold
    if extra_fail > 0:
        good &= rng.random((batch, n_links)) >= extra_fail
    a = good[:, :n][None, :, :]
    links = np.zeros((1, batch, n, n), dtype=bool)
    for idx, (i, j) in enumerate(pairs):
        links[0, :, i, j] = good[:, n + idx]
        links[0, :, j, i] = good[:, n + idx]
    return a, links


def _clean_slot_counts(rng, batch, n, k1, p_c):
    return rng.binomial(k1, 1.0 - p_c, size=(batch, n))


def _decode_matrix(rng, link, g_msg):
    """Per-(message, receiver) decode events given the link gate.

    g_msg is the per-message decode probability (B, n); receivers of message
    i decode independently with that probability when their link is good.
    """
    batch, n = g_msg.shape
    u = rng.random((batch, n, n), dtype=np.float32)
    return link & (u < g_msg[:, :, None].astype(np.float32))


def _relay_delivery(rng, r_pool, useful, cap, k2, p_c, p_g):
    """Delivery of one message through its relay slots.

    r_pool: (B, n) transmitter counts; useful: (B, n) counts with a good link
    to the destination. With a cap, the transmitting subset is a uniform
    random choice among the pool, hence a hypergeometric count of useful
    members. All k2 slots share the pool; corruption refreshes per slot.
    """
    r = r_pool
    u = useful
    if cap is not None:
        over = r > cap
        if np.any(over):
            sel_good = np.where(
                over,
                rng.hypergeometric(np.maximum(u, 0), np.maximum(r - u, 0), np.minimum(r, cap)),
                u,
            )
        else:
            sel_good = u
        r_eff = np.minimum(r, cap)
    else:
        sel_good = u
        r_eff = r
    slot_ok_prob = (1.0 - p_g) * (1.0 - p_c) ** r_eff
    with np.errstate(divide="ignore"):
        any_slot_prob = -np.expm1(k2 * np.log1p(-slot_ok_prob))
    some_slot = rng.random(r.shape) < any_slot_prob
    return (sel_good >= 1) & some_slot


def _run_batch(cfg, snr_db, budget, rng, batch, refresh):
    """Simulate ``batch`` cycles; returns delivery flags and link/slot detail."""
    n = cfg.n
    rate = spectral_efficiency(cfg)
    snr = db_to_linear(snr_db)
    p_w = link_outage(snr, rate)
    p_link = robust_link(p_w, budget.p_off)
    fade_threshold = (2.0**rate - 1.0) / snr

    if cfg.q is not None and cfg.dynamics is not Dynamics.QUASI_STATIC:
        raise ValueError("q-correlated fades support quasi-static dynamics only")
    if cfg.cap is not None and cfg.dynamics is not Dynamics.QUASI_STATIC:
        raise ValueError("transmitter caps support quasi-static dynamics only")

    phase_of = _phase_draw_map(cfg, refresh)
    n_draws = max(phase_of) + 1
    extra_fail = 0.0 if p_w >= 1.0 else (p_link - p_w) / (1.0 - p_w)
    a_draws, l_draws = _draw_links(
        cfg.n, cfg.q, p_link, fade_threshold, extra_fail, rng, batch, n_draws
    )

    g_of = lambda b: 1.0 - np.where(b > 0, budget.p_g ** np.maximum(b, 1), 1.0)

    if cfg.scheme is Scheme.OCCUPY:
        a_init_dl, l_relay_dl = a_draws[phase_of[0]], l_draws[phase_of[1]]
        a_init_ul, l_init_ul = a_draws[phase_of[2]], l_draws[phase_of[2]]
        a_relay_ul = a_draws[phase_of[3]]

        b_dl = _clean_slot_counts(rng, batch, n, cfg.k1, budget.p_c)
        g_dl = g_of(b_dl)
        direct_dl = a_init_dl & (rng.random((batch, n)) < g_dl)
        # decode[b, i, j]: node j decoded downlink message i
        decode_dl = _decode_matrix(rng, a_init_dl[:, None, :], g_dl)
        eye = np.eye(n, dtype=bool)
        decode_dl &= ~eye
        pool_dl = decode_dl.sum(axis=2)
        useful_dl = (decode_dl & l_relay_dl).sum(axis=2)
        relay_dl = _relay_delivery(rng, pool_dl, useful_dl, cfg.cap, cfg.k2, budget.p_c, budget.p_g)
        delivered_dl = direct_dl | relay_dl

        b_ul = _clean_slot_counts(rng, batch, n, cfg.k1, budget.p_c)
        g_ul = g_of(b_ul)
        direct_ul = a_init_ul & (rng.random((batch, n)) < g_ul)
        decode_ul = _decode_matrix(rng, l_init_ul, g_ul)
        decode_ul &= ~eye
        pool_ul = decode_ul.sum(axis=2)
        useful_ul = (decode_ul & a_relay_ul[:, None, :]).sum(axis=2)
        relay_ul = _relay_delivery(rng, pool_ul, useful_ul, cfg.cap, cfg.k2, budget.p_c, budget.p_g)
        delivered_ul = direct_ul | relay_ul
    else:
        a_init_dl = a_draws[phase_of[0]]
        a_init_ul, l_init_ul = a_draws[phase_of[1]], l_draws[phase_of[1]]
        a_xor, l_xor = a_draws[phase_of[2]], l_draws[phase_of[2]]

        b_dl = _clean_slot_counts(rng, batch, n, cfg.k1, budget.p_c)
        g_dl = g_of(b_dl)
        direct_dl = a_init_dl & (rng.random((batch, n)) < g_dl)
        decode_dl = _decode_matrix(rng, a_init_dl[:, None, :], g_dl)
        eye = np.eye(n, dtype=bool)
        decode_dl &= ~eye

        b_ul = _clean_slot_counts(rng, batch, n, cfg.k1, budget.p_c)
        g_ul = g_of(b_ul)
        direct_ul = a_init_ul & (rng.random((batch, n)) < g_ul)
        decode_ul = _decode_matrix(rng, l_init_ul, g_ul)
        decode_ul &= ~eye

        helpers = decode_dl & decode_ul  # helper holds both messages of node i
        t_pool = helpers.sum(axis=2)
        useful_node = (helpers & l_xor).sum(axis=2)
        useful_ctrl = (helpers & a_xor[:, None, :]).sum(axis=2)
        if cfg.cap is not None:
            r_eff = np.minimum(t_pool, cfg.cap)
            over = t_pool > cfg.cap
            sel_node = np.where(
                over,
                rng.hypergeometric(
                    np.maximum(useful_node, 0),
                    np.maximum(t_pool - useful_node, 0),
                    np.minimum(t_pool, cfg.cap),
                ),
                useful_node,
            )
            # Quasi-static: helper pools already have good links both ways,
            # so the same subset serves both receivers.
            sel_ctrl = np.where(
                over,
                np.minimum(sel_node + useful_ctrl - useful_node, r_eff),
                useful_ctrl,
            )
        else:
            r_eff = t_pool
            sel_node, sel_ctrl = useful_node, useful_ctrl
        got_node = np.zeros((batch, n), dtype=bool)
        got_ctrl = np.zeros((batch, n), dtype=bool)
        for _ in range(cfg.k2):
            all_clean = rng.random((batch, n)) < (1.0 - budget.p_c) ** r_eff
            got_node |= all_clean & (rng.random((batch, n)) < 1.0 - budget.p_g) & (sel_node >= 1)
            got_ctrl |= all_clean & (rng.random((batch, n)) < 1.0 - budget.p_g) & (sel_ctrl >= 1)
        delivered_dl = direct_dl | got_node
        delivered_ul = direct_ul | got_ctrl

    detail = {
        "controller_links": a_draws,
        "pair_links": l_draws,
        "phase_of": phase_of,
        "clean_initial_slots": {"downlink": b_dl, "uplink": b_ul},
    }
    return delivered_dl, delivered_ul, detail


def simulate_cycle(
    cfg: ProtocolConfig,
    snr_db: float,
    budget: UncertaintyBudget,
    rng: np.random.Generator,
    refresh: str = "every-phase",
) -> CycleRealization:
    """One full cycle, with link states and deliveries exposed for inspection."""
    delivered_dl, delivered_ul, detail = _run_batch(cfg, snr_db, budget, rng, 1, refresh)
    phase_of = detail["phase_of"]
    ctrl = np.stack([detail["controller_links"][d][0] for d in phase_of])
    pairs = np.stack([detail["pair_links"][d][0] for d in phase_of])
    return CycleRealization(
        controller_links=ctrl,
        pair_links=pairs,
        clean_initial_slots={k: v[0] for k, v in detail["clean_initial_slots"].items()},
        delivered_downlink=delivered_dl[0],
        delivered_uplink=delivered_ul[0],
    )


def _batch_size(n: int) -> int:
    return max(256, min(32768, int(1.2e7 / (n * n))))


def estimate_outage(
    cfg: ProtocolConfig,
    snr_db: float,
    budget: UncertaintyBudget,
    trials: int,
    seed: int,
    refresh: str = "every-phase",
) -> OutageEstimate:
    """I.i.d. cycle simulations with an exact binomial confidence interval."""
    if trials < 1:
        raise ValueError("need at least one trial")
    batch = _batch_size(cfg.n)
    failures = fails_dl = fails_ul = 0
    done = 0
    index = 0
    while done < trials:
        b = min(batch, trials - done)
        rng = substream(seed, 4, index)
        delivered_dl, delivered_ul, _ = _run_batch(cfg, snr_db, budget, rng, b, refresh)
        bad_dl = ~delivered_dl.all(axis=1)
        bad_ul = ~delivered_ul.all(axis=1)
        fails_dl += int(bad_dl.sum())
        fails_ul += int(bad_ul.sum())
        failures += int((bad_dl | bad_ul).sum())
        done += b
        index += 1
    return OutageEstimate(
        p_hat=failures / trials,
        trials=trials,
        failures=failures,
        ci95=clopper_pearson(failures, trials),
        failures_downlink=fails_dl,
        failures_uplink=fails_ul,
    )


SCENARIO_AXES = (
    "scheme",
    "n",
    "snr_db",
    "p_off",
    "p_c",
    "p_g",
    "k1",
    "k2",
    "cap",
    "q",
    "dynamics",
)


def sweep(scenario: dict, progress=None):
    """Cartesian-product outage estimation over the axes of a scenario.

    The scenario maps ``base`` (ProtocolConfig fields plus snr_db and budget
    fields), ``axes`` (lists to sweep), ``trials``, and ``seed``. Yields one
    result dict per grid point, in deterministic axis order.
    """
    if not isinstance(scenario, dict):
        raise ValueError("scenario must be a JSON object")
    for key in scenario:
        if key not in {"base", "axes", "trials", "seed", "refresh"}:
            raise ValueError(f"scenario: unknown top-level field {key!r}")
    base = dict(scenario.get("base", {}))
    axes = dict(scenario.get("axes", {}))
    trials = int(scenario.get("trials", 100_000))
    seed = int(scenario.get("seed", 0))
    refresh = scenario.get("refresh", "every-phase")
    for field_name in itertools.chain(base, axes):
        if field_name not in SCENARIO_AXES and field_name not in {
            "message_bits",
            "cycle_time",
            "bandwidth",
        }:
            raise ValueError(f"scenario: unknown field {field_name!r}")
    for name, values in axes.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ValueError(f"scenario: axes[{name!r}] must be a non-empty list")

    names = [n for n in SCENARIO_AXES if n in axes]
    combos = itertools.product(*(axes[n] for n in names))
    for point_index, combo in enumerate(combos):
        point = dict(base)
        point.update(dict(zip(names, combo)))
        snr_db = float(point.pop("snr_db", 10.0))
        budget = UncertaintyBudget(
            p_off=float(point.pop("p_off", 0.0)),
            p_c=float(point.pop("p_c", 0.0)),
            p_g=float(point.pop("p_g", 0.0)),
        )
        cap = point.pop("cap", None)
        q = point.pop("q", None)
        cfg = ProtocolConfig(
            cap=None if cap is None else int(cap),
            q=None if q is None else float(q),
            **point,
        )
        started = time.perf_counter()
        est = estimate_outage(cfg, snr_db, budget, trials, seed + point_index, refresh)
        row = {
            "scheme": cfg.scheme.value,
            "n": cfg.n,
            "snr_db": snr_db,
            "p_off": budget.p_off,
            "p_c": budget.p_c,
            "p_g": budget.p_g,
            "k1": cfg.k1,
            "k2": cfg.k2,
            "cap": cfg.cap,
            "q": cfg.q,
            "dynamics": cfg.dynamics.value,
            "p_hat": est.p_hat,
            "failures": est.failures,
            "trials": est.trials,
            "ci_low": est.ci95[0],
            "ci_high": est.ci95[1],
            "wall_seconds": time.perf_counter() - started,
        }
        if progress is not None:
            progress(row)
        yield row
