import math

import numpy as np
import pytest

from urllc_lab import mc
from urllc_lab.protocol import (
    ProtocolConfig,
    UncertaintyBudget,
    capped_cycle_outage,
    ideal_cycle_outage,
    robust_cycle_outage,
    spectral_efficiency,
)
from urllc_lab.streams import substream

ZERO = UncertaintyBudget()


def snr_db_for_p(cfg: ProtocolConfig, p: float) -> float:
    rate = spectral_efficiency(cfg)
    return 10 * math.log10((2.0**rate - 1.0) / (-math.log1p(-p)))


def test_two_node_failure_rate_matches_enumeration():
    cfg = ProtocolConfig(scheme="occupy", n=2)
    est = mc.estimate_outage(cfg, snr_db_for_p(cfg, 0.1), ZERO, 1_000_000, seed=42)
    se = math.sqrt(0.028 * 0.972 / est.trials)
    assert abs(est.p_hat - 0.028) < 3 * se


@pytest.mark.filterwarnings("ignore:p_off")
def test_all_links_bad_always_fails():
    cfg = ProtocolConfig(scheme="occupy", n=4)
    est = mc.estimate_outage(cfg, 20.0, UncertaintyBudget(p_off=1.0), 2_000, seed=1)
    assert est.p_hat == 1.0


def test_clean_high_snr_never_fails():
    cfg = ProtocolConfig(scheme="xor", n=6)
    est = mc.estimate_outage(cfg, 80.0, ZERO, 20_000, seed=2)
    assert est.failures == 0
    assert est.ci95[0] == 0.0
    assert est.ci95[1] == pytest.approx(1.0 - 0.025 ** (1.0 / est.trials), rel=1e-9)


def test_ci_width_shrinks_with_trials():
    cfg = ProtocolConfig(scheme="occupy", n=5)
    snr = snr_db_for_p(cfg, 0.25)
    small = mc.estimate_outage(cfg, snr, ZERO, 50_000, seed=3)
    big = mc.estimate_outage(cfg, snr, ZERO, 200_000, seed=3)
    width = lambda est: est.ci95[1] - est.ci95[0]
    ratio = width(small) / width(big)
    assert 1.7 < ratio < 2.3  # quadrupling trials halves the interval


def test_seed_determinism_and_seed_sensitivity():
    cfg = ProtocolConfig(scheme="occupy", n=8, k1=2, k2=2)
    bud = UncertaintyBudget(p_off=0.02, p_c=1e-3, p_g=1e-3)
    a = mc.estimate_outage(cfg, 5.0, bud, 100_000, seed=9)
    b = mc.estimate_outage(cfg, 5.0, bud, 100_000, seed=9)
    c = mc.estimate_outage(cfg, 5.0, bud, 100_000, seed=10)
    assert a.failures == b.failures
    assert a.failures != c.failures


def test_quasi_static_reciprocity_of_delivery_patterns():
    cfg = ProtocolConfig(scheme="occupy", n=6)
    snr = snr_db_for_p(cfg, 0.3)
    for trial in range(300):
        real = mc.simulate_cycle(cfg, snr, ZERO, substream(77, trial))
        assert np.array_equal(real.delivered_downlink, real.delivered_uplink)
        assert np.array_equal(real.controller_links[0], real.controller_links[-1])
        assert np.array_equal(real.pair_links[0], real.pair_links[0].T)


def test_phase_refresh_realization_redraws_links():
    cfg = ProtocolConfig(scheme="occupy", n=12, dynamics="phase-refresh")
    real = mc.simulate_cycle(cfg, snr_db_for_p(cfg, 0.5), ZERO, substream(5, 0))
    assert real.controller_links.shape[0] == 4
    diffs = [
        not np.array_equal(real.controller_links[i], real.controller_links[j])
        for i in range(4)
        for j in range(i + 1, 4)
    ]
    assert any(diffs)


def test_phase_refresh_direction_and_combined_outage():
    # Refresh at the downlink/uplink boundary: each half is internally
    # static, so each direction alone matches the quasi-static law, while
    # the combined cycle loses reciprocity and fails more often.
    n, p, trials = 10, 0.3, 1_000_000
    cfg_qs = ProtocolConfig(scheme="occupy", n=n)
    snr = snr_db_for_p(cfg_qs, p)
    qs = mc.estimate_outage(cfg_qs, snr, ZERO, trials, seed=21)
    cfg_pr = ProtocolConfig(scheme="occupy", n=n, dynamics="phase-refresh")
    pr = mc.estimate_outage(cfg_pr, snr, ZERO, trials, seed=22, refresh="dl-ul-boundary")

    se = math.sqrt(qs.p_hat * (1 - qs.p_hat) / trials)
    for direction in ("failures_downlink", "failures_uplink"):
        assert getattr(pr, direction) / trials <= getattr(qs, direction) / trials + 4 * se
    assert pr.p_hat > qs.p_hat + 4 * se


def test_phase_refresh_zero_link_failure_never_fails():
    cfg = ProtocolConfig(scheme="xor", n=5, dynamics="phase-refresh")
    est = mc.estimate_outage(cfg, 80.0, ZERO, 10_000, seed=6)
    assert est.failures == 0


def test_q_one_matches_independent_fading():
    n, p, trials = 8, 0.2, 400_000
    cfg_iid = ProtocolConfig(scheme="occupy", n=n)
    snr = snr_db_for_p(cfg_iid, p)
    expected = ideal_cycle_outage(n, p)
    est = mc.estimate_outage(ProtocolConfig(scheme="occupy", n=n, q=1.0), snr, ZERO, trials, seed=7)
    assert est.ci95[0] <= expected <= est.ci95[1]


def test_q_zero_collapses_to_single_fade():
    n, p = 8, 0.2
    cfg = ProtocolConfig(scheme="occupy", n=n, q=0.0)
    snr = snr_db_for_p(ProtocolConfig(scheme="occupy", n=n), p)
    est = mc.estimate_outage(cfg, snr, ZERO, 400_000, seed=8)
    assert est.ci95[0] <= p <= est.ci95[1]


def test_capped_relaying_matches_per_direction_formula():
    # With one repetition and no slot noise the capped analytic form is the
    # exact law of the downlink-only failure.
    n, p, cap, trials = 10, 0.25, 2, 400_000
    cfg = ProtocolConfig(scheme="occupy", n=n, cap=cap)
    snr = snr_db_for_p(ProtocolConfig(scheme="occupy", n=n), p)
    est = mc.estimate_outage(cfg, snr, ZERO, trials, seed=9)
    expected = capped_cycle_outage(n, p, cap)
    p_dl = est.failures_downlink / est.trials
    se = math.sqrt(expected * (1 - expected) / trials)
    assert abs(p_dl - expected) < 4 * se


def test_oracle_agrees_with_analytic_under_budgets():
    cases = [
        ("occupy", 6, 1, 1, UncertaintyBudget(0.05, 5e-3, 5e-3), 8.0),
        ("occupy", 12, 2, 2, UncertaintyBudget(0.01, 1e-3, 1e-3), 6.0),
        ("xor", 9, 2, 1, UncertaintyBudget(0.02, 2e-3, 1e-3), 7.0),
        ("xor", 15, 1, 2, UncertaintyBudget(0.0, 5e-3, 0.0), 9.0),
    ]
    for scheme, n, k1, k2, bud, snr in cases:
        cfg = ProtocolConfig(scheme=scheme, n=n, k1=k1, k2=k2)
        analytic = robust_cycle_outage(cfg, snr, bud).p_fail
        est = mc.estimate_outage(cfg, snr, bud, 400_000, seed=hash((scheme, n)) % 2**32)
        se = math.sqrt(max(est.p_hat, 1e-7) * (1 - est.p_hat) / est.trials)
        assert abs(analytic - est.p_hat) < 4 * se, (scheme, n, analytic, est.p_hat)


def test_estimate_validation():
    with pytest.raises(ValueError):
        mc.estimate_outage(ProtocolConfig(n=3), 10.0, ZERO, 0, seed=1)
    with pytest.raises(ValueError):
        mc.OutageEstimate(p_hat=0.5, trials=10, failures=11, ci95=(0.4, 0.6))
    with pytest.raises(ValueError):
        mc.OutageEstimate(p_hat=0.5, trials=10, failures=5, ci95=(0.6, 0.9))


def test_sweep_grid_and_validation():
    scenario = {
        "base": {"scheme": "occupy", "snr_db": 6.0},
        "axes": {"n": [3, 5], "k1": [1, 2]},
        "trials": 2_000,
        "seed": 5,
    }
    rows = list(mc.sweep(scenario))
    assert [(r["n"], r["k1"]) for r in rows] == [(3, 1), (3, 2), (5, 1), (5, 2)]
    assert all(r["trials"] == 2_000 for r in rows)
    again = list(mc.sweep(scenario))
    assert [r["failures"] for r in rows] == [r["failures"] for r in again]

    with pytest.raises(ValueError, match="unknown field 'pz'"):
        list(mc.sweep({"axes": {"pz": [1]}}))
    with pytest.raises(ValueError, match="non-empty list"):
        list(mc.sweep({"axes": {"n": []}}))
    with pytest.raises(ValueError, match="unknown top-level"):
        list(mc.sweep({"axes": {}, "bogus": 1}))


def test_phase_refresh_wrapper_delegates_to_oracle():
    from urllc_lab.protocol import phase_refresh_cycle_outage

    cfg = ProtocolConfig(scheme="occupy", n=6)
    snr = snr_db_for_p(cfg, 0.4)
    wrapped = phase_refresh_cycle_outage(cfg, snr, trials=50_000, seed=12)
    direct = mc.estimate_outage(
        ProtocolConfig(scheme="occupy", n=6, dynamics="phase-refresh"), snr, ZERO, 50_000, 12
    )
    assert wrapped.failures == direct.failures


def test_simulate_cycle_exposes_link_query():
    cfg = ProtocolConfig(scheme="occupy", n=4)
    real = mc.simulate_cycle(cfg, 0.0, ZERO, substream(3, 1))
    assert isinstance(real.link_state("C", 2, phase=0), bool)
    assert real.link_state(1, 3, phase=1) == real.link_state(3, 1, phase=1)
    assert real.failed in (True, False)
