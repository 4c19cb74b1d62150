import numpy as np
import pytest

from urllc_lab.constants import carrier_wavelength
from urllc_lab.fading import Trajectory, channel_trace, sample_environment
from urllc_lab.gp import (
    GpChannelPredictor,
    GpPrediction,
    ObservationSet,
    PastWindow,
    build_covariance,
    coherence_distance,
    energy_exceedance,
    good_amplitude_threshold,
    misprediction_probability,
    predict,
    predictive_energy_quantile,
)
from urllc_lab.streams import substream

LAM = 0.1


def obs_from(times, coeffs, v=10.0):
    return ObservationSet(times=times, coefficients=coeffs, speed=v, wavelength=LAM)


def simulated_observations(seed=0, times=(-3e-3, -2e-3, -1e-3, 0.0), v=10.0, fc=3e9):
    env = sample_environment(100, (20.0, 20.0), fc, seed=seed)
    traj = Trajectory(start=np.array([9.0, 9.5]), speed=v, heading=1.1)
    trace = channel_trace(env, traj, np.array(times))
    return obs_from(trace.times, trace.coefficients, v), env, traj


def test_build_covariance_single_observation():
    obs = obs_from([0.0], [1 + 0j])
    K, k_star, k_ss = build_covariance(obs, 0.0)
    assert np.allclose(K, [[0.5]])
    assert np.allclose(k_star, [0.5])
    assert k_ss == 0.5


def test_build_covariance_structure():
    obs = obs_from([0.0, 1e-3, 2e-3], [1, 1j, -1])
    K, k_star, _ = build_covariance(obs, 3e-3)
    assert np.allclose(K, K.T)
    assert np.allclose(np.diag(K), 0.5)
    # spacing is 0.1 wavelengths: J0(0.2 pi)/2, from a 40-digit series oracle
    assert K[0][1] == pytest.approx(0.45185632104623, abs=1e-9)


def test_predict_at_observed_point():
    obs, _, _ = simulated_observations(seed=3)
    pred = predict(obs, obs.times[-1])
    assert pred.mean == pytest.approx(obs.coefficients[-1], abs=1e-6)
    assert pred.sigma_sq <= 1e-6


def test_predict_far_future_reverts_to_prior():
    obs, _, _ = simulated_observations(seed=4)
    pred = predict(obs, 1e4)
    assert abs(pred.mean) < 0.05
    assert pred.sigma_sq == pytest.approx(0.5, abs=1e-3)


def test_conditional_variance_grows_with_horizon():
    obs = obs_from([-2e-3, -1e-3, 0.0], [1, 1, 1])
    near = predict(obs, 1e-4)
    far = predict(obs, 1e-3)
    assert near.sigma_sq < far.sigma_sq


def test_variance_never_hurt_by_observations():
    rng = substream(9, 0)
    coeffs = (rng.standard_normal(6) + 1j * rng.standard_normal(6)) / np.sqrt(2)
    times = np.array([-5, -4, -3, -2, -1, 0]) * 1e-3
    sigmas = []
    for m in range(1, 7):
        obs = obs_from(times[-m:], coeffs[-m:])
        sigmas.append(predict(obs, 5e-4).sigma_sq)
    assert all(s2 <= s1 + 1e-12 for s1, s2 in zip(sigmas, sigmas[1:]))


def test_phase_rotation_equivariance():
    obs, _, _ = simulated_observations(seed=5)
    theta = 0.8
    rotated = obs_from(obs.times, obs.coefficients * np.exp(1j * theta))
    a = predict(obs, 5e-4)
    b = predict(rotated, 5e-4)
    assert b.mean == pytest.approx(a.mean * np.exp(1j * theta), abs=1e-12)
    assert b.sigma_sq == pytest.approx(a.sigma_sq, abs=1e-14)
    assert b.nu == pytest.approx(a.nu, abs=1e-12)


def test_prediction_invariants_enforced():
    with pytest.raises(ValueError):
        GpPrediction(mu_i=0.0, mu_q=0.0, sigma_sq=0.7, t_future=0.0)
    with pytest.raises(ValueError):
        GpPrediction(mu_i=np.nan, mu_q=0.0, sigma_sq=0.1, t_future=0.0)


def test_duplicate_times_rejected():
    with pytest.raises(ValueError):
        obs_from([0.0, 0.0], [1, 1])


def test_energy_exceedance_limits_and_monotonicity():
    pred = GpPrediction(mu_i=0.0, mu_q=0.0, sigma_sq=0.2, t_future=0.0)
    assert energy_exceedance(pred, 0.0) == 1.0
    # Rayleigh limit: exp(-thr / (2 sigma^2))
    assert energy_exceedance(pred, 0.3) == pytest.approx(np.exp(-0.3 / 0.4), rel=1e-10)

    thresholds = np.linspace(0.0, 3.0, 13)
    vals = [energy_exceedance(pred, t) for t in thresholds]
    assert all(a >= b for a, b in zip(vals, vals[1:]))

    nus = np.linspace(0.0, 3.0, 13)
    vals = [
        energy_exceedance(GpPrediction(mu_i=nu, mu_q=0.0, sigma_sq=0.2, t_future=0.0), 1.0)
        for nu in nus
    ]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_energy_exceedance_against_monte_carlo():
    pred = GpPrediction(mu_i=1.0, mu_q=0.0, sigma_sq=0.25, t_future=0.0)
    analytic = energy_exceedance(pred, 1.0)
    rng = substream(77, 0)
    n = 2_000_000
    h = pred.mean + 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    mc = np.mean(np.abs(h) ** 2 > 1.0)
    assert analytic == pytest.approx(mc, abs=3 * np.sqrt(mc * (1 - mc) / n))


def test_energy_exceedance_degenerate_point_mass():
    pred = GpPrediction(mu_i=0.9, mu_q=0.0, sigma_sq=0.0, t_future=0.0)
    assert energy_exceedance(pred, 0.5) == 1.0
    assert energy_exceedance(pred, 1.0) == 0.0


def test_predictive_quantile_roundtrip():
    pred = GpPrediction(mu_i=0.6, mu_q=0.3, sigma_sq=0.1, t_future=0.0)
    for prob in (0.05, 0.5, 0.95):
        x = predictive_energy_quantile(pred, prob)
        assert 1.0 - energy_exceedance(pred, x) == pytest.approx(prob, abs=1e-9)


def test_good_amplitude_threshold_matches_rule():
    for sigma, thr in ((0.05, 0.1), (0.3, 0.5), (0.7, 2.0)):
        nu_star = good_amplitude_threshold(sigma, thr)
        pred_hi = GpPrediction(mu_i=nu_star * 1.001, mu_q=0.0, sigma_sq=sigma**2, t_future=0.0)
        pred_lo = GpPrediction(mu_i=nu_star * 0.999, mu_q=0.0, sigma_sq=sigma**2, t_future=0.0)
        assert energy_exceedance(pred_hi, thr) >= 0.5
        assert energy_exceedance(pred_lo, thr) <= 0.5 + 1e-6


def test_estimator_wrapper():
    obs, _, _ = simulated_observations(seed=6)
    model = GpChannelPredictor(speed=10.0, wavelength=LAM)
    assert model.get_params() == {"speed": 10.0, "wavelength": LAM}
    with pytest.raises(RuntimeError, match="not fitted"):
        model.predict(1e-3)
    fitted = model.fit(obs.times, obs.coefficients)
    assert fitted is model
    direct = predict(obs, 1e-3)
    viaclass = model.predict(1e-3)
    assert viaclass.mean == pytest.approx(direct.mean, abs=1e-14)


def test_past_window_times():
    w = PastWindow(window_s=3e-3, spacing_s=1e-3)
    assert np.allclose(w.times(), [-3e-3, -2e-3, -1e-3, 0.0])


def test_misprediction_at_zero_horizon_is_tiny():
    est = misprediction_probability(10.0, 0.0, n_trials=20_000, seed=15)
    assert est.error_rate < 1e-4


def test_misprediction_interval_fields():
    est = misprediction_probability(10.0, 0.05, n_trials=5_000, seed=16)
    assert 0 <= est.ci_low <= est.error_rate <= est.ci_high <= 1
    assert est.trials == 5_000


def test_coherence_distance_unreachable():
    with pytest.raises(ValueError, match="unreachable"):
        coherence_distance(0.9, 10.0, n_trials=2_000, seed=17)


def test_coherence_distance_increases_with_reliability():
    lam = carrier_wavelength(3e9)
    tight = coherence_distance(2e-3, 10.0, n_trials=20_000, seed=18, iterations=7)
    loose = coherence_distance(3e-2, 10.0, n_trials=20_000, seed=18, iterations=7)
    assert 0 < tight < loose < lam
