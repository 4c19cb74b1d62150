import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urllc_lab.spatial import (
    conditional_spatial_fade,
    correlation_variance_penalty_db,
    q_correlated_link_fades,
    spatial_correlation,
)
from urllc_lab.streams import substream

LAM = 0.1


def test_spatial_correlation_landmarks():
    assert spatial_correlation(0.0, LAM) == 1.0
    assert abs(spatial_correlation(3.0 * LAM, LAM)) < 0.2
    assert abs(spatial_correlation(0.3827 * LAM, LAM)) < 1e-3
    with pytest.raises(ValueError):
        spatial_correlation(-1.0, LAM)


def test_conditional_fade_decorrelated_and_deep_fade():
    law = conditional_spatial_fade(0.8 + 0.1j, 0.3827 * LAM, LAM, sigma_sq=1.0)
    assert abs(law.mean) < 1e-3
    assert law.variance == pytest.approx(1.0, abs=1e-5)

    deep = conditional_spatial_fade(0.0, 0.05 * LAM, LAM, sigma_sq=1.0)
    assert deep.mean == 0.0

    rho02 = 0.2
    var = 1.0 - rho02**2
    law = conditional_spatial_fade(1.0, 0.0, LAM, sigma_sq=1.0)
    assert law.rho == 1.0
    assert law.variance == 0.0
    # at the modeled separation floor the variance stays above 0.96 sigma^2
    assert var == pytest.approx(0.96, abs=1e-12)


def test_penalty_values():
    assert correlation_variance_penalty_db(0.0) == 0.0
    assert correlation_variance_penalty_db(0.2) == pytest.approx(0.177, abs=5e-4)
    assert correlation_variance_penalty_db(0.5) == pytest.approx(1.249, abs=5e-4)
    for bad in (1.0, -1.0, 1.2):
        with pytest.raises(ValueError):
            correlation_variance_penalty_db(bad)


@given(r1=st.floats(-0.999, 0.999), r2=st.floats(-0.999, 0.999))
@settings(max_examples=200, deadline=None)
def test_penalty_monotone_in_magnitude(r1, r2):
    lo, hi = sorted((abs(r1), abs(r2)))
    assert correlation_variance_penalty_db(hi) >= correlation_variance_penalty_db(lo) - 1e-12


def test_law_of_total_variance():
    rng = substream(50, 0)
    n = 200_000
    h_p = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    law = conditional_spatial_fade(1.0, 0.1 * LAM, LAM, sigma_sq=1.0)
    rho = law.rho
    noise = np.sqrt((1 - rho**2) / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    h_q = rho * h_p + noise
    assert np.var(h_q.real) + np.var(h_q.imag) == pytest.approx(1.0, abs=0.01)


def test_q_model_endpoints():
    iid = q_correlated_link_fades(50, 1.0, seed=1)
    assert len(np.unique(iid)) == 50
    frozen = q_correlated_link_fades(50, 0.0, seed=2)
    assert np.all(frozen == frozen[0])
    with pytest.raises(ValueError):
        q_correlated_link_fades(0, 0.5, seed=1)
    with pytest.raises(ValueError):
        q_correlated_link_fades(5, 1.5, seed=1)


def test_q_model_expected_distinct_count():
    # fades 2..10 are each fresh independently with probability q
    draws = 100_000
    counts = np.empty(draws)
    for i in range(draws):
        fades = q_correlated_link_fades(10, 0.5, seed=1000 + i)
        counts[i] = len(np.unique(fades))
    assert counts.mean() == pytest.approx(5.5, abs=0.05)


def test_q_model_marginal_stays_rayleigh():
    # pooled late-position fades keep the CN(0,1) marginal under copying
    draws = 20_000
    samples = np.empty(draws)
    for i in range(draws):
        samples[i] = np.abs(q_correlated_link_fades(8, 0.3, seed=5000 + i)[-1]) ** 2
    samples.sort()
    ref = 1.0 - np.exp(-samples)
    grid = np.arange(1, draws + 1) / draws
    ks = np.max(np.abs(ref - grid))
    assert ks < 0.015
