"""Exact binomial confidence intervals."""

from scipy import stats

__all__ = ["clopper_pearson"]


def clopper_pearson(failures: int, trials: int, confidence: float = 0.95):
    """Exact (Clopper-Pearson) two-sided interval for a binomial proportion."""
    if trials < 1 or not 0 <= failures <= trials:
        raise ValueError("need 0 <= failures <= trials, trials >= 1")
    alpha = 1.0 - confidence
    lo = 0.0 if failures == 0 else float(stats.beta.ppf(alpha / 2, failures, trials - failures + 1))
    hi = 1.0 if failures == trials else float(
        stats.beta.ppf(1 - alpha / 2, failures + 1, trials - failures)
    )
    return lo, hi
