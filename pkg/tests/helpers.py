"""Shared fixtures-in-code for the test suite: known mixtures and sampled counts."""
import numpy as np

from ropenet.mixture import CountHistogram, MixtureParams, mixture_pmf


def oracle_params(c=0):
    """Reference mixture used by the recovery tests."""
    return MixtureParams(pi=0.02, mu1=0.05, sigma1=0.1, gamma=1.2, mu2=0.9,
                         tau1=0.6, tau2=0.3, c=c)


def random_params(rng, B):
    mu1 = rng.uniform(0.01, 0.6)
    sigma1 = rng.uniform(0.01, 0.9 * (1 - mu1))
    return MixtureParams(
        pi=rng.uniform(0, 1), mu1=mu1, sigma1=sigma1,
        gamma=rng.uniform(0.1, 3.0), mu2=rng.uniform(0.51, 0.99),
        tau1=rng.uniform(0, 1), tau2=rng.uniform(0, 1),
        c=int(rng.integers(0, B - 1)))


def sample_counts(params, B, n_counts, rng):
    pmf = mixture_pmf(np.arange(B + 1), params, B)
    return rng.choice(B + 1, size=n_counts, p=pmf)


def sample_histogram(params, B, n_counts, rng, p=None):
    return CountHistogram.from_counts(sample_counts(params, B, n_counts, rng),
                                      B, p=p)
