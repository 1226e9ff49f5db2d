import numpy as np
import pytest

from lassoinf import LinearModelData


def make_design(n, d, rho=0.0, seed=0, normalize=True):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    if rho > 0:
        idx = np.arange(d)
        cov = rho ** np.abs(idx[:, None] - idx[None, :])
        X = X @ np.linalg.cholesky(cov).T
    if normalize:
        X = X / np.linalg.norm(X, axis=0)
    return X, rng


def make_data(n, d, k=0, amplitude=0.0, rho=0.0, sigma=1.0, seed=0, normalize=True):
    """Sparse-signal dataset; returns (data, beta, rng) with the first k
    coordinates carrying the signal."""
    X, rng = make_design(n, d, rho=rho, seed=seed, normalize=normalize)
    beta = np.zeros(d)
    if k:
        beta[:k] = amplitude * np.where(rng.random(k) < 0.5, -1.0, 1.0)
    y = X @ beta + sigma * rng.standard_normal(n)
    return LinearModelData(y, X), beta, rng


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
