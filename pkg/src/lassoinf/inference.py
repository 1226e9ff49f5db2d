"""User-facing coefficient tests: the LASSO-statistic test with its
cross-validated penalty, the shifted variant for testing arbitrary
coefficient values, and the known-variance wrapper for asymptotically
Gaussian estimators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .linear_model import LinearModelData, decompose
from .null_law import LassoNullLaw
from .solver import choose_lambda_hat, solve

__all__ = [
    "SeedRecord",
    "LassoTestResult",
    "lasso_test",
    "lasso_test_at",
    "asymptotic_lasso_test",
]


@dataclass(frozen=True)
class SeedRecord:
    """Exogenous randomness of one test: the synthetic-response draw and the
    cross-validation partition.  Reusing a record replays both exactly, which
    is how interval inversion keeps its randomness consistent across the
    candidate grid."""

    u_seed: int
    partition_seed: int

    @classmethod
    def draw(cls, rng: np.random.Generator) -> "SeedRecord":
        lo, hi = 0, 2**63 - 1
        return cls(
            u_seed=int(rng.integers(lo, hi)),
            partition_seed=int(rng.integers(lo, hi)),
        )

    def streams(self):
        return (
            np.random.default_rng(self.u_seed),
            np.random.default_rng(self.partition_seed),
        )


@dataclass(frozen=True)
class LassoTestResult:
    p: float
    lambda_used: float
    beta_hat_j: float
    u1: float
    v_minus: float
    v_plus: float
    m_hat: float
    seed_record: SeedRecord
    j: int
    gamma: float
    known_sigma: Optional[float]

    def to_dict(self) -> dict:
        out = {
            "p": self.p,
            "lambda_used": self.lambda_used,
            "beta_hat_j": self.beta_hat_j,
            "u1": self.u1,
            "v_minus": self.v_minus,
            "v_plus": self.v_plus,
            "m_hat": self.m_hat,
            "j": self.j,
            "gamma": self.gamma,
            "known_sigma": self.known_sigma,
            "u_seed": self.seed_record.u_seed,
            "partition_seed": self.seed_record.partition_seed,
        }
        return out


def lasso_test(
    data: LinearModelData,
    j: int,
    rng: Optional[np.random.Generator] = None,
    folds: int = 10,
    lambda_override: Optional[float] = None,
    known_sigma: Optional[float] = None,
    seed_record: Optional[SeedRecord] = None,
    cv_rule: str = "min",
    grid: Optional[np.ndarray] = None,
) -> LassoTestResult:
    """Exact test that coefficient ``j`` is zero, using the magnitude of its
    LASSO estimate as the test statistic.

    The penalty is chosen by cross-validating a synthetic response drawn from
    the conditional null law against the remaining columns (skipped when
    ``lambda_override`` is given).  The returned record carries the exogenous
    seeds so the test can be replayed bit-for-bit.
    """
    if seed_record is None:
        if rng is None:
            rng = np.random.default_rng()
        seed_record = SeedRecord.draw(rng)

    decomp = decompose(data, j, 0.0, known_sigma)
    if lambda_override is not None:
        if lambda_override <= 0:
            raise DataError("penalty override must be positive")
        lam = float(lambda_override)
    else:
        u_rng, part_rng = seed_record.streams()
        lam = choose_lambda_hat(
            decomp, u_rng, folds=folds, rule=cv_rule, grid=grid, partition_rng=part_rng
        )

    fit = solve(data.y, data.X, lam)
    beta_hat_j = float(fit.beta[j])
    law = LassoNullLaw(decomp, lam)
    p = law.p_value(decomp.u1, beta_hat_j)
    return LassoTestResult(
        p=p,
        lambda_used=lam,
        beta_hat_j=beta_hat_j,
        u1=decomp.u1,
        v_minus=law.v_minus,
        v_plus=law.v_plus,
        m_hat=law.m_hat,
        seed_record=seed_record,
        j=j,
        gamma=0.0,
        known_sigma=known_sigma,
    )


def lasso_test_at(
    data: LinearModelData,
    j: int,
    gamma: float,
    seed_record: Optional[SeedRecord] = None,
    rng: Optional[np.random.Generator] = None,
    **kwargs,
) -> LassoTestResult:
    """Test that coefficient ``j`` equals ``gamma`` by applying the zero test
    to the shifted response y - gamma * X_j.

    Pass the same ``seed_record`` for every gamma when inverting the test
    into an interval.
    """
    shifted = LinearModelData(
        data.y - gamma * data.X[:, j], data.X, column_names=data.column_names
    )
    res = lasso_test(shifted, j, rng=rng, seed_record=seed_record, **kwargs)
    return LassoTestResult(
        p=res.p,
        lambda_used=res.lambda_used,
        beta_hat_j=res.beta_hat_j,
        u1=res.u1,
        v_minus=res.v_minus,
        v_plus=res.v_plus,
        m_hat=res.m_hat,
        seed_record=res.seed_record,
        j=j,
        gamma=float(gamma),
        known_sigma=res.known_sigma,
    )


def inverse_sqrt_psd(sigma_hat: np.ndarray, floor_rtol: float = 1e-12) -> np.ndarray:
    """Symmetric inverse square root of a positive-definite matrix via
    eigendecomposition, with an eigenvalue floor of floor_rtol * max."""
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    if sigma_hat.ndim != 2 or sigma_hat.shape[0] != sigma_hat.shape[1]:
        raise DataError("covariance estimate must be a square matrix")
    if not np.allclose(sigma_hat, sigma_hat.T, rtol=1e-8, atol=1e-12):
        raise DataError("covariance estimate must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (sigma_hat + sigma_hat.T))
    if vals.min() <= 0:
        raise DataError("covariance estimate is not positive definite")
    vals = np.maximum(vals, floor_rtol * vals.max())
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.T


def asymptotic_lasso_test(
    theta_hat: np.ndarray,
    sigma_hat: np.ndarray,
    n_obs: int,
    j: int,
    rng: Optional[np.random.Generator] = None,
    folds: int = 10,
    seed_record: Optional[SeedRecord] = None,
    lambda_override: Optional[float] = None,
    cv_rule: str = "min",
) -> LassoTestResult:
    """Asymptotically valid coefficient test for any estimator with a
    Gaussian limit: whiten the estimator into a d-row linear model with unit
    error variance and run the known-sigma test there."""
    theta_hat = np.asarray(theta_hat, dtype=np.float64).ravel()
    if n_obs < 1:
        raise DataError("sample size must be positive")
    root = inverse_sqrt_psd(sigma_hat)
    if root.shape[0] != theta_hat.shape[0]:
        raise DataError("estimator and covariance dimensions disagree")
    y = np.sqrt(n_obs) * (root @ theta_hat)
    data = LinearModelData(y, root)
    return lasso_test(
        data,
        j,
        rng=rng,
        folds=folds,
        known_sigma=1.0,
        seed_record=seed_record,
        lambda_override=lambda_override,
        cv_rule=cv_rule,
    )
