"""Confidence intervals: test inversion on a candidate grid with convex
hull, the classical t interval, and the oracle one-sided t interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import DataError
from .inference import SeedRecord, lasso_test_at
from .linear_model import LinearModelData, t_test
from .special import t_quantile

__all__ = [
    "ConfidenceInterval",
    "GridInversion",
    "invert_on_grid",
    "default_grid",
    "t_ci",
    "lasso_ci",
    "oracle_one_sided_ci",
]


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    grid_resolution: float
    method: str
    lower_open: bool = False
    upper_open: bool = False
    empty: bool = False
    gaps_observed: Optional[bool] = None
    max_p_gamma: Optional[float] = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise DataError("interval endpoints are out of order")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        lo_ok = value > self.lower if self.lower_open else value >= self.lower
        hi_ok = value < self.upper if self.upper_open else value <= self.upper
        return bool(lo_ok and hi_ok and not self.empty)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "alpha": self.alpha,
            "grid_resolution": self.grid_resolution,
            "method": self.method,
            "lower_open": self.lower_open,
            "upper_open": self.upper_open,
            "empty": self.empty,
            "gaps_observed": self.gaps_observed,
        }


@dataclass(frozen=True)
class GridInversion:
    """Evaluated inversion grid: candidate values, their p-values, and the
    hulled interval."""

    interval: ConfidenceInterval
    gammas: np.ndarray
    pvalues: np.ndarray


def default_grid(data: LinearModelData, j: int, alpha: float, n_grid: int = 400,
                 span_factor: float = 3.0) -> np.ndarray:
    """Candidate values centered at the OLS estimate, spanning span_factor
    times the t-interval half-width on each side."""
    tres = t_test(data, j)
    half = span_factor * t_quantile(1.0 - alpha / 2.0, tres.df) * tres.stderr
    return np.linspace(tres.beta_ols - half, tres.beta_ols + half, n_grid)


def invert_on_grid(
    p_of_gamma: Callable[[float], float],
    grid: np.ndarray,
    alpha: float,
    method: str,
    max_doublings: int = 8,
) -> GridInversion:
    """Accepted-region hull of {gamma : p(gamma) > alpha} over ``grid``.

    While a boundary point stays accepted the grid is extended outward by its
    own span at the same resolution (up to ``max_doublings`` per side, after
    which the bound is flagged infinite).  The hull is widened by one grid
    step per side, so the reported interval conservatively encloses the
    exact inversion.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size < 2:
        raise DataError("inversion grid needs at least two points")
    step = float(grid[1] - grid[0])
    gammas = list(grid)
    pvals = [p_of_gamma(float(g)) for g in gammas]

    lower_inf = upper_inf = False
    for _ in range(max_doublings):
        if pvals[0] <= alpha:
            break
        span = gammas[-1] - gammas[0]
        ext = np.arange(gammas[0] - step, gammas[0] - span - step, -step)[::-1]
        gammas = list(ext) + gammas
        pvals = [p_of_gamma(float(g)) for g in ext] + pvals
    else:
        lower_inf = pvals[0] > alpha
    for _ in range(max_doublings):
        if pvals[-1] <= alpha:
            break
        span = gammas[-1] - gammas[0]
        ext = np.arange(gammas[-1] + step, gammas[-1] + span + step, step)
        gammas = gammas + list(ext)
        pvals = pvals + [p_of_gamma(float(g)) for g in ext]
    else:
        upper_inf = pvals[-1] > alpha

    gam = np.asarray(gammas)
    pv = np.asarray(pvals)
    accepted = np.flatnonzero(pv > alpha)
    if accepted.size == 0:
        top = int(np.argmax(pv))
        interval = ConfidenceInterval(
            lower=float(gam[top]),
            upper=float(gam[top]),
            alpha=alpha,
            grid_resolution=step,
            method=method,
            empty=True,
            max_p_gamma=float(gam[top]),
        )
        return GridInversion(interval=interval, gammas=gam, pvalues=pv)

    lo = -math.inf if lower_inf else float(gam[accepted[0]] - step)
    hi = math.inf if upper_inf else float(gam[accepted[-1]] + step)
    gaps = bool(np.any(pv[accepted[0] : accepted[-1] + 1] <= alpha))
    interval = ConfidenceInterval(
        lower=lo,
        upper=hi,
        alpha=alpha,
        grid_resolution=step,
        method=method,
        gaps_observed=gaps,
        max_p_gamma=float(gam[int(np.argmax(pv))]),
    )
    return GridInversion(interval=interval, gammas=gam, pvalues=pv)


def t_ci(data: LinearModelData, j: int, alpha: float = 0.05) -> ConfidenceInterval:
    """Classical OLS interval, symmetric about the estimate."""
    tres = t_test(data, j)
    half = t_quantile(1.0 - alpha / 2.0, tres.df) * tres.stderr
    return ConfidenceInterval(
        lower=tres.beta_ols - half,
        upper=tres.beta_ols + half,
        alpha=alpha,
        grid_resolution=0.0,
        method="t",
    )


def lasso_ci(
    data: LinearModelData,
    j: int,
    alpha: float = 0.05,
    grid: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    seed_record: Optional[SeedRecord] = None,
    folds: int = 10,
    cv_rule: str = "min",
    lambda_override: Optional[float] = None,
    known_sigma: Optional[float] = None,
    n_grid: int = 400,
    span_factor: float = 3.0,
    max_doublings: int = 8,
    return_details: bool = False,
):
    """Interval for coefficient ``j`` by inverting the shifted LASSO test
    over a candidate grid, sharing one synthetic draw and one
    cross-validation partition across every candidate."""
    if seed_record is None:
        if rng is None:
            rng = np.random.default_rng()
        seed_record = SeedRecord.draw(rng)
    if grid is None:
        grid = default_grid(data, j, alpha, n_grid=n_grid, span_factor=span_factor)

    def p_of_gamma(gamma: float) -> float:
        return lasso_test_at(
            data,
            j,
            gamma,
            seed_record=seed_record,
            folds=folds,
            cv_rule=cv_rule,
            lambda_override=lambda_override,
            known_sigma=known_sigma,
        ).p

    inv = invert_on_grid(p_of_gamma, grid, alpha, "lasso", max_doublings=max_doublings)
    return inv if return_details else inv.interval


def oracle_one_sided_ci(
    data: LinearModelData, j: int, alpha: float, true_beta_j: float
) -> ConfidenceInterval:
    """Inversion of the one-sided t-test pointed at the true coefficient;
    an oracle baseline usable only in simulations.

    When the truth lies above the upper one-sided bound the interval is
    (lower, truth) and surely misses; this is inherent to the construction.
    """
    tres = t_test(data, j)
    half = t_quantile(1.0 - alpha, tres.df) * tres.stderr
    lo, hi = tres.beta_ols - half, tres.beta_ols + half
    if lo <= true_beta_j <= hi:
        return ConfidenceInterval(
            lower=lo, upper=hi, alpha=alpha, grid_resolution=0.0,
            method="t-one-sided-oracle",
        )
    if true_beta_j < lo:
        return ConfidenceInterval(
            lower=true_beta_j, upper=hi, alpha=alpha, grid_resolution=0.0,
            method="t-one-sided-oracle", upper_open=True,
        )
    return ConfidenceInterval(
        lower=lo, upper=true_beta_j, alpha=alpha, grid_resolution=0.0,
        method="t-one-sided-oracle", lower_open=True, upper_open=True,
    )
