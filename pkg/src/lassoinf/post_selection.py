"""Inference conditional on the LASSO selecting the tested coefficient.

The selection event {estimate of coordinate j at the selection penalty is
nonzero} restricts the coordinate statistic to the complement of an interval
computed from the original data; the test statistic (possibly at a different
penalty, possibly on a shifted response) is then referred to the truncated
law.  The selection penalty is always fixed; only the test penalty may be
chosen adaptively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotSelectedError, NumericalError
from .inference import SeedRecord
from .intervals import default_grid, invert_on_grid
from .linear_model import LinearModelData, decompose
from .null_law import LassoNullLaw
from .solver import choose_lambda_hat, solve

__all__ = [
    "SelectionContext",
    "conditional_p",
    "conditional_p_general",
    "conditional_ci",
]


class SelectionContext:
    """Truncation produced by conditioning on selection at ``lambda_s`` while
    testing the value ``gamma`` at ``lambda_l``: the coordinate statistic is
    restricted to the complement of [bound_lo, bound_hi]."""

    def __init__(self, base_cdf, lambda_s, lambda_l, gamma, bound_lo, bound_hi):
        if bound_lo > bound_hi:
            raise NumericalError("selection bounds are out of order")
        self.base_cdf = base_cdf
        self.lambda_s = lambda_s
        self.lambda_l = lambda_l
        self.gamma = gamma
        self.bound_lo = bound_lo
        self.bound_hi = bound_hi
        self.mass = 1.0 - base_cdf(bound_hi) + base_cdf(bound_lo)
        if self.mass <= 0.0:
            raise NumericalError("selection event has no conditional mass")

    def cdf(self, t: float) -> float:
        """Truncated CDF of the coordinate statistic."""
        below = self.base_cdf(min(t, self.bound_lo))
        above = max(0.0, self.base_cdf(t) - self.base_cdf(self.bound_hi))
        return (below + above) / self.mass

    def outside_interval_prob(self, a: float, b: float) -> float:
        """P(U <= a or U >= b | truncation) for a <= b."""
        mass_low = self.base_cdf(min(a, self.bound_lo)) + max(
            0.0, self.base_cdf(a) - self.base_cdf(self.bound_hi)
        )
        upper_all = 1.0 - self.base_cdf(b)
        upper_cut = max(
            0.0, self.base_cdf(self.bound_hi) - self.base_cdf(max(b, self.bound_lo))
        )
        return min(1.0, max(0.0, (mass_low + upper_all - upper_cut) / self.mass))


def conditional_p(
    data: LinearModelData, j: int, lam: float, known_sigma: Optional[float] = None
) -> float:
    """Selection-adjusted p-value at a single fixed penalty: the plain
    p-value divided by the conditional selection probability."""
    fit = solve(data.y, data.X, lam)
    beta_hat_j = float(fit.beta[j])
    if beta_hat_j == 0.0:
        raise NotSelectedError(f"coordinate {j} was not selected at lam={lam}")
    decomp = decompose(data, j, 0.0, known_sigma)
    law = LassoNullLaw(decomp, lam)
    p = law.p_value(decomp.u1, beta_hat_j)
    r = law.selection_prob()
    if r <= 0.0:
        raise NumericalError("selection probability is zero")
    return min(1.0, p / r)


def _selection_bounds(decomp_gamma, lam_s: float, beta_s_mj_at_0: np.ndarray):
    """Coordinate-statistic interval on which the original-data estimate at
    the selection penalty is zero, expressed on the gamma-shifted scale."""
    xj = decomp_gamma.X[:, decomp_gamma.j]
    fitted = decomp_gamma.X_minus_j @ beta_s_mj_at_0
    base = -float(
        xj
        @ (
            decomp_gamma.y_hat_j
            + decomp_gamma.gamma_shift * decomp_gamma.xj_resid
            - fitted
        )
    )
    denom = decomp_gamma.scale * decomp_gamma.xj_resid_norm
    n_lam = decomp_gamma.n * lam_s
    return (base - n_lam) / denom, (base + n_lam) / denom


def conditional_p_general(
    data: LinearModelData,
    j: int,
    gamma: float,
    lambda_l: float,
    lambda_s: float,
    tie_break: bool = True,
    known_sigma: Optional[float] = None,
) -> float:
    """Selection-adjusted p-value for the hypothesis that coefficient ``j``
    equals ``gamma``, with separate test and selection penalties.

    The test statistic is the shifted-response LASSO coordinate at
    ``lambda_l``; the conditioning event is selection on the original data at
    ``lambda_s``.  With ``tie_break`` the zero-estimate point mass is ranked
    by distance from the zero-interval midpoint under the truncated law.
    """
    sel_fit = solve(data.y, data.X, lambda_s)
    if float(sel_fit.beta[j]) == 0.0:
        raise NotSelectedError(f"coordinate {j} was not selected at lam={lambda_s}")
    sel_mj_fit = solve(data.y, np.delete(data.X, j, axis=1), lambda_s)
    return _conditional_p_inner(
        data, j, gamma, lambda_l, lambda_s, sel_mj_fit.beta, tie_break, known_sigma
    )


def _conditional_p_inner(
    data: LinearModelData,
    j: int,
    gamma: float,
    lambda_l: float,
    lambda_s: float,
    beta_s_mj_at_0: np.ndarray,
    tie_break: bool,
    known_sigma: Optional[float],
) -> float:
    decomp_gamma = decompose(data, j, gamma, known_sigma)
    shifted = LinearModelData(data.y - gamma * data.X[:, j], data.X)
    decomp_shift = decompose(shifted, j, 0.0, known_sigma)
    law = LassoNullLaw(decomp_shift, lambda_l)

    lo, hi = _selection_bounds(decomp_gamma, lambda_s, beta_s_mj_at_0)
    ctx = SelectionContext(law.base_cdf, lambda_s, lambda_l, gamma, lo, hi)

    test_fit = solve(shifted.y, shifted.X, lambda_l)
    b_hat = float(test_fit.beta[j])
    law._check_consistency(decomp_shift.u1, b_hat)

    if b_hat != 0.0:
        mag = abs(b_hat)
        p = 1.0 - ctx.cdf(law.crossing(mag, +1)) + ctx.cdf(law.crossing(-mag, -1))
        return min(1.0, max(0.0, p))
    if not tie_break:
        return 1.0
    t = abs(decomp_shift.u1 - law.m_hat)
    return ctx.outside_interval_prob(law.m_hat - t, law.m_hat + t)


def conditional_ci(
    data: LinearModelData,
    j: int,
    lam: float,
    alpha: float = 0.05,
    use_cv_lambda_l: bool = False,
    grid: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    seed_record: Optional[SeedRecord] = None,
    folds: int = 10,
    cv_rule: str = "min",
    known_sigma: Optional[float] = None,
    n_grid: int = 400,
    span_factor: float = 3.0,
    max_doublings: int = 8,
    return_details: bool = False,
):
    """Interval valid conditional on coordinate ``j`` being selected at
    penalty ``lam``.

    The selection penalty stays fixed at ``lam`` for every candidate value
    (an adaptive selection penalty would break conditional validity); with
    ``use_cv_lambda_l`` the test penalty is cross-validated per candidate on
    the shifted decomposition, sharing one seed record across candidates.
    """
    sel_fit = solve(data.y, data.X, lam)
    if float(sel_fit.beta[j]) == 0.0:
        raise NotSelectedError(f"coordinate {j} was not selected at lam={lam}")
    sel_mj_fit = solve(data.y, np.delete(data.X, j, axis=1), lam)

    if seed_record is None:
        if rng is None:
            rng = np.random.default_rng()
        seed_record = SeedRecord.draw(rng)
    if grid is None:
        grid = default_grid(data, j, alpha, n_grid=n_grid, span_factor=span_factor)

    def p_of_gamma(gamma: float) -> float:
        if use_cv_lambda_l:
            shifted = LinearModelData(data.y - gamma * data.X[:, j], data.X)
            decomp_shift = decompose(shifted, j, 0.0, known_sigma)
            u_rng, part_rng = seed_record.streams()
            lam_l = choose_lambda_hat(
                decomp_shift, u_rng, folds=folds, rule=cv_rule, partition_rng=part_rng
            )
        else:
            lam_l = lam
        return _conditional_p_inner(
            data, j, gamma, lam_l, lam, sel_mj_fit.beta, True, known_sigma
        )

    method = "lasso-conditional-cv" if use_cv_lambda_l else "lasso-conditional"
    inv = invert_on_grid(p_of_gamma, grid, alpha, method, max_doublings=max_doublings)
    return inv if return_details else inv.interval
