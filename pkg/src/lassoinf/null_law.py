"""Conditional null law of a single LASSO coordinate given the sufficient
statistic of the model with that coordinate removed.

The coordinate estimate is a continuous nondecreasing transform of the first
coordinate of the decomposition's unit vector, strictly increasing wherever
it is nonzero, with a point mass at zero corresponding to the coordinate
interval [v_minus, v_plus].  The transform's inverse at b is

    crossing(b, eps) = (-X_j'(y_hat + gamma*w - b*X_j - X_-j beta_-j(b))
                        + n*lam*eps) / (scale * ||w||),

where beta_-j(b) is the offset solve on the original response and scale is
the residual norm (or the known error standard deviation).  Evaluations may
legitimately fall outside [-1, 1]; the coordinate CDF clamps there.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import ConsistencyError, DataError
from .linear_model import NullDecomposition
from .solver import LassoFit, solve
from .special import norm_cdf, u_cdf

CONSISTENCY_TOL = 1e-6

__all__ = ["LassoNullLaw"]


def _sign(x: float) -> float:
    """Sign with the convention sign(0) = 1."""
    return -1.0 if x < 0 else 1.0


class LassoNullLaw:
    """Evaluator for the conditional law of coordinate j at penalty ``lam``.

    Offset solves are memoized per offset value (rounded at 1e-12), since a
    p-value touches at most a handful of distinct offsets.
    """

    def __init__(self, decomp: NullDecomposition, lam: float):
        if lam <= 0:
            raise DataError("penalty must be positive")
        if decomp.known_sigma is None and decomp.m < 1:
            raise DataError(
                "unknown-variance law needs a residual degree of freedom (n >= d + 1)"
            )
        self.decomp = decomp
        self.lam = float(lam)
        self._cache: dict[float, LassoFit] = {}
        self.beta_mj_at_0 = self.offset_fit(0.0).beta
        self.v_minus = self.crossing(0.0, -1)
        self.v_plus = self.crossing(0.0, +1)
        self.m_hat = 0.5 * (self.v_minus + self.v_plus)

    @property
    def known_sigma(self) -> Optional[float]:
        return self.decomp.known_sigma

    def base_cdf(self, t: float) -> float:
        """CDF of the coordinate statistic: sphere-coordinate law for the
        unknown-variance decomposition, standard normal when sigma is known."""
        if self.known_sigma is None:
            return u_cdf(t, self.decomp.m)
        return float(norm_cdf(t))

    def offset_fit(self, b: float) -> LassoFit:
        key = float(np.round(b, 12))
        fit = self._cache.get(key)
        if fit is None:
            dc = self.decomp
            fit = solve(dc.y - b * dc.X[:, dc.j], dc.X_minus_j, self.lam)
            self._cache[key] = fit
        return fit

    def crossing(self, b: float, eps: int) -> float:
        """Inverse-transform value at coordinate estimate b with margin sign
        eps; honors the decomposition's gamma shift."""
        dc = self.decomp
        xj = dc.X[:, dc.j]
        fitted = dc.X_minus_j @ self.offset_fit(b).beta
        num = -float(
            xj @ (dc.y_hat_j + dc.gamma_shift * dc.xj_resid - b * xj - fitted)
        ) + dc.n * self.lam * eps
        return num / (dc.scale * dc.xj_resid_norm)

    # spec operation name
    lambda_fn = crossing

    def cdf(self, b: float) -> float:
        """P(coordinate estimate <= b) given the sufficient statistic."""
        return self.base_cdf(self.crossing(b, int(_sign(b))))

    def two_sided_tail(self, b: float) -> float:
        """P(|coordinate estimate| >= b) for b > 0."""
        if b <= 0:
            raise DataError("two-sided tail is defined for positive arguments")
        tail = 1.0 - self.base_cdf(self.crossing(b, +1)) + self.base_cdf(
            self.crossing(-b, -1)
        )
        return min(1.0, max(0.0, tail))

    def selection_prob(self) -> float:
        """P(coordinate estimate is nonzero) given the sufficient statistic."""
        r = 1.0 - self.base_cdf(self.v_plus) + self.base_cdf(self.v_minus)
        return min(1.0, max(0.0, r))

    def _check_consistency(self, u1: float, beta_hat_j: float):
        if beta_hat_j != 0.0:
            fp = self.crossing(beta_hat_j, int(_sign(beta_hat_j)))
            if abs(u1 - fp) > CONSISTENCY_TOL:
                raise ConsistencyError(
                    f"coordinate estimate {beta_hat_j!r} maps to {fp!r} but the "
                    f"observed coordinate statistic is {u1!r}"
                )
        else:
            if not (
                self.v_minus - CONSISTENCY_TOL <= u1 <= self.v_plus + CONSISTENCY_TOL
            ):
                raise ConsistencyError(
                    f"zero estimate but coordinate statistic {u1!r} lies outside "
                    f"[{self.v_minus!r}, {self.v_plus!r}]"
                )

    def tie_break_tail(self, t: float) -> float:
        """P(|U - m_hat| >= t) under the base law."""
        tail = 1.0 - self.base_cdf(self.m_hat + t) + self.base_cdf(self.m_hat - t)
        return min(1.0, max(0.0, tail))

    def p_value(self, u1: float, beta_hat_j: float) -> float:
        """Exact p-value: the two-sided tail of |estimate| when nonzero, and
        the distance-from-midpoint tie-break statistic when zero."""
        self._check_consistency(u1, beta_hat_j)
        if beta_hat_j != 0.0:
            return self.two_sided_tail(abs(beta_hat_j))
        return self.tie_break_tail(abs(u1 - self.m_hat))

    def recentered_p(self, z1: float) -> float:
        """Known-sigma test rejecting for large |z1 - m_hat|; closed form
        avoids evaluating any coordinate transform."""
        if self.known_sigma is None:
            raise DataError("re-centered p-value requires known-sigma mode")
        m = self.m_hat
        p = 1.0 - (float(norm_cdf(z1)) - float(norm_cdf(2.0 * m - z1))) * _sign(z1 - m)
        return min(1.0, max(0.0, p))

    def __repr__(self):
        mode = "known-sigma" if self.known_sigma is not None else "unknown-sigma"
        return (
            f"LassoNullLaw(j={self.decomp.j}, lam={self.lam:.6g}, {mode}, "
            f"zero interval [{self.v_minus:.6g}, {self.v_plus:.6g}])"
        )
