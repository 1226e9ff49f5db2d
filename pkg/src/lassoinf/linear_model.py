"""Gaussian linear-model data, the sufficient-statistic decomposition of the
response used by every conditional test in this package, and classical
t-test baselines.

Under the null that coefficient j (possibly shifted by gamma) is zero, the
response decomposes as

    y = y_hat_j + gamma * w + sigma_hat_j(gamma) * V @ u,

where y_hat_j is the projection of y onto the span of the remaining columns,
w is the residualized tested column, V has orthonormal columns orthogonal to
that span with first column w/||w||, and u is a unit vector whose conditional
law is uniform on the sphere.  With a known error standard deviation the
unit vector is replaced by a standard Gaussian coordinate vector z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError, DegenerateDesignError, ZeroResidualError
from .special import t_cdf, u_cdf  # noqa: F401  (u_cdf re-exported for callers)

RANK_RTOL = 1e-10

__all__ = [
    "LinearModelData",
    "NullDecomposition",
    "TTestResult",
    "Diagnostics",
    "decompose",
    "reconstruct",
    "sample_null_response",
    "t_test",
    "g_map",
    "diagnostics",
]


@dataclass(frozen=True)
class LinearModelData:
    """Response vector y and full-column-rank design X with n >= d."""

    y: np.ndarray
    X: np.ndarray
    column_names: Optional[tuple] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).ravel()
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DataError("design matrix must be two-dimensional")
        if y.shape[0] != X.shape[0]:
            raise DataError(
                f"response has {y.shape[0]} rows but design has {X.shape[0]}"
            )
        if X.shape[1] < 1:
            raise DataError("design must have at least one column")
        if X.shape[0] < X.shape[1]:
            raise DataError("more columns than rows is not supported")
        if not (np.isfinite(y).all() and np.isfinite(X).all()):
            raise DataError("inputs must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", np.ascontiguousarray(X))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class NullDecomposition:
    """Sufficient-statistic factorization of the data for the tested column.

    ``u`` is the unit coordinate vector in unknown-variance mode and the
    unnormalized Gaussian coordinate vector in known-variance mode.
    """

    j: int
    y_hat_j: np.ndarray
    sigma_hat_j: float
    V: np.ndarray
    u: np.ndarray
    xj_resid: np.ndarray
    xj_resid_norm: float
    gamma_shift: float
    known_sigma: Optional[float]
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    X_minus_j: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        """Residual degrees of freedom n - d."""
        return self.n - self.d

    @property
    def u1(self) -> float:
        return float(self.u[0])

    @property
    def scale(self) -> float:
        """Multiplier of V @ u in the reconstruction identity."""
        return self.known_sigma if self.known_sigma is not None else self.sigma_hat_j


def _thin_qr(M: np.ndarray):
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0)), np.zeros((0, 0))
    return np.linalg.qr(M, mode="reduced")


def _check_rank(R: np.ndarray, what: str):
    if R.shape[0] == 0:
        return
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_RTOL * max(diag.max(), 1e-300):
        raise DegenerateDesignError(f"{what} is rank deficient")


def decompose(
    data: LinearModelData,
    j: int,
    gamma: float = 0.0,
    known_sigma: Optional[float] = None,
) -> NullDecomposition:
    """Decompose the response for testing column ``j`` at shift ``gamma``.

    In unknown-variance mode (``known_sigma=None``) the model needs at least
    one residual degree of freedom; with a known error standard deviation
    n == d is allowed and the coordinate vector is left unnormalized.
    """
    n, d = data.n, data.d
    if not 0 <= j < d:
        raise DataError(f"column index {j} out of range for d={d}")
    if known_sigma is not None and known_sigma <= 0:
        raise DataError("known sigma must be positive")

    X, y = data.X, data.y
    xj = X[:, j]
    X_mj = np.ascontiguousarray(np.delete(X, j, axis=1))

    Q1, R1 = _thin_qr(X_mj)
    _check_rank(R1, "design without the tested column")
    y_hat = Q1 @ (Q1.T @ y) if d > 1 else np.zeros(n)
    w = xj - (Q1 @ (Q1.T @ xj) if d > 1 else 0.0)
    w_norm = float(np.linalg.norm(w))
    if w_norm <= RANK_RTOL * max(float(np.linalg.norm(xj)), 1e-300):
        raise DegenerateDesignError(
            "tested column lies in the span of the remaining columns"
        )

    # orthonormal completion: Householder QR of [X_mj | w]; the first
    # complement column is pinned to w/||w|| exactly
    Qc = np.linalg.qr(np.column_stack([X_mj, w]), mode="complete")[0]
    V = np.column_stack([w / w_norm, Qc[:, d:]])

    resid = (y - y_hat) - gamma * w
    sigma_hat = float(np.linalg.norm(resid))
    if known_sigma is None:
        if sigma_hat <= 1e-12 * max(1.0, float(np.linalg.norm(y)), abs(gamma) * w_norm):
            raise ZeroResidualError(
                "shifted response is fit exactly; residual scale is zero"
            )
        u = (V.T @ resid) / sigma_hat
    else:
        u = (V.T @ resid) / known_sigma

    return NullDecomposition(
        j=j,
        y_hat_j=y_hat,
        sigma_hat_j=sigma_hat,
        V=V,
        u=u,
        xj_resid=w,
        xj_resid_norm=w_norm,
        gamma_shift=float(gamma),
        known_sigma=known_sigma,
        X=X,
        y=y,
        X_minus_j=X_mj,
    )


def reconstruct(decomp: NullDecomposition, u_new: np.ndarray) -> np.ndarray:
    """Rebuild a response vector with the same sufficient statistic but
    coordinate vector ``u_new``."""
    u_new = np.asarray(u_new, dtype=np.float64).ravel()
    if u_new.shape[0] != decomp.m + 1:
        raise DataError(
            f"coordinate vector must have length {decomp.m + 1}, got {u_new.shape[0]}"
        )
    if decomp.known_sigma is None:
        if abs(np.linalg.norm(u_new) - 1.0) > 1e-8:
            raise DataError("coordinate vector must have unit norm")
    return (
        decomp.y_hat_j
        + decomp.gamma_shift * decomp.xj_resid
        + decomp.scale * (decomp.V @ u_new)
    )


def sample_null_response(decomp: NullDecomposition, rng: np.random.Generator) -> np.ndarray:
    """Draw a response from the conditional null law given the sufficient
    statistic (uniform sphere direction, or Gaussian coordinates when the
    error scale is known)."""
    g = rng.standard_normal(decomp.m + 1)
    if decomp.known_sigma is None:
        norm = np.linalg.norm(g)
        while norm == 0.0:  # pragma: no cover - probability zero
            g = rng.standard_normal(decomp.m + 1)
            norm = np.linalg.norm(g)
        g = g / norm
    return reconstruct(decomp, g)


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_two: float
    p_one_pos: float
    p_one_neg: float
    beta_ols: float
    stderr: float
    df: int


def t_test(data: LinearModelData, j: int, gamma: float = 0.0) -> TTestResult:
    """Classical t-test of coefficient ``j`` against the value ``gamma``.

    ``p_one_pos`` rejects for large positive deviations (alternative
    beta_j > gamma), ``p_one_neg`` for large negative ones.
    """
    n, d = data.n, data.d
    if n < d + 1:
        raise DataError("t-test requires n >= d + 1")
    if not 0 <= j < d:
        raise DataError(f"column index {j} out of range for d={d}")
    Q, R = np.linalg.qr(data.X, mode="reduced")
    _check_rank(R, "design matrix")
    beta = np.linalg.solve(R, Q.T @ data.y)
    rss = float(np.sum((data.y - data.X @ beta) ** 2))
    df = n - d
    sigma2 = rss / df
    Rinv_col = np.linalg.solve(R.T, np.eye(d)[:, j])
    inv_jj = float(Rinv_col @ Rinv_col)
    se = float(np.sqrt(sigma2 * inv_jj))
    t_stat = (float(beta[j]) - gamma) / se
    cdf = t_cdf(t_stat, df)
    return TTestResult(
        statistic=t_stat,
        p_two=min(1.0, 2.0 * (1.0 - t_cdf(abs(t_stat), df))),
        p_one_pos=1.0 - cdf,
        p_one_neg=cdf,
        beta_ols=float(beta[j]),
        stderr=se,
        df=df,
    )


def g_map(data: LinearModelData, j: int, u: float, gamma: float = 0.0) -> float:
    """The strictly increasing, anti-symmetric map sending the coordinate
    statistic u to the t statistic, computed from projections rather than
    from the OLS fit so it can serve as an independent cross-check."""
    n, d = data.n, data.d
    X, y = data.X, data.y
    X_mj = np.delete(X, j, axis=1)
    Q1, R1 = _thin_qr(X_mj)
    _check_rank(R1, "design without the tested column")
    xj = X[:, j]
    w = xj - (Q1 @ (Q1.T @ xj) if d > 1 else 0.0)
    w_norm = float(np.linalg.norm(w))
    resid = (y - (Q1 @ (Q1.T @ y) if d > 1 else 0.0)) - gamma * w
    sigma_hat = float(np.linalg.norm(resid))

    Qf, Rf = np.linalg.qr(X, mode="reduced")
    _check_rank(Rf, "design matrix")
    Rinv_col = np.linalg.solve(Rf.T, np.eye(d)[:, j])
    inv_jj = float(Rinv_col @ Rinv_col)
    big_c = np.sqrt((n - d) / inv_jj)
    kappa = float(np.sum((Qf @ (Qf.T @ w)) ** 2))

    ratio = sigma_hat / w_norm
    c_prime = big_c * ratio
    kappa_prime = kappa * ratio * ratio
    return c_prime * u / np.sqrt(sigma_hat**2 - u * u * kappa_prime)


@dataclass(frozen=True)
class Diagnostics:
    m_hat: float
    q_j: Optional[float]
    tau_j_sq: float


def diagnostics(
    decomp: NullDecomposition,
    lasso_beta_mj_at_0: np.ndarray,
    lam: float,
    true_beta_j: Optional[float] = None,
) -> Diagnostics:
    """Sign-guess midpoint and reliability diagnostics.

    ``lasso_beta_mj_at_0`` must be the LASSO fit of the gamma-shifted
    response on the remaining columns at penalty ``lam``.
    """
    X, j, w = decomp.X, decomp.j, decomp.xj_resid
    xj = X[:, j]
    shifted_proj = decomp.y_hat_j - decomp.gamma_shift * (xj - w)
    fitted = decomp.X_minus_j @ np.asarray(lasso_beta_mj_at_0, dtype=np.float64)
    m_hat = float(-xj @ (shifted_proj - fitted)) / (decomp.xj_resid_norm * decomp.scale)
    tau_sq = max(0.0, float(xj @ (xj - w)))
    q_j = None
    if true_beta_j is not None:
        q_j = float(true_beta_j) * tau_sq / decomp.xj_resid_norm
    return Diagnostics(m_hat=m_hat, q_j=q_j, tau_j_sq=tau_sq)
