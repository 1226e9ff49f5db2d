"""Penalized least-squares engine.

Objective convention throughout: (1/(2n)) * ||y - X b||^2 + lam * ||b||_1,
so the stationarity conditions read |X_k' (y - X b)| = n * lam on the active
set.  The core solver is cyclic coordinate descent (Gram form for moderate
widths, residual form for wide designs) followed by an exact Newton polish of
the stationarity system on the converged active set; the polish is accepted
only if it preserves signs and feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (
    ConvergenceError,
    DataError,
    DegenerateGridError,
    PartitionError,
    PathError,
)
from .linear_model import NullDecomposition, sample_null_response

CD_TOL = 1e-10
MAX_SWEEPS = 100_000
KKT_RTOL = 1e-7
GRAM_WIDTH_LIMIT = 800

__all__ = [
    "LassoFit",
    "CvResult",
    "PathInB",
    "solve",
    "solve_offset",
    "kkt_check",
    "lambda_grid",
    "cross_validate",
    "choose_lambda_hat",
    "path_in_b",
    "eval_path",
]


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    lam: float
    active_set: np.ndarray
    kkt_residual: float
    objective: float
    sweeps: int


def _objective(y, X, beta, lam):
    r = y - X @ beta
    n = y.shape[0]
    return float(0.5 * (r @ r) / n + lam * np.abs(beta).sum())


def _kkt_residual(grad, beta, lam_n):
    """Max stationarity violation for gradient correlations grad = X'(y-Xb)."""
    viol = 0.0
    for k in range(beta.shape[0]):
        if beta[k] != 0.0:
            viol = max(viol, abs(abs(grad[k]) - lam_n))
            if np.sign(grad[k]) != np.sign(beta[k]):
                viol = max(viol, abs(grad[k]) + lam_n)
        else:
            viol = max(viol, max(0.0, abs(grad[k]) - lam_n))
    return viol


def _polish(beta, G, c, lam_n, kkt_tol):
    """Solve the stationarity system exactly on the current active set.

    Returns the polished vector, or None when the polish flips a sign or
    breaks inactive feasibility (then the CD iterate is kept).
    """
    active = np.flatnonzero(beta)
    if active.size == 0:
        return beta
    signs = np.sign(beta[active])
    Gaa = G[np.ix_(active, active)]
    try:
        sol = np.linalg.solve(Gaa, c[active] - lam_n * signs)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.sign(sol) != signs):
        return None
    out = np.zeros_like(beta)
    out[active] = sol
    grad = c - G @ out
    if _kkt_residual(grad, out, lam_n) > kkt_tol:
        return None
    return out


def solve(
    y: np.ndarray,
    X: np.ndarray,
    lam: float,
    warm_start: Optional[np.ndarray] = None,
) -> LassoFit:
    """LASSO solve by cyclic coordinate descent with soft-threshold updates.

    Iterates until the largest coefficient change in a sweep drops below
    1e-10 (raising ConvergenceError after 1e5 sweeps), then polishes the
    active set.  The returned fit satisfies the stationarity conditions to
    within 1e-7 * n * lam.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError("inconsistent solver dimensions")
    if not (np.isfinite(y).all() and np.isfinite(X).all() and np.isfinite(lam)):
        raise DataError("non-finite solver inputs")
    if lam <= 0:
        raise DataError("penalty must be positive")
    n, d = X.shape
    lam_n = n * lam
    kkt_tol = KKT_RTOL * lam_n

    if d == 0:
        return LassoFit(
            beta=np.zeros(0),
            lam=lam,
            active_set=np.zeros(0, dtype=np.intp),
            kkt_residual=0.0,
            objective=float(0.5 * (y @ y) / n),
            sweeps=0,
        )

    beta = (
        np.array(warm_start, dtype=np.float64).copy()
        if warm_start is not None
        else np.zeros(d)
    )
    if beta.shape[0] != d:
        raise DataError("warm start has wrong length")

    use_gram = d <= GRAM_WIDTH_LIMIT
    if use_gram:
        G = X.T @ X
        c = X.T @ y
        q = G @ beta
        sweeps = _kernels.cd_gram(G, c, lam_n, beta, q, CD_TOL, MAX_SWEEPS)
    else:
        XT = np.ascontiguousarray(X.T)
        r = y - X @ beta
        sweeps = _kernels.cd_resid(XT, y, lam_n, beta, r, CD_TOL, MAX_SWEEPS)
    if sweeps < 0:
        raise ConvergenceError(
            f"coordinate descent did not converge in {MAX_SWEEPS} sweeps"
        )

    if use_gram:
        polished = _polish(beta, G, c, lam_n, kkt_tol)
    else:
        active = np.flatnonzero(beta)
        if active.size:
            Xa = X[:, active]
            Gsub = Xa.T @ Xa
            csub = Xa.T @ y
            sub = _polish(beta[active], Gsub, csub, lam_n, np.inf)
            if sub is not None:
                cand = np.zeros(d)
                cand[active] = sub
                grad = X.T @ (y - X @ cand)
                polished = cand if _kkt_residual(grad, cand, lam_n) <= kkt_tol else None
            else:
                polished = None
        else:
            polished = beta
    if polished is not None and _objective(y, X, polished, lam) <= _objective(
        y, X, beta, lam
    ) + 1e-12 * max(1.0, abs(_objective(y, X, beta, lam))):
        beta = polished

    grad = X.T @ (y - X @ beta)
    kkt_res = _kkt_residual(grad, beta, lam_n)
    if kkt_res > kkt_tol:
        raise ConvergenceError(
            f"KKT residual {kkt_res:.3e} exceeds tolerance {kkt_tol:.3e}"
        )
    return LassoFit(
        beta=beta,
        lam=lam,
        active_set=np.flatnonzero(beta),
        kkt_residual=kkt_res,
        objective=_objective(y, X, beta, lam),
        sweeps=int(sweeps),
    )


def solve_offset(
    y: np.ndarray, X: np.ndarray, j: int, b: float, lam: float
) -> LassoFit:
    """LASSO over the remaining d-1 coefficients after moving b * X_j into
    the response."""
    X = np.asarray(X, dtype=np.float64)
    if not 0 <= j < X.shape[1]:
        raise DataError(f"column index {j} out of range")
    return solve(
        np.asarray(y, dtype=np.float64).ravel() - b * X[:, j],
        np.delete(X, j, axis=1),
        lam,
    )


def kkt_check(fit: LassoFit, y, X, lam: float, tol: Optional[float] = None):
    """Certify the stationarity conditions of ``fit`` from scratch.

    Returns (passed, max_violation); default tolerance is 1e-7 * n * lam.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    X = np.asarray(X, dtype=np.float64)
    n = y.shape[0]
    lam_n = n * lam
    if tol is None:
        tol = KKT_RTOL * lam_n
    grad = X.T @ (y - X @ fit.beta)
    viol = _kkt_residual(grad, fit.beta, lam_n)
    return bool(viol <= tol), float(viol)


def lambda_grid(y, X, count: int = 100, ratio: float = 1e-4) -> np.ndarray:
    """Descending log-spaced grid from lambda_max = ||X'y||_inf / n down to
    ratio * lambda_max."""
    if count < 2:
        raise DataError("grid needs at least two points")
    y = np.asarray(y, dtype=np.float64).ravel()
    X = np.asarray(X, dtype=np.float64)
    lam_max = float(np.abs(X.T @ y).max(initial=0.0)) / y.shape[0]
    if lam_max <= 0.0:
        raise DegenerateGridError("response is orthogonal to every column")
    return np.geomspace(lam_max, ratio * lam_max, count)


@dataclass(frozen=True)
class CvResult:
    lambda_grid: np.ndarray
    cv_error: np.ndarray
    cv_se: np.ndarray
    lambda_min: float
    lambda_1se: float
    partition: np.ndarray


def cross_validate(
    y,
    X,
    folds: int = 10,
    grid: Optional[np.ndarray] = None,
    partition: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> CvResult:
    """K-fold cross-validation of the LASSO over a descending penalty grid.

    Fits warm-start down the grid within each fold.  ``lambda_min`` minimizes
    the mean held-out MSE (ties broken toward the larger penalty);
    ``lambda_1se`` is the largest grid value whose error is within one
    standard error of the minimum.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    n = y.shape[0]
    if folds < 2:
        raise PartitionError("need at least two folds")
    if partition is None:
        if rng is None:
            rng = np.random.default_rng()
        perm = rng.permutation(n)
        partition = np.empty(n, dtype=np.int64)
        for f, chunk in enumerate(np.array_split(perm, folds)):
            partition[chunk] = f
    else:
        partition = np.asarray(partition, dtype=np.int64).ravel()
        if partition.shape[0] != n:
            raise PartitionError("partition length must match the row count")
    counts = np.bincount(partition, minlength=folds)
    if counts.size > folds or (counts == 0).any():
        raise PartitionError("every fold must be nonempty")
    if n - counts.max() < 1:
        raise PartitionError("a training set would have no rows")

    if grid is None:
        grid = lambda_grid(y, X)
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if np.any(np.diff(grid) >= 0):
        raise DataError("penalty grid must be strictly decreasing")

    G = X.T @ X
    c = X.T @ y
    errs = np.empty((folds, grid.shape[0]))
    status = _kernels.cv_fold_errors(
        X, y, G, c, partition, folds, grid, CD_TOL, MAX_SWEEPS, errs
    )
    if status != 0:
        raise ConvergenceError(f"coordinate descent failed in fold {status - 1000}")

    cv_error = errs.mean(axis=0)
    cv_se = errs.std(axis=0, ddof=1) / np.sqrt(folds)
    if not np.isfinite(cv_error).all():
        raise ConvergenceError("non-finite cross-validation errors")
    i_min = int(np.argmin(cv_error))  # first minimum = largest lambda on ties
    threshold = cv_error[i_min] + cv_se[i_min]
    i_1se = int(np.flatnonzero(cv_error <= threshold)[0])
    return CvResult(
        lambda_grid=grid,
        cv_error=cv_error,
        cv_se=cv_se,
        lambda_min=float(grid[i_min]),
        lambda_1se=float(grid[i_1se]),
        partition=partition,
    )


def choose_lambda_hat(
    decomp: NullDecomposition,
    rng: np.random.Generator,
    folds: int = 10,
    rule: str = "min",
    grid: Optional[np.ndarray] = None,
    partition_rng: Optional[np.random.Generator] = None,
) -> float:
    """Penalty choice that is valid to reuse in the conditional test: draw a
    synthetic response from the conditional null law and cross-validate it
    against the remaining columns.

    The result depends only on the sufficient statistic and the exogenous
    randomness, never on the observed coordinate vector.
    """
    if rule not in ("min", "1se"):
        raise DataError(f"unknown cross-validation rule {rule!r}")
    y_tilde = sample_null_response(decomp, rng)
    cv = cross_validate(
        y_tilde,
        decomp.X_minus_j,
        folds=folds,
        grid=grid,
        rng=partition_rng if partition_rng is not None else rng,
    )
    return cv.lambda_min if rule == "min" else cv.lambda_1se


# ---------------------------------------------------------------------------
# Piecewise-linear path of the offset solve b -> argmin over beta of
# (1/(2n)) ||y - b v - Z beta||^2 + lam ||beta||_1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathInB:
    """Knots (ascending), coefficient values at the knots, and one slope per
    inter-knot segment including the two unbounded end segments."""

    lam: float
    knots: np.ndarray
    knot_values: np.ndarray  # (K, d)
    segment_slopes: np.ndarray  # (K+1, d)
    anchor_b: float
    anchor_value: np.ndarray

    @property
    def terminal_slopes(self):
        return self.segment_slopes[0], self.segment_slopes[-1]


def _segment_slope(Z, active, v):
    gamma = np.zeros(Z.shape[1])
    if active.size:
        Za = Z[:, active]
        gamma[active] = -np.linalg.solve(Za.T @ Za, Za.T @ v)
    return gamma


def _next_event(Z, y, v, lam_n, b, beta, gamma, direction, step_tol=1e-12):
    """Smallest move (in ``direction``) at which a stationarity margin is hit
    or an active coordinate crosses zero; None if no event exists.

    Events farther than ~1e9 grid units are numerical artifacts of
    effectively-zero slopes (an exactly flat path has no events at all) and
    are treated as nonexistent.
    """
    horizon = 1e9 * max(1.0, abs(b))
    r = y - b * v - Z @ beta
    drift = v + Z @ gamma  # d/dstep of (b*v + Z*beta) along the path
    corr = Z.T @ r
    rate = Z.T @ drift
    best = None
    d = Z.shape[1]
    active_mask = beta != 0.0
    for i in range(d):
        if active_mask[i]:
            if gamma[i] != 0.0:
                step = -beta[i] / gamma[i]
                if step_tol < step * direction and abs(step) < horizon:
                    if best is None or abs(step) < abs(best):
                        best = step
        else:
            if rate[i] != 0.0:
                for s in (lam_n, -lam_n):
                    step = (corr[i] - s) / rate[i]
                    if step_tol < step * direction and abs(step) < horizon:
                        if best is None or abs(step) < abs(best):
                            best = step
    return best


def path_in_b(y, v, Z, lam: float) -> PathInB:
    """Exact piecewise-linear characterization of the offset solve in b.

    Starting from a differentiability point (b=0, nudged by 1e-6 if an event
    sits there), knots are traced in both directions; after each event the
    active set is re-derived from a direct solve just past the knot, which
    also resolves simultaneous events.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    Z = np.asarray(Z, dtype=np.float64)
    n, d = Z.shape
    lam_n = n * lam

    def fit_at(b, warm=None):
        return solve(y - b * v, Z, lam, warm_start=warm)

    def is_knot(b, beta):
        corr = Z.T @ (y - b * v - Z @ beta)
        inactive = beta == 0.0
        margin_hit = np.any(np.abs(np.abs(corr[inactive]) - lam_n) <= 1e-9 * max(lam_n, 1.0))
        return bool(margin_hit)

    x0 = 0.0
    fit0 = fit_at(x0)
    if is_knot(x0, fit0.beta):
        x0 = 1e-6
        fit0 = fit_at(x0, warm=fit0.beta)
    beta0 = fit0.beta
    gamma0 = _segment_slope(Z, fit0.active_set, v)

    max_knots = 50 * (d + 2)

    def trace(direction):
        knots, values, slopes_after = [], [], []
        b, beta, gamma = x0, beta0.copy(), gamma0
        for _ in range(max_knots):
            step = _next_event(Z, y, v, lam_n, b, beta, gamma, direction)
            if step is None:
                return knots, values, slopes_after, gamma
            b_new = b + step
            beta_new = beta + step * gamma
            beta_new[np.abs(beta_new) < 1e-14] = 0.0
            if knots and abs(b_new - knots[-1]) < 1e-12:
                raise PathError(
                    f"path stalled at b={b_new!r} (lam={lam}, direction={direction})"
                )
            refit = fit_at(b_new + direction * 1e-9, warm=beta_new)
            gamma = _segment_slope(Z, refit.active_set, v)
            knots.append(b_new)
            values.append(beta_new)
            slopes_after.append(gamma)
            b, beta = b_new, beta_new
        raise PathError(f"exceeded {max_knots} knots (lam={lam})")

    fwd_knots, fwd_vals, fwd_slopes, _ = trace(+1)
    bwd_knots, bwd_vals, bwd_slopes, _ = trace(-1)

    # Ascending assembly.  bwd_slopes[i] is the slope on the far (left) side
    # of the i-th backward knot, fwd_slopes[i] on the far (right) side of the
    # i-th forward knot, and gamma0 rules the segment containing x0.
    knots = list(reversed(bwd_knots)) + fwd_knots
    values = list(reversed(bwd_vals)) + fwd_vals
    slopes = list(reversed(bwd_slopes)) + [gamma0] + fwd_slopes

    return PathInB(
        lam=lam,
        knots=np.asarray(knots, dtype=np.float64),
        knot_values=np.asarray(values, dtype=np.float64).reshape(len(values), d),
        segment_slopes=np.asarray(slopes, dtype=np.float64).reshape(len(slopes), d),
        anchor_b=x0,
        anchor_value=beta0,
    )


def eval_path(path: PathInB, b: float) -> np.ndarray:
    """Evaluate the piecewise-linear path at ``b``."""
    knots = path.knots
    if knots.size == 0:
        return path.anchor_value + (b - path.anchor_b) * path.segment_slopes[0]
    idx = int(np.searchsorted(knots, b))
    if idx == 0:
        return path.knot_values[0] + (b - knots[0]) * path.segment_slopes[0]
    anchor_b = knots[idx - 1]
    anchor_val = path.knot_values[idx - 1]
    return anchor_val + (b - anchor_b) * path.segment_slopes[idx]
