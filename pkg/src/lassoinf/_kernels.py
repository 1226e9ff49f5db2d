"""Jitted inner loops for the coordinate-descent LASSO solver.

Two update schemes are provided: a Gram (covariance) form whose sweeps cost
O(d^2) independent of n, and a residual form costing O(nd) per sweep for
designs too wide to benefit from a Gram matrix.  Cross-validation runs
entirely inside one kernel call (per-fold Gram downdates, warm-started paths,
held-out errors) so per-call dispatch overhead does not dominate small
problems.

If numba is unavailable the same functions run as plain Python; results are
identical, only slower.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def _chol_solve(A, b):
    """In-place Cholesky solve; returns False when A is not positive
    definite (then A and b hold garbage and must be discarded)."""
    na = A.shape[0]
    for i in range(na):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= A[i, k] * A[j, k]
            if i == j:
                if s <= 1e-300:
                    return False
                A[i, i] = s**0.5
            else:
                A[i, j] = s / A[j, j]
    for i in range(na):
        s = b[i]
        for k in range(i):
            s -= A[i, k] * b[k]
        b[i] = s / A[i, i]
    for i in range(na - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, na):
            s -= A[k, i] * b[k]
        b[i] = s / A[i, i]
    return True


@njit(cache=True)
def _newton_on_active(G, c, lam_n, beta, q):
    """Exact stationarity solve on the current active set; accepted (beta and
    q updated in place, returns True) only if the solution keeps every active
    sign and satisfies the inactive margins."""
    d = G.shape[0]
    na = 0
    for k in range(d):
        if beta[k] != 0.0:
            na += 1
    if na == 0:
        return False
    idx = np.empty(na, dtype=np.int64)
    pos = 0
    for k in range(d):
        if beta[k] != 0.0:
            idx[pos] = k
            pos += 1
    A = np.empty((na, na))
    rhs = np.empty(na)
    for a in range(na):
        ka = idx[a]
        sgn = 1.0 if beta[ka] > 0.0 else -1.0
        rhs[a] = c[ka] - lam_n * sgn
        for b in range(na):
            A[a, b] = G[ka, idx[b]]
    if not _chol_solve(A, rhs):
        return False
    for a in range(na):
        if rhs[a] == 0.0 or (rhs[a] > 0.0) != (beta[idx[a]] > 0.0):
            return False
    qn = np.zeros(d)
    for a in range(na):
        xa = rhs[a]
        ka = idx[a]
        for i in range(d):
            qn[i] += G[i, ka] * xa
    slack = 1e-9 * lam_n
    pos = 0
    for k in range(d):
        if beta[k] != 0.0:
            continue
        if abs(c[k] - qn[k]) > lam_n + slack:
            return False
    for a in range(na):
        beta[idx[a]] = rhs[a]
    for i in range(d):
        q[i] = qn[i]
    return True


@njit(cache=True)
def cd_gram(G, c, lam_n, beta, q, tol, max_sweeps):
    """Cyclic coordinate descent on the Gram system.

    Minimizes 0.5 * b'Gb - c'b + lam_n * ||b||_1 with G = X'X, c = X'y and
    lam_n = (rows) * lambda.  ``beta`` and ``q = G @ beta`` are updated in
    place.  Once a sweep leaves the active set unchanged, an exact Newton
    solve of the stationarity system finishes the job if its KKT
    verification passes; otherwise sweeping continues.  Returns the sweep
    count, or -1 if ``max_sweeps`` was hit before the largest coefficient
    change fell below ``tol``.
    """
    d = G.shape[0]
    for sweep in range(max_sweeps):
        delta_max = 0.0
        set_changed = False
        for k in range(d):
            gkk = G[k, k]
            if gkk <= 0.0:
                continue
            bk = beta[k]
            rho = c[k] - q[k] + gkk * bk
            if rho > lam_n:
                bn = (rho - lam_n) / gkk
            elif rho < -lam_n:
                bn = (rho + lam_n) / gkk
            else:
                bn = 0.0
            diff = bn - bk
            if diff != 0.0:
                if (bk == 0.0) != (bn == 0.0):
                    set_changed = True
                beta[k] = bn
                for i in range(d):
                    q[i] += G[i, k] * diff
                ad = abs(diff)
                if ad > delta_max:
                    delta_max = ad
        if delta_max < tol:
            return sweep + 1
        if not set_changed and _newton_on_active(G, c, lam_n, beta, q):
            return sweep + 1
    return -1


@njit(cache=True)
def cd_resid(XT, y, lam_n, beta, r, tol, max_sweeps):
    """Residual-update coordinate descent; XT is the d x n transposed design
    and r = y - X @ beta is maintained in place."""
    d, n = XT.shape
    for sweep in range(max_sweeps):
        delta_max = 0.0
        for k in range(d):
            nk2 = 0.0
            rho = 0.0
            for i in range(n):
                xki = XT[k, i]
                nk2 += xki * xki
                rho += xki * r[i]
            if nk2 <= 0.0:
                continue
            bk = beta[k]
            rho += nk2 * bk
            if rho > lam_n:
                bn = (rho - lam_n) / nk2
            elif rho < -lam_n:
                bn = (rho + lam_n) / nk2
            else:
                bn = 0.0
            diff = bn - bk
            if diff != 0.0:
                beta[k] = bn
                for i in range(n):
                    r[i] -= XT[k, i] * diff
                ad = abs(diff)
                if ad > delta_max:
                    delta_max = ad
        if delta_max < tol:
            return sweep + 1
    return -1


@njit(cache=True)
def cv_fold_errors(X, y, G, c, fold_ids, n_folds, lams, tol, max_sweeps, errs):
    """Held-out mean squared error for every (fold, lambda) pair.

    For each fold the training Gram system is obtained by downdating the full
    (G, c) with the held-out rows, then the descending ``lams`` grid is solved
    with warm starts.  The training objective is normalized by the number of
    training rows, so the soft threshold is n_train * lam.  Returns 0 on
    success, or 1000 + fold index on a convergence failure.
    """
    n, d = X.shape
    Gt = np.empty((d, d))
    ct = np.empty(d)
    beta = np.empty(d)
    q = np.empty(d)
    for f in range(n_folds):
        for a in range(d):
            ct[a] = c[a]
            for b in range(d):
                Gt[a, b] = G[a, b]
        n_held = 0
        for i in range(n):
            if fold_ids[i] == f:
                n_held += 1
                yi = y[i]
                for a in range(d):
                    xia = X[i, a]
                    ct[a] -= xia * yi
                    for b in range(d):
                        Gt[a, b] -= xia * X[i, b]
        n_tr = n - n_held
        for a in range(d):
            beta[a] = 0.0
            q[a] = 0.0
        for li in range(lams.shape[0]):
            status = cd_gram(Gt, ct, n_tr * lams[li], beta, q, tol, max_sweeps)
            if status < 0:
                return 1000 + f
            acc = 0.0
            for i in range(n):
                if fold_ids[i] == f:
                    pred = 0.0
                    for a in range(d):
                        pred += X[i, a] * beta[a]
                    dev = y[i] - pred
                    acc += dev * dev
            errs[f, li] = acc / n_held
    return 0
