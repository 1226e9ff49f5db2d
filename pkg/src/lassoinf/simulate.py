"""Configuration-driven simulation scenarios: power and size studies,
interval length/coverage studies, selection-conditional intervals, model
violation (robustness) grids, penalty-randomness decompositions, and
finite-sample validation of the proportional-regime power theory.

Replicate r of a scenario draws everything from the stream seeded by
(config.seed, spawn_key=(r,)), so tables are byte-identical across runs and
worker counts.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import yaml

from .dataio import ResultTable
from .errors import DataError, LassoinfError
from .inference import lasso_test
from .intervals import lasso_ci, oracle_one_sided_ci, t_ci
from .linear_model import LinearModelData, decompose, t_test
from .null_law import LassoNullLaw
from .post_selection import conditional_ci
from .solver import choose_lambda_hat, solve
from .power_theory import (
    CoefPrior,
    asymptotic_power,
    fg_distribution,
    state_evolution,
)

__all__ = ["ScenarioConfig", "Truth", "generate_scenario", "run_scenario"]

_KINDS = (
    "power",
    "ci",
    "conditional_ci",
    "robustness",
    "lambda_variability",
    "amp_validation",
)
_VIOLATIONS = ("t_errors", "gamma_errors", "heteroskedastic", "nonlinear")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    n: int
    d: int
    k: int = 1
    amplitude: float = 3.5
    sigma: float = 1.0
    rho: float = 0.0
    replicates: int = 100
    alpha: float = 0.05
    seed: int = 0
    folds: int = 10
    cv_rule: str = "min"
    violation: Optional[str] = None
    t_df: float = 2.0
    gamma_shape: float = 1.0
    hetero_eta_sq: float = 8.0
    nonlinear_delta: float = 4.0
    n_grid: int = 400
    span_factor: float = 3.0
    lambda_fixed: Optional[float] = None
    use_cv_lambda_l: bool = False
    inner_reps: int = 30
    prior_null_mass: float = 0.9
    amplitudes: Tuple[float, ...] = ()
    cv_datasets: int = 30
    mc_draws: int = 10**6

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DataError(f"unknown scenario kind {self.kind!r}")
        if self.n <= 0 or self.d <= 0 or self.replicates <= 0:
            raise DataError("n, d, and replicates must be positive")
        if not 0 <= self.k <= self.d:
            raise DataError("k must lie in [0, d]")
        if not 0.0 <= self.rho < 1.0:
            raise DataError("rho must lie in [0, 1)")
        if self.sigma <= 0 or not 0.0 < self.alpha < 1.0:
            raise DataError("sigma must be positive and alpha in (0, 1)")
        if self.kind == "robustness" and self.violation not in _VIOLATIONS:
            raise DataError(
                f"robustness scenarios need violation in {_VIOLATIONS}"
            )
        if self.kind == "conditional_ci" and self.lambda_fixed is None:
            raise DataError("conditional_ci scenarios need lambda_fixed")
        if self.kind == "amp_validation" and not self.amplitudes:
            raise DataError("amp_validation scenarios need an amplitudes list")
        object.__setattr__(self, "amplitudes", tuple(self.amplitudes))

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        raw = yaml.safe_load(Path(path).read_text())
        if not isinstance(raw, dict):
            raise DataError(f"config file {path} must hold a key-value mapping")
        return cls.from_dict(raw)

    def label(self) -> str:
        parts = [f"kind={self.kind}", f"n={self.n}", f"d={self.d}", f"k={self.k}",
                 f"A={self.amplitude:g}", f"sigma={self.sigma:g}",
                 f"rho={self.rho:g}", f"seed={self.seed}"]
        if self.violation:
            parts.append(f"violation={self.violation}")
        if self.lambda_fixed is not None:
            parts.append(f"lam={self.lambda_fixed:g}")
        return ",".join(parts)


@dataclass(frozen=True)
class Truth:
    """Simulation ground truth carried alongside a generated dataset."""

    beta: np.ndarray
    j_test: int
    sigma: float


def _replicate_rng(config: ScenarioConfig, replicate_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(replicate_index,))
    )


def _toeplitz_chol(d: int, rho: float) -> Optional[np.ndarray]:
    if rho == 0.0:
        return None
    idx = np.arange(d)
    cov = rho ** np.abs(idx[:, None] - idx[None, :])
    return np.linalg.cholesky(cov)


def generate_scenario(config: ScenarioConfig, replicate_index: int):
    """Draw one replicate: rows of X iid Gaussian with Toeplitz correlation
    rho^|i-j| and normalized columns, k signal coefficients at +-amplitude,
    and errors per the configured model violation.

    Returns (LinearModelData, Truth); the tested index is a random signal
    coordinate except under robustness scenarios, which test a random null
    coordinate.
    """
    rng = _replicate_rng(config, replicate_index)
    data, truth = _generate_with_rng(config, rng)
    return data, truth


def _generate_with_rng(config: ScenarioConfig, rng: np.random.Generator):
    n, d, k = config.n, config.d, config.k
    X = rng.standard_normal((n, d))
    chol = _toeplitz_chol(d, config.rho)
    if chol is not None:
        X = X @ chol.T
    X = X / np.linalg.norm(X, axis=0)

    beta = np.zeros(d)
    signal_idx = rng.choice(d, size=k, replace=False) if k else np.zeros(0, dtype=int)
    signs = np.where(rng.random(k) < 0.5, -1.0, 1.0)
    beta[signal_idx] = signs * config.amplitude

    if config.kind == "robustness":
        nulls = np.setdiff1d(np.arange(d), signal_idx)
        j_test = int(rng.choice(nulls))
    elif k:
        j_test = int(rng.choice(signal_idx))
    else:
        j_test = int(rng.integers(d))

    mean = X @ beta
    violation = config.violation
    if violation == "nonlinear":
        delta = config.nonlinear_delta
        mean = (np.sign(X) * np.abs(X) ** delta) @ beta

    if violation == "t_errors":
        eps = rng.standard_t(config.t_df, size=n)
        if config.t_df > 2:
            eps = eps * np.sqrt((config.t_df - 2.0) / config.t_df)
        eps = config.sigma * eps
    elif violation == "gamma_errors":
        shape = config.gamma_shape
        eps = config.sigma * (rng.gamma(shape, 1.0, size=n) - shape) / np.sqrt(shape)
    elif violation == "heteroskedastic":
        row_means = X.mean(axis=1)
        sd = np.where(row_means <= 0.0, 1.0, np.sqrt(config.hetero_eta_sq))
        eps = config.sigma * sd * rng.standard_normal(n)
    else:
        eps = config.sigma * rng.standard_normal(n)

    data = LinearModelData(mean + eps, X)
    return data, Truth(beta=beta, j_test=j_test, sigma=config.sigma)


# ---------------------------------------------------------------------------
# per-replicate workers (module level so process pools can pickle them)
# ---------------------------------------------------------------------------


def _power_rep(args):
    config, i = args
    rng = _replicate_rng(config, i)
    data, truth = _generate_with_rng(config, rng)
    j = truth.j_test
    res = lasso_test(data, j, rng=rng, folds=config.folds, cv_rule=config.cv_rule)
    tres = t_test(data, j)
    true_sign = 1.0 if truth.beta[j] >= 0 else -1.0
    p_one = tres.p_one_pos if true_sign > 0 else tres.p_one_neg
    return res.p, tres.p_two, p_one


def _ci_rep(args):
    config, i = args
    rng = _replicate_rng(config, i)
    data, truth = _generate_with_rng(config, rng)
    j = truth.j_test
    true_b = truth.beta[j]
    ell = lasso_ci(
        data, j, alpha=config.alpha, rng=rng, folds=config.folds,
        cv_rule=config.cv_rule, n_grid=config.n_grid,
        span_factor=config.span_factor,
    )
    tci = t_ci(data, j, alpha=config.alpha)
    oracle = oracle_one_sided_ci(data, j, config.alpha, true_b)
    out = []
    for ci in (ell, tci, oracle):
        out.append((ci.contains(true_b), ci.length))
    return out


def _conditional_ci_rep(args):
    config, i = args
    rng = _replicate_rng(config, i)
    data, truth = _generate_with_rng(config, rng)
    j = truth.j_test
    lam = config.lambda_fixed
    fit = solve(data.y, data.X, lam)
    if fit.beta[j] == 0.0:
        return None
    true_b = truth.beta[j]
    fixed = conditional_ci(
        data, j, lam, alpha=config.alpha, use_cv_lambda_l=False, rng=rng,
        n_grid=config.n_grid, span_factor=config.span_factor,
    )
    out = [(fixed.contains(true_b), fixed.length)]
    if config.use_cv_lambda_l:
        adaptive = conditional_ci(
            data, j, lam, alpha=config.alpha, use_cv_lambda_l=True, rng=rng,
            folds=config.folds, cv_rule=config.cv_rule,
            n_grid=config.n_grid, span_factor=config.span_factor,
        )
        out.append((adaptive.contains(true_b), adaptive.length))
    return out


def _robustness_rep(args):
    config, i = args
    rng = _replicate_rng(config, i)
    data, truth = _generate_with_rng(config, rng)
    j = truth.j_test
    res = lasso_test(data, j, rng=rng, folds=config.folds, cv_rule=config.cv_rule)
    tres = t_test(data, j)
    return res.p, tres.p_two


def _lambda_variability_rep(args):
    config, i = args
    rng = _replicate_rng(config, i)
    data, truth = _generate_with_rng(config, rng)
    j = truth.j_test
    return [
        lasso_test(data, j, rng=rng, folds=config.folds, cv_rule=config.cv_rule).p
        for _ in range(config.inner_reps)
    ]


def _mean_se(values) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        return float(arr.mean()) if arr.size else float("nan"), float("nan")
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def _map_replicates(worker, config: ScenarioConfig, n_jobs: int):
    args = [(config, i) for i in range(config.replicates)]
    if n_jobs <= 1:
        return [worker(a) for a in args]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        chunk = max(1, config.replicates // (4 * n_jobs))
        return list(ex.map(worker, args, chunksize=chunk))


def _jackknife_se(stat_fn, matrix: np.ndarray) -> float:
    m = matrix.shape[0]
    if m < 2:
        return float("nan")
    stats = np.array(
        [stat_fn(np.delete(matrix, i, axis=0)) for i in range(m)]
    )
    return float(np.sqrt((m - 1) * np.mean((stats - stats.mean()) ** 2)))


def run_scenario(config: ScenarioConfig, n_jobs: Optional[int] = None) -> ResultTable:
    """Execute every replicate of a scenario and aggregate to a table.

    Worker count comes from ``n_jobs`` or the LASSOINF_THREADS environment
    variable (default 1); results are independent of it.  A replicate
    failure aborts the run with the replicate index attached.
    """
    if n_jobs is None:
        n_jobs = int(os.environ.get("LASSOINF_THREADS", "1"))
    table = ResultTable()
    label = config.label()
    alpha = config.alpha

    runner = {
        "power": _run_power,
        "ci": _run_ci,
        "conditional_ci": _run_conditional_ci,
        "robustness": _run_robustness,
        "lambda_variability": _run_lambda_variability,
        "amp_validation": _run_amp_validation,
    }[config.kind]
    try:
        runner(config, table, label, alpha, n_jobs)
    except LassoinfError:
        raise
    except Exception as exc:  # attach context; replicate index is in the message
        raise LassoinfError(f"scenario {label} failed: {exc}") from exc
    return table


def _guarded(worker, config, n_jobs):
    results = []
    outs = _map_replicates(worker, config, n_jobs)
    for i, out in enumerate(outs):
        if isinstance(out, Exception):  # pragma: no cover - defensive
            raise LassoinfError(f"replicate {i} failed: {out}")
        results.append(out)
    return results


def _run_power(config, table, label, alpha, n_jobs):
    outs = _guarded(_power_rep, config, n_jobs)
    arr = np.asarray(outs)
    for col, method in enumerate(("lasso", "t-two-sided", "t-one-sided-oracle")):
        rej = arr[:, col] <= alpha
        mean, se = _mean_se(rej.astype(float))
        table.add(label, method, "power", mean, se)


def _run_ci(config, table, label, alpha, n_jobs):
    outs = _guarded(_ci_rep, config, n_jobs)
    for idx, method in enumerate(("lasso", "t", "t-one-sided-oracle")):
        cover = [o[idx][0] for o in outs]
        length = [o[idx][1] for o in outs]
        mean, se = _mean_se(np.asarray(cover, dtype=float))
        table.add(label, method, "coverage", mean, se)
        mean, se = _mean_se(length)
        table.add(label, method, "length", mean, se)


def _run_conditional_ci(config, table, label, alpha, n_jobs):
    outs = _guarded(_conditional_ci_rep, config, n_jobs)
    selected = [o for o in outs if o is not None]
    table.add(label, "selection", "n_selected", float(len(selected)), 0.0)
    if not selected:
        return
    methods = ["lasso-conditional"]
    if config.use_cv_lambda_l:
        methods.append("lasso-conditional-cv")
    for idx, method in enumerate(methods):
        cover = [o[idx][0] for o in selected]
        length = [o[idx][1] for o in selected]
        mean, se = _mean_se(np.asarray(cover, dtype=float))
        table.add(label, method, "coverage", mean, se)
        mean, se = _mean_se(length)
        table.add(label, method, "length", mean, se)


def _run_robustness(config, table, label, alpha, n_jobs):
    outs = _guarded(_robustness_rep, config, n_jobs)
    arr = np.asarray(outs)
    for col, method in enumerate(("lasso", "t-two-sided")):
        rej = arr[:, col] <= alpha
        mean, se = _mean_se(rej.astype(float))
        table.add(label, method, "size", mean, se)


def _run_lambda_variability(config, table, label, alpha, n_jobs):
    outs = _guarded(_lambda_variability_rep, config, n_jobs)
    mat = np.asarray(outs)  # (outer, inner)

    def total_sd(m):
        return float(np.sqrt(np.sum((m - m.mean()) ** 2) / (m.size - 1)))

    def within_sd(m):
        centered = m - m.mean(axis=1, keepdims=True)
        return float(np.sqrt(np.sum(centered**2) / (m.size - m.shape[0])))

    def share(m):
        return within_sd(m) / total_sd(m)

    table.add(label, "lasso", "sd_total", total_sd(mat), _jackknife_se(total_sd, mat))
    table.add(label, "lasso", "sd_within", within_sd(mat), _jackknife_se(within_sd, mat))
    table.add(label, "lasso", "within_share", share(mat), _jackknife_se(share, mat))


def _draw_amp_dataset(config, rng, h):
    """Proportional-regime dataset: iid N(0, 1/n) design entries, tested
    coefficient at h, remaining coefficients iid from the two-point prior."""
    n, d = config.n, config.d
    X = rng.standard_normal((n, d)) / np.sqrt(n)
    beta = np.where(
        rng.random(d) < config.prior_null_mass, 0.0, h
    )
    j = 0
    beta[j] = h
    y = X @ beta + config.sigma * rng.standard_normal(n)
    return LinearModelData(y, X), j


def _amp_lambda_solver(config, h, base_seed):
    """Mean cross-validated penalty (solver scale) over independent datasets."""
    if config.lambda_fixed is not None:
        return float(config.lambda_fixed)
    vals = []
    for s in range(config.cv_datasets):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=base_seed, spawn_key=(7001, s))
        )
        data, j = _draw_amp_dataset(config, rng, h)
        decomp = decompose(data, j, 0.0, known_sigma=config.sigma)
        vals.append(
            choose_lambda_hat(decomp, rng, folds=config.folds, rule=config.cv_rule)
        )
    return float(np.mean(vals))


def _run_amp_validation(config, table, label, alpha, n_jobs):
    kappa = config.d / config.n
    prior_mass = 1.0 - config.prior_null_mass
    for hi, h in enumerate(config.amplitudes):
        lam_solver = _amp_lambda_solver(config, h, config.seed)
        lam_theory = config.n * lam_solver  # state-evolution penalty scale
        prior = CoefPrior.sparse(prior_mass, h)
        se_sol = state_evolution(kappa, config.sigma, lam_theory, prior)
        fg = fg_distribution(h, se_sol)
        theory = asymptotic_power(
            "recentered", alpha, fg, mc_draws=config.mc_draws,
            seed=config.seed + 13 * hi,
        )
        rejections = []
        for r in range(config.replicates):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=config.seed, spawn_key=(hi, r))
            )
            data, j = _draw_amp_dataset(config, rng, h)
            decomp = decompose(data, j, 0.0, known_sigma=config.sigma)
            law = LassoNullLaw(decomp, lam_solver)
            rejections.append(law.recentered_p(decomp.u1) <= alpha)
        mean, se = _mean_se(np.asarray(rejections, dtype=float))
        tag = f"h={h:g}"
        table.add(label, "recentered-empirical", f"power[{tag}]", mean, se)
        table.add(
            label, "recentered-theory", f"power[{tag}]", theory.power, theory.stderr
        )
        table.add(label, "lambda-solver", f"lambda[{tag}]", lam_solver, 0.0)
