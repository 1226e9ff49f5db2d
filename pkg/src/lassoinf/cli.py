"""Command-line interface.

Single results print as JSON on stdout; scenario tables write CSV.  Exit
codes: 0 success, 2 input problem (including bad flags), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import load_csv
from .errors import DataError, LassoinfError, NumericalError
from .inference import asymptotic_lasso_test, lasso_test, lasso_test_at
from .intervals import lasso_ci, t_ci
from .post_selection import conditional_ci, conditional_p_general
from .power_theory import (
    CoefPrior,
    asymptotic_power,
    fg_distribution,
    state_evolution,
)
from .simulate import ScenarioConfig, run_scenario

__all__ = ["main"]


def _emit(payload: dict):
    print(json.dumps(payload, indent=2, sort_keys=True))


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--response", required=True, help="response column name")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--index", type=int, help="1-based predictor column number")
    group.add_argument("--name", help="predictor column name")
    p.add_argument("--drop", help="comma-separated columns to ignore")
    p.add_argument("--normalize", action="store_true",
                   help="scale each predictor column to unit Euclidean norm")
    p.add_argument("--known-sigma", type=float, default=None,
                   help="treat the error scale as known")


def _load(args):
    drop = args.drop.split(",") if args.drop else None
    data = load_csv(
        args.data,
        response=args.response,
        drop=drop,
        normalize=args.normalize,
        require_extra_row=args.known_sigma is None,
    )
    if args.name is not None:
        if args.name not in data.column_names:
            raise DataError(f"predictor column {args.name!r} not found")
        j = data.column_names.index(args.name)
    else:
        if not 1 <= args.index <= data.d:
            raise DataError(f"--index must lie in [1, {data.d}]")
        j = args.index - 1
    return data, j


def _rng(seed):
    return np.random.default_rng(seed)


def _cmd_test(args):
    data, j = _load(args)
    if args.gamma:
        res = lasso_test_at(
            data, j, args.gamma, rng=_rng(args.seed), folds=args.folds,
            lambda_override=args.lam, known_sigma=args.known_sigma,
        )
    else:
        res = lasso_test(
            data, j, rng=_rng(args.seed), folds=args.folds,
            lambda_override=args.lam, known_sigma=args.known_sigma,
        )
    out = res.to_dict()
    out["reject_at_alpha"] = bool(res.p <= args.alpha)
    out["alpha"] = args.alpha
    out["column"] = data.column_names[j]
    _emit(out)


def _cmd_ci(args):
    data, j = _load(args)
    interval = lasso_ci(
        data, j, alpha=args.alpha, rng=_rng(args.seed), folds=args.folds,
        lambda_override=args.lam, known_sigma=args.known_sigma,
        n_grid=args.grid_points,
    )
    out = interval.to_dict()
    out["column"] = data.column_names[j]
    out["t_interval"] = t_ci(data, j, alpha=args.alpha).to_dict()
    _emit(out)


def _cmd_post_test(args):
    data, j = _load(args)
    lam_l = args.lambda_l if args.lambda_l is not None else args.lambda_s
    p = conditional_p_general(
        data, j, args.gamma, lam_l, args.lambda_s, known_sigma=args.known_sigma
    )
    _emit({
        "p_conditional": p,
        "gamma": args.gamma,
        "lambda_s": args.lambda_s,
        "lambda_l": lam_l,
        "column": data.column_names[j],
        "alpha": args.alpha,
        "reject_at_alpha": bool(p <= args.alpha),
    })


def _cmd_post_ci(args):
    data, j = _load(args)
    interval = conditional_ci(
        data, j, args.lambda_s, alpha=args.alpha,
        use_cv_lambda_l=args.cv_lambda_l, rng=_rng(args.seed), folds=args.folds,
        known_sigma=args.known_sigma, n_grid=args.grid_points,
    )
    out = interval.to_dict()
    out["column"] = data.column_names[j]
    _emit(out)


def _cmd_simulate(args):
    config = ScenarioConfig.from_file(args.config)
    table = run_scenario(config, n_jobs=args.jobs)
    text = table.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {len(table.rows)} rows to {args.out}")


def parse_prior(spec: str) -> CoefPrior:
    """Prior syntaxes: 'pm:0.9@0,0.1@3' (mass@location list) or
    'gauss:mean,variance'."""
    kind, _, body = spec.partition(":")
    if kind == "pm":
        pairs = []
        for chunk in body.split(","):
            mass, _, loc = chunk.partition("@")
            pairs.append((float(mass), float(loc)))
        return CoefPrior.point_masses(pairs)
    if kind == "gauss":
        mean, _, var = body.partition(",")
        return CoefPrior.normal(float(mean), float(var))
    raise DataError(f"cannot parse prior spec {spec!r}")


def _cmd_power_theory(args):
    prior = parse_prior(args.prior)
    se_sol = state_evolution(args.kappa, args.sigma, args.lam, prior)
    rows = []
    for h in (float(x) for x in args.h_grid.split(",")):
        fg = fg_distribution(h, se_sol)
        entry = {"h": h}
        for test in ("recentered", "z_one", "z_two"):
            est = asymptotic_power(
                test, args.alpha, fg, mc_draws=args.mc_draws, seed=args.seed
            )
            entry[test] = est.power
            entry[f"{test}_se"] = est.stderr
        rows.append(entry)
    _emit({
        "alpha_threshold": se_sol.alpha,
        "tau_noise": se_sol.tau,
        "residuals": list(se_sol.residuals),
        "kappa": args.kappa,
        "sigma": args.sigma,
        "lambda": args.lam,
        "alpha_level": args.alpha,
        "power": rows,
    })


def _read_vector(text: str) -> np.ndarray:
    path = Path(text)
    if path.exists():
        return np.loadtxt(path, delimiter=",", ndmin=1)
    return np.array([float(x) for x in text.split(",")])


def _cmd_asymptotic_test(args):
    theta = _read_vector(args.theta_hat)
    sigma_path = Path(args.sigma_hat)
    if not sigma_path.exists():
        raise DataError(f"no such file: {sigma_path}")
    sigma = np.loadtxt(sigma_path, delimiter=",", ndmin=2)
    if not 1 <= args.index <= theta.shape[0]:
        raise DataError(f"--index must lie in [1, {theta.shape[0]}]")
    res = asymptotic_lasso_test(
        theta, sigma, args.n, args.index - 1, rng=_rng(args.seed), folds=args.folds
    )
    out = res.to_dict()
    out["alpha"] = args.alpha
    out["reject_at_alpha"] = bool(res.p <= args.alpha)
    _emit(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lassoinf",
        description="Exact LASSO-based tests and confidence intervals for "
        "linear-model coefficients",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--folds", type=int, default=10)
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="fixed penalty; skips cross-validation")

    p = sub.add_parser("test", help="test that one coefficient equals a value")
    _add_data_args(p)
    common(p)
    p.add_argument("--gamma", type=float, default=0.0,
                   help="hypothesized coefficient value")
    p.set_defaults(fn=_cmd_test)

    p = sub.add_parser("ci", help="confidence interval by test inversion")
    _add_data_args(p)
    common(p)
    p.add_argument("--grid-points", type=int, default=400)
    p.set_defaults(fn=_cmd_ci)

    p = sub.add_parser("post-test", help="p-value conditional on selection")
    _add_data_args(p)
    common(p)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--lambda-s", dest="lambda_s", type=float, required=True,
                   help="selection penalty (always fixed)")
    p.add_argument("--lambda-l", dest="lambda_l", type=float, default=None,
                   help="test penalty (defaults to the selection penalty)")
    p.set_defaults(fn=_cmd_post_test)

    p = sub.add_parser("post-ci", help="interval conditional on selection")
    _add_data_args(p)
    common(p)
    p.add_argument("--lambda-s", dest="lambda_s", type=float, required=True)
    p.add_argument("--cv-lambda-l", action="store_true",
                   help="cross-validate the test penalty per candidate value")
    p.add_argument("--grid-points", type=int, default=400)
    p.set_defaults(fn=_cmd_post_ci)

    p = sub.add_parser("simulate", help="run a scenario config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("power-theory", help="asymptotic power calculator")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--prior", required=True,
                   help="'pm:mass@loc,mass@loc,...' or 'gauss:mean,var'")
    p.add_argument("--h-grid", required=True, help="comma-separated amplitudes")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mc-draws", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_power_theory)

    p = sub.add_parser("asymptotic-test",
                       help="coefficient test for an asymptotically Gaussian estimator")
    p.add_argument("--theta-hat", required=True,
                   help="estimate vector: CSV file or comma-separated values")
    p.add_argument("--sigma-hat", required=True, help="covariance-estimate CSV file")
    p.add_argument("--n", type=int, required=True, help="originating sample size")
    p.add_argument("--index", type=int, required=True, help="1-based coordinate")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--folds", type=int, default=10)
    p.set_defaults(fn=_cmd_asymptotic_test)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        args.fn(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, LassoinfError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
