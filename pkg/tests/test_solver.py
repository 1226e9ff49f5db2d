import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lassoinf as li
from lassoinf import (
    LassoFit,
    LinearModelData,
    choose_lambda_hat,
    cross_validate,
    decompose,
    kkt_check,
    lambda_grid,
    solve,
    solve_offset,
)

from conftest import make_data


class TestSolve:
    def test_zero_above_lambda_max(self, rng):
        X = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        lam_max = np.abs(X.T @ y).max() / 30
        fit = solve(y, X, lam_max * 1.0000001)
        assert np.all(fit.beta == 0.0)
        assert fit.active_set.size == 0

    def test_one_dimensional_hand_solution(self):
        # minimize (1/2)(1-b)^2 + 0.25|b|  =>  b = 0.75
        fit = solve(np.array([1.0, 1.0]), np.array([[1.0], [1.0]]), 0.25)
        assert fit.beta[0] == pytest.approx(0.75, abs=1e-12)

    def test_orthonormal_soft_threshold(self, rng):
        n, d = 48, 8
        Q = np.linalg.qr(rng.standard_normal((n, d)))[0] * np.sqrt(n)
        y = rng.standard_normal(n)
        lam = 0.06
        fit = solve(y, Q, lam)
        corr = Q.T @ y / n
        closed = np.sign(corr) * np.maximum(np.abs(corr) - lam, 0.0)
        np.testing.assert_allclose(fit.beta, closed, atol=1e-12)

    def test_empty_design(self, rng):
        y = rng.standard_normal(6)
        fit = solve(y, np.zeros((6, 0)), 0.5)
        assert fit.beta.shape == (0,)
        assert fit.objective == pytest.approx(0.5 * (y @ y) / 6)

    def test_warm_start_same_answer(self, rng):
        data, _, _ = make_data(40, 10, k=2, amplitude=3.0, seed=1)
        cold = solve(data.y, data.X, 0.05)
        warm = solve(data.y, data.X, 0.05, warm_start=cold.beta + 0.01)
        np.testing.assert_allclose(cold.beta, warm.beta, atol=1e-9)

    def test_objective_optimality(self, rng):
        data, _, _ = make_data(35, 7, k=2, amplitude=2.0, seed=5)
        lam = 0.08
        fit = solve(data.y, data.X, lam)

        def obj(b):
            r = data.y - data.X @ b
            return 0.5 * (r @ r) / 35 + lam * np.abs(b).sum()

        for _ in range(100):
            pert = fit.beta + rng.standard_normal(7) * 10 ** rng.uniform(-6, -1)
            assert obj(fit.beta) <= obj(pert) + 1e-15

    def test_invalid_inputs(self, rng):
        y = rng.standard_normal(10)
        X = rng.standard_normal((10, 2))
        with pytest.raises(li.DataError):
            solve(y, X, -0.1)
        with pytest.raises(li.DataError):
            solve(y, X[:5], 0.1)
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(li.DataError):
            solve(y, bad, 0.1)


@given(scale=st.floats(min_value=0.02, max_value=30.0))
@settings(max_examples=25, deadline=None)
def test_solve_scale_equivariance(scale):
    data, _, _ = make_data(30, 6, k=2, amplitude=2.0, seed=3)
    lam = 0.07
    base = solve(data.y, data.X, lam)
    scaled = solve(scale * data.y, data.X, scale * lam)
    np.testing.assert_allclose(scaled.beta, scale * base.beta, atol=1e-9 * max(1, scale))


class TestSolveOffset:
    def test_matches_full_solution_at_own_coefficient(self, rng):
        # plugging the full solve's coordinate back in reproduces the rest
        data, _, _ = make_data(50, 8, k=3, amplitude=3.0, seed=11)
        lam = 0.04
        full = solve(data.y, data.X, lam)
        j = int(full.active_set[0])
        off = solve_offset(data.y, data.X, j, full.beta[j], lam)
        np.testing.assert_allclose(off.beta, np.delete(full.beta, j), atol=1e-8)

    def test_single_column_design(self, rng):
        y = rng.standard_normal(12)
        X = rng.standard_normal((12, 1))
        fit = solve_offset(y, X, 0, 0.7, 0.3)
        assert fit.beta.shape == (0,)
        r = y - 0.7 * X[:, 0]
        assert fit.objective == pytest.approx(0.5 * (r @ r) / 12)

    def test_zero_offset_is_plain_solve(self, rng):
        data, _, _ = make_data(25, 6, seed=13)
        a = solve_offset(data.y, data.X, 2, 0.0, 0.1)
        b = solve(data.y, np.delete(data.X, 2, axis=1), 0.1)
        np.testing.assert_allclose(a.beta, b.beta, atol=1e-12)


class TestKktCheck:
    def test_solver_output_passes(self, rng):
        data, _, _ = make_data(40, 9, k=3, amplitude=2.5, seed=2)
        fit = solve(data.y, data.X, 0.05)
        ok, viol = kkt_check(fit, data.y, data.X, 0.05)
        assert ok and viol <= 1e-7 * 40 * 0.05

    def test_perturbed_fit_fails(self, rng):
        data, _, _ = make_data(40, 9, k=3, amplitude=2.5, seed=2)
        fit = solve(data.y, data.X, 0.05)
        bad = dataclasses.replace(fit, beta=fit.beta + 1e-3)
        ok, viol = kkt_check(bad, data.y, data.X, 0.05)
        assert not ok and viol > 1e-7 * 40 * 0.05

    def test_zero_vector_iff_above_lambda_max(self, rng):
        X = rng.standard_normal((20, 4))
        y = rng.standard_normal(20)
        lam_max = np.abs(X.T @ y).max() / 20
        zero_fit = LassoFit(
            beta=np.zeros(4), lam=0.0, active_set=np.zeros(0, dtype=np.intp),
            kkt_residual=0.0, objective=0.0, sweeps=0,
        )
        assert kkt_check(zero_fit, y, X, lam_max * 1.01)[0]
        assert not kkt_check(zero_fit, y, X, lam_max * 0.5)[0]


class TestLambdaGrid:
    def test_two_point_grid(self, rng):
        X = rng.standard_normal((15, 3))
        y = rng.standard_normal(15)
        grid = lambda_grid(y, X, count=2)
        lam_max = np.abs(X.T @ y).max() / 15
        np.testing.assert_allclose(grid, [lam_max, 1e-4 * lam_max], rtol=1e-12)

    def test_strictly_decreasing(self, rng):
        X = rng.standard_normal((15, 3))
        y = rng.standard_normal(15)
        grid = lambda_grid(y, X)
        assert grid.shape == (100,)
        assert np.all(np.diff(grid) < 0)

    def test_first_point_gives_zero_fit(self, rng):
        X = rng.standard_normal((15, 3))
        y = rng.standard_normal(15)
        grid = lambda_grid(y, X)
        assert np.all(solve(y, X, grid[0] * (1 + 1e-12)).beta == 0.0)

    def test_orthogonal_response_errors(self, rng):
        X = rng.standard_normal((10, 2))
        y = np.zeros(10)
        with pytest.raises(li.DegenerateGridError):
            lambda_grid(y, X)


class TestCrossValidate:
    def test_deterministic_given_partition_and_seed(self, rng):
        data, _, _ = make_data(40, 8, k=2, amplitude=2.0, seed=4)
        part = np.arange(40) % 5
        a = cross_validate(data.y, data.X, folds=5, partition=part)
        b = cross_validate(data.y, data.X, folds=5, partition=part)
        np.testing.assert_array_equal(a.cv_error, b.cv_error)
        assert a.lambda_min == b.lambda_min and a.lambda_1se == b.lambda_1se

    def test_pure_noise_error_near_variance(self, rng):
        n = 200
        X = rng.standard_normal((n, 10))
        X /= np.linalg.norm(X, axis=0)
        y = rng.standard_normal(n)
        cv = cross_validate(y, X, rng=np.random.default_rng(0))
        assert cv.lambda_min in cv.lambda_grid
        # at the top of the grid the fit is all-zero: held-out MSE ~ Var(y)
        assert cv.cv_error[0] == pytest.approx(np.var(y), rel=0.2)

    def test_strong_signal_recovers_column(self):
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((100, 20))
            X /= np.linalg.norm(X, axis=0)
            y = 5.0 * X[:, 0] + rng.standard_normal(100)
            cv = cross_validate(y, X, rng=rng)
            fit = solve(y, X, cv.lambda_min)
            hits += 0 in fit.active_set
        assert hits >= 95

    def test_one_se_rule_dominates_min(self):
        for seed in range(10):
            data, _, _ = make_data(50, 10, k=3, amplitude=1.5, seed=seed)
            cv = cross_validate(data.y, data.X, rng=np.random.default_rng(seed))
            assert cv.lambda_1se >= cv.lambda_min

    def test_partition_errors(self, rng):
        data, _, _ = make_data(12, 3, seed=6)
        with pytest.raises(li.PartitionError):
            cross_validate(data.y, data.X, folds=1)
        with pytest.raises(li.PartitionError):
            cross_validate(data.y, data.X, folds=4, partition=np.zeros(12, dtype=int))
        with pytest.raises(li.PartitionError):
            cross_validate(data.y, data.X, folds=3, partition=np.arange(11) % 3)


class TestChooseLambdaHat:
    def test_ignores_observed_coordinate(self, rng):
        # flipping u leaves the choice untouched for the same seed stream
        data, _, _ = make_data(40, 8, k=2, amplitude=2.0, seed=14)
        dc = decompose(data, 0)
        flipped = dataclasses.replace(dc, u=-dc.u)
        lam_a = choose_lambda_hat(dc, np.random.default_rng(99))
        lam_b = choose_lambda_hat(flipped, np.random.default_rng(99))
        assert lam_a == lam_b

    def test_randomized_but_in_range(self, rng):
        data, _, _ = make_data(40, 8, k=2, amplitude=2.0, seed=15)
        dc = decompose(data, 0)
        lam1 = choose_lambda_hat(dc, np.random.default_rng(1))
        lam2 = choose_lambda_hat(dc, np.random.default_rng(2))
        assert lam1 != lam2
        for lam in (lam1, lam2):
            assert 0 < lam

    def test_one_se_rule_selected(self, rng):
        data, _, _ = make_data(40, 8, k=2, amplitude=2.0, seed=16)
        dc = decompose(data, 0)
        lam_min = choose_lambda_hat(dc, np.random.default_rng(7), rule="min")
        lam_1se = choose_lambda_hat(dc, np.random.default_rng(7), rule="1se")
        assert lam_1se >= lam_min
        with pytest.raises(li.DataError):
            choose_lambda_hat(dc, np.random.default_rng(7), rule="median")

    def test_mean_tracks_full_data_cross_validation(self):
        # synthetic-response choice is comparable to (invalid) full-data CV
        reps = 200
        ratio_num, ratio_den = [], []
        for seed in range(reps):
            data, beta, rng2 = make_data(
                100, 50, k=5, amplitude=4.3, sigma=1.0, seed=seed
            )
            dc = decompose(data, 0)
            ratio_num.append(choose_lambda_hat(dc, rng2))
            cv = cross_validate(data.y, dc.X_minus_j, rng=rng2)
            ratio_den.append(cv.lambda_min)
        assert np.mean(ratio_num) == pytest.approx(np.mean(ratio_den), rel=0.25)
