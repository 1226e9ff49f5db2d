import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lassoinf as li
from lassoinf import (
    LinearModelData,
    decompose,
    diagnostics,
    g_map,
    reconstruct,
    sample_null_response,
    t_test,
)
from lassoinf.special import t_cdf, u_cdf

from conftest import make_data, make_design


def explicit_projection(X_mj):
    return X_mj @ np.linalg.inv(X_mj.T @ X_mj) @ X_mj.T


class TestDecompose:
    def test_identity_design(self):
        data = LinearModelData(np.array([3.0, 4.0]), np.eye(2))
        dc = decompose(data, 0)
        np.testing.assert_allclose(dc.y_hat_j, [0.0, 4.0], atol=1e-14)
        assert dc.sigma_hat_j == pytest.approx(3.0)
        np.testing.assert_allclose(dc.V[:, 0], [1.0, 0.0], atol=1e-14)
        assert dc.u.shape == (1,)
        assert dc.u1 == pytest.approx(1.0)

    def test_exact_fit_is_degenerate(self):
        data = LinearModelData(np.array([3.0, 4.0]), np.eye(2))
        with pytest.raises(li.ZeroResidualError):
            decompose(data, 0, gamma=3.0)

    def test_reconstruction_and_u1_oracle(self, rng):
        # independent dense-linear-algebra oracle with the explicit projection
        X = rng.standard_normal((10, 3))
        y = rng.standard_normal(10)
        data = LinearModelData(y, X)
        for j in range(3):
            dc = decompose(data, j)
            np.testing.assert_allclose(reconstruct(dc, dc.u), y, atol=1e-10)
            X_mj = np.delete(X, j, axis=1)
            P = explicit_projection(X_mj)
            w = (np.eye(10) - P) @ X[:, j]
            u1_oracle = X[:, j] @ (np.eye(10) - P) @ y / (
                dc.sigma_hat_j * np.linalg.norm(w)
            )
            assert dc.u1 == pytest.approx(u1_oracle, abs=1e-10)

    def test_shifted_reconstruction_identity(self, rng):
        X = rng.standard_normal((12, 4))
        y = rng.standard_normal(12)
        data = LinearModelData(y, X)
        for gamma in (-1.7, 0.0, 2.2):
            dc = decompose(data, 1, gamma=gamma)
            np.testing.assert_allclose(reconstruct(dc, dc.u), y, atol=1e-10)
            # u1 formula for the shifted decomposition
            X_mj = np.delete(X, 1, axis=1)
            P = explicit_projection(X_mj)
            resid_op = np.eye(12) - P
            w_norm = np.linalg.norm(resid_op @ X[:, 1])
            u1_oracle = X[:, 1] @ resid_op @ (y - gamma * X[:, 1]) / (
                dc.sigma_hat_j * w_norm
            )
            assert dc.u1 == pytest.approx(u1_oracle, abs=1e-10)

    def test_v_orthogonality(self, rng):
        data, _, _ = make_data(15, 6, seed=3)
        dc = decompose(data, 2)
        VtV = dc.V.T @ dc.V
        np.testing.assert_allclose(VtV, np.eye(dc.m + 1), atol=1e-12)
        assert np.abs(dc.V.T @ dc.X_minus_j).max() < 1e-10
        assert abs(np.linalg.norm(dc.u) - 1.0) < 1e-12

    def test_rank_deficient_rejected(self, rng):
        X = rng.standard_normal((10, 3))
        X[:, 2] = X[:, 1]
        with pytest.raises(li.DegenerateDesignError):
            decompose(LinearModelData(rng.standard_normal(10), X), 0)

    def test_column_in_span_rejected(self, rng):
        X = rng.standard_normal((10, 3))
        X[:, 0] = 2.0 * X[:, 1] - X[:, 2]
        with pytest.raises(li.DegenerateDesignError):
            decompose(LinearModelData(rng.standard_normal(10), X), 0)

    def test_scale_equivariance(self, rng):
        data, _, _ = make_data(20, 5, seed=9)
        dc1 = decompose(data, 0)
        dc2 = decompose(LinearModelData(3.5 * data.y, data.X), 0)
        assert dc2.sigma_hat_j == pytest.approx(3.5 * dc1.sigma_hat_j, rel=1e-12)
        np.testing.assert_allclose(dc2.u, dc1.u, atol=1e-12)


class TestReconstruct:
    def test_flip_preserves_sufficient_statistic(self, rng):
        data, _, _ = make_data(14, 4, seed=5)
        dc = decompose(data, 1)
        y_flip = reconstruct(dc, -dc.u)
        np.testing.assert_allclose(
            dc.X_minus_j.T @ y_flip, dc.X_minus_j.T @ data.y, atol=1e-9
        )
        assert np.linalg.norm(y_flip - dc.y_hat_j) == pytest.approx(
            dc.sigma_hat_j, rel=1e-10
        )
        dc_flip = decompose(LinearModelData(y_flip, data.X), 1)
        assert dc_flip.u1 == pytest.approx(-dc.u1, abs=1e-10)

    def test_orthogonal_coordinate_zeroes_u1(self):
        # single-column design: the coordinate vector spans two dimensions
        X = np.array([[1.0], [0.0]])
        data = LinearModelData(np.array([3.0, 4.0]), X)
        dc = decompose(data, 0)
        assert dc.u.shape == (2,)
        y_new = reconstruct(dc, np.array([0.0, 1.0]))
        assert X[:, 0] @ y_new == pytest.approx(0.0, abs=1e-12)
        dc_new = decompose(LinearModelData(y_new, X), 0)
        assert dc_new.u1 == pytest.approx(0.0, abs=1e-12)

    def test_round_trip_recovers_coordinates(self, rng):
        data, _, _ = make_data(18, 6, seed=2)
        dc = decompose(data, 3)
        u_new = rng.standard_normal(dc.m + 1)
        u_new /= np.linalg.norm(u_new)
        dc2 = decompose(LinearModelData(reconstruct(dc, u_new), data.X), 3)
        np.testing.assert_allclose(dc2.u, u_new, atol=1e-9)
        np.testing.assert_allclose(dc2.y_hat_j, dc.y_hat_j, atol=1e-9)
        assert dc2.sigma_hat_j == pytest.approx(dc.sigma_hat_j, rel=1e-9)

    def test_norm_violation_rejected(self, rng):
        data, _, _ = make_data(10, 3, seed=1)
        dc = decompose(data, 0)
        with pytest.raises(li.DataError):
            reconstruct(dc, np.full(dc.m + 1, 0.5))
        with pytest.raises(li.DataError):
            reconstruct(dc, np.ones(dc.m + 2) / np.sqrt(dc.m + 2))


class TestSampleNullResponse:
    def test_deterministic_given_seed(self):
        data, _, _ = make_data(12, 4, seed=8)
        dc = decompose(data, 0)
        a = sample_null_response(dc, np.random.default_rng(33))
        b = sample_null_response(dc, np.random.default_rng(33))
        np.testing.assert_array_equal(a, b)

    def test_sufficient_statistic_preserved(self, rng):
        data, _, _ = make_data(16, 5, seed=4)
        dc = decompose(data, 2)
        for _ in range(20):
            y_t = sample_null_response(dc, rng)
            rel = np.abs(dc.X_minus_j.T @ y_t - dc.X_minus_j.T @ data.y)
            assert rel.max() < 1e-9 * max(1.0, np.abs(dc.X_minus_j.T @ data.y).max())
            assert np.linalg.norm(y_t - dc.y_hat_j) == pytest.approx(
                dc.sigma_hat_j, rel=1e-9
            )

    def test_u1_distribution(self, rng):
        data, _, _ = make_data(20, 8, seed=6)
        dc = decompose(data, 0)
        n_draw = 20_000
        u1s = np.empty(n_draw)
        w = dc.xj_resid
        xj = data.X[:, 0]
        for i in range(n_draw):
            y_t = sample_null_response(dc, rng)
            u1s[i] = xj @ (y_t - dc.y_hat_j) / (dc.sigma_hat_j * dc.xj_resid_norm)
        u1s.sort()
        theory = np.array([u_cdf(float(u), dc.m) for u in u1s])
        ks = np.abs(theory - np.arange(1, n_draw + 1) / n_draw).max()
        assert ks < 1.63 / np.sqrt(n_draw)

    def test_known_sigma_edge_dimension(self):
        # n == d: the coordinate vector is a single unnormalized Gaussian
        X = np.eye(3)
        data = LinearModelData(np.array([1.0, 2.0, 3.0]), X)
        dc = decompose(data, 0, known_sigma=2.0)
        assert dc.m == 0
        draws = np.array(
            [sample_null_response(dc, np.random.default_rng(s))[0] for s in range(500)]
        )
        # first coordinate is y_hat[0] + sigma * z with z standard normal
        z = (draws - dc.y_hat_j[0]) / 2.0
        assert abs(np.mean(z)) < 0.15
        assert abs(np.std(z) - 1.0) < 0.15


class TestTTest:
    def test_centered_at_estimate(self, rng):
        data, _, _ = make_data(20, 3, seed=7)
        ols = t_test(data, 1)
        res = t_test(data, 1, gamma=ols.beta_ols)
        assert res.statistic == pytest.approx(0.0, abs=1e-12)
        assert res.p_two == pytest.approx(1.0, abs=1e-12)

    def test_textbook_oracle(self, rng):
        # normal-equations implementation, assembled independently
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        data = LinearModelData(y, X)
        XtXi = np.linalg.inv(X.T @ X)
        beta = XtXi @ X.T @ y
        resid = y - X @ beta
        s2 = resid @ resid / (20 - 3)
        for j in range(3):
            se = np.sqrt(s2 * XtXi[j, j])
            t_stat = beta[j] / se
            p_two = 2 * (1 - t_cdf(abs(t_stat), 17))
            res = t_test(data, j)
            assert res.statistic == pytest.approx(t_stat, abs=1e-12)
            assert res.p_two == pytest.approx(p_two, abs=1e-12)

    def test_g_map_equals_t_statistic(self):
        for seed in range(100):
            data, _, _ = make_data(20, 3, k=1, amplitude=1.0, seed=seed)
            res = t_test(data, 0)
            dc = decompose(data, 0)
            assert g_map(data, 0, dc.u1) == pytest.approx(res.statistic, abs=1e-10)

    def test_g_map_monotone_antisymmetric(self):
        data, _, _ = make_data(25, 4, seed=11)
        grid = np.linspace(-0.95, 0.95, 41)
        vals = np.array([g_map(data, 0, float(u)) for u in grid])
        assert np.all(np.diff(vals) > 0)
        np.testing.assert_allclose(vals, -vals[::-1], atol=1e-10)


class TestDiagnostics:
    def _orthogonal_column_data(self, rng):
        # column 0 exactly orthogonal to the others
        X = rng.standard_normal((20, 4))
        Q = np.linalg.qr(X[:, 1:])[0]
        X[:, 0] -= Q @ (Q.T @ X[:, 0])
        X /= np.linalg.norm(X, axis=0)
        return LinearModelData(X @ np.array([0.0, 1.0, -2.0, 0.5]) + rng.standard_normal(20), X)

    def test_orthogonal_column_kills_midpoint(self, rng):
        data = self._orthogonal_column_data(rng)
        dc = decompose(data, 0)
        fit = li.solve(data.y, dc.X_minus_j, 0.1)
        diag = diagnostics(dc, fit.beta, 0.1)
        assert diag.m_hat == pytest.approx(0.0, abs=1e-10)
        assert diag.tau_j_sq == pytest.approx(0.0, abs=1e-10)

    def test_null_truth_gives_zero_q(self, rng):
        data, _, _ = make_data(15, 4, seed=13)
        dc = decompose(data, 1)
        fit = li.solve(data.y, dc.X_minus_j, 0.2)
        diag = diagnostics(dc, fit.beta, 0.2, true_beta_j=0.0)
        assert diag.q_j == 0.0
        assert diagnostics(dc, fit.beta, 0.2).q_j is None

    def test_midpoint_identity_with_law(self, rng):
        data, _, _ = make_data(22, 6, k=2, amplitude=2.0, seed=17)
        dc = decompose(data, 0)
        lam = 0.15
        law = li.LassoNullLaw(dc, lam)
        diag = diagnostics(dc, law.beta_mj_at_0, lam)
        mid = 0.5 * (law.crossing(0.0, -1) + law.crossing(0.0, 1))
        assert diag.m_hat == pytest.approx(mid, abs=1e-10)
        assert diag.m_hat == pytest.approx(law.m_hat, abs=1e-10)


@given(scale=st.floats(min_value=0.01, max_value=50.0))
@settings(max_examples=40, deadline=None)
def test_decompose_scale_equivariance_property(scale):
    data, _, _ = make_data(16, 5, seed=21)
    dc1 = decompose(data, 0)
    dc2 = decompose(LinearModelData(scale * data.y, data.X), 0)
    assert dc2.sigma_hat_j == pytest.approx(scale * dc1.sigma_hat_j, rel=1e-9)
    np.testing.assert_allclose(dc2.u, dc1.u, atol=1e-9)
