import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lassoinf.special import (
    norm_cdf,
    norm_quantile,
    t_cdf,
    t_quantile,
    u_cdf,
    u_quantile,
)


def t_cdf_quadrature(x, m, panels=200_000):
    """Independent oracle: Simpson integration of the t density from 0,
    using the symmetry around zero."""
    from lassoinf.special import gammaln

    log_norm = gammaln(0.5 * (m + 1)) - gammaln(0.5 * m) - 0.5 * math.log(m * math.pi)

    def pdf(t):
        return np.exp(log_norm - 0.5 * (m + 1) * np.log1p(t * t / m))

    a = abs(x)
    grid = np.linspace(0.0, a, 2 * panels + 1)
    vals = pdf(grid)
    h = a / (2 * panels) if a > 0 else 0.0
    integral = h / 3.0 * (vals[0] + vals[-1] + 4 * vals[1::2].sum() + 2 * vals[2:-1:2].sum())
    return 0.5 + integral if x >= 0 else 0.5 - integral


def norm_cdf_quadrature(x, panels=200_000):
    grid = np.linspace(0.0, abs(x), 2 * panels + 1)
    vals = np.exp(-0.5 * grid * grid) / math.sqrt(2 * math.pi)
    h = abs(x) / (2 * panels) if x != 0 else 0.0
    integral = h / 3.0 * (vals[0] + vals[-1] + 4 * vals[1::2].sum() + 2 * vals[2:-1:2].sum())
    return 0.5 + integral if x >= 0 else 0.5 - integral


class TestTCdf:
    def test_zero_is_half(self):
        for m in (1, 2, 3, 7, 30, 200):
            assert t_cdf(0.0, m) == pytest.approx(0.5, abs=1e-15)

    def test_cauchy_closed_form(self):
        assert t_cdf(1.0, 1) == pytest.approx(0.75, abs=1e-13)
        for x in (-5.0, -0.3, 0.2, 2.7, 40.0):
            assert t_cdf(x, 1) == pytest.approx(0.5 + math.atan(x) / math.pi, abs=1e-13)

    def test_against_quadrature(self):
        # m = 30, x = 2.042 is the classical 97.5% point
        val = t_cdf(2.042, 30)
        assert val == pytest.approx(0.975, abs=2e-5)
        assert val == pytest.approx(t_cdf_quadrature(2.042, 30), abs=1e-12)
        for m, x in [(3, -1.3), (5, 0.7), (12, 2.0), (60, -3.1)]:
            assert t_cdf(x, m) == pytest.approx(t_cdf_quadrature(x, m), abs=1e-12)

    def test_infinite_arguments(self):
        assert t_cdf(math.inf, 4) == 1.0
        assert t_cdf(-math.inf, 4) == 0.0


class TestTQuantile:
    def test_median(self):
        for m in (1, 4, 19):
            assert t_quantile(0.5, m) == 0.0

    def test_cauchy_quartile(self):
        assert t_quantile(0.75, 1) == pytest.approx(1.0, abs=1e-12)

    @given(
        p=st.floats(min_value=0.001, max_value=0.999),
        m=st.integers(min_value=1, max_value=60),
    )
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, p, m):
        x = t_quantile(p, m)
        assert t_cdf(x, m) == pytest.approx(p, abs=1e-12)

    def test_quantile_of_cdf(self):
        for m in (3, 11, 40):
            for x in (-2.5, -0.4, 0.9, 3.3):
                assert t_quantile(t_cdf(x, m), m) == pytest.approx(x, abs=1e-9)


class TestNormal:
    def test_basic_values(self):
        assert norm_cdf(0.0) == 0.5
        assert norm_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
        # frozen from the quadrature oracle below
        assert norm_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-14)
        assert norm_cdf(3.0) == pytest.approx(0.9986501019683699, abs=1e-14)

    def test_against_quadrature(self):
        for x in (-3.3, -1.1, 0.37, 2.4):
            assert norm_cdf(x) == pytest.approx(norm_cdf_quadrature(x), abs=1e-12)

    @given(x=st.floats(min_value=-8, max_value=8))
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, x):
        assert norm_cdf(-x) == pytest.approx(1.0 - norm_cdf(x), abs=1e-15)

    def test_vectorized_matches_scalar(self):
        # np.exp and math.exp may differ in the last ulp
        xs = np.linspace(-6, 6, 101)
        vec = norm_cdf(xs)
        scal = np.array([norm_cdf(float(x)) for x in xs])
        assert np.max(np.abs(vec - scal)) < 1e-16

    def test_quantile(self):
        assert norm_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)
        for p in (1e-6, 0.01, 0.3, 0.5, 0.77, 0.999):
            assert norm_cdf(norm_quantile(p)) == pytest.approx(p, abs=1e-14)


class TestSphereCoordinate:
    def test_center_and_clamps(self):
        for m in (1, 5, 20):
            assert u_cdf(0.0, m) == pytest.approx(0.5, abs=1e-15)
            assert u_cdf(-1.5, m) == 0.0
            assert u_cdf(2.0, m) == 1.0
            assert u_cdf(-1.0, m) == 0.0
            assert u_cdf(1.0, m) == 1.0

    def test_cauchy_case(self):
        # m=1, u=0.5: argument 0.57735..., CDF = 2/3
        assert u_cdf(0.5, 1) == pytest.approx(2.0 / 3.0, abs=1e-13)

    @given(u=st.floats(min_value=-0.999, max_value=0.999), m=st.integers(1, 40))
    @settings(max_examples=200, deadline=None)
    def test_antisymmetry(self, u, m):
        assert u_cdf(-u, m) == pytest.approx(1.0 - u_cdf(u, m), abs=1e-13)

    def test_nondecreasing_and_continuous(self):
        m = 6
        grid = np.linspace(-0.9999, 0.9999, 2001)
        vals = np.array([u_cdf(float(u), m) for u in grid])
        assert np.all(np.diff(vals) >= 0)
        assert np.max(np.abs(np.diff(vals))) < 0.01  # no jumps on a fine grid

    def test_quantile_round_trip(self):
        for m in (1, 4, 17):
            for p in (0.01, 0.2, 0.5, 0.9, 0.999):
                u = u_quantile(p, m)
                assert u_cdf(u, m) == pytest.approx(p, abs=1e-11)

    def test_sphere_sampling_agreement(self, rng):
        # empirical CDF of the first coordinate of uniform sphere samples
        m = 7
        n_draw = 100_000
        g = rng.standard_normal((n_draw, m + 1))
        u1 = np.sort(g[:, 0] / np.linalg.norm(g, axis=1))
        ecdf = np.arange(1, n_draw + 1) / n_draw
        theory = np.array([u_cdf(float(u), m) for u in u1])
        ks = np.max(np.abs(ecdf - theory))
        assert ks < 1.63 / math.sqrt(n_draw)  # 99% band
