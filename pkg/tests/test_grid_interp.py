import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mcsl.grid_interp import (
    GridFunction1D,
    PeriodicGrid1D,
    hat_eval,
    interpolate,
    l2_norm_of_interpolant_sq,
    norm_l2,
    project,
    seminorm_h1,
    wrap_unit,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def random_u(m_s, seed=0):
    rng = np.random.default_rng(seed)
    return GridFunction1D(PeriodicGrid1D(m_s), rng.standard_normal(m_s))


def h1_of_interpolant(u):
    """|I u|_{H^1} by integrating the piecewise-constant derivative cell by cell."""
    v = u.values
    dx = u.grid.dx
    total = 0.0
    for j in range(v.size):
        slope = (v[(j + 1) % v.size] - v[j]) / dx
        total += slope * slope * dx
    return math.sqrt(total)


class TestGrid:
    @pytest.mark.parametrize("m_s", [2, 3, 10, 17, 1000])
    def test_spacing(self, m_s):
        g = PeriodicGrid1D(m_s)
        assert abs(g.dx * m_s - 1.0) <= 2.0**-52
        npt.assert_array_equal(g.nodes, np.arange(m_s) * g.dx)

    @pytest.mark.parametrize("m_s", [0, 1, -4])
    def test_rejects_tiny_grid(self, m_s):
        with pytest.raises(ValueError):
            PeriodicGrid1D(m_s)

    def test_values_length_checked(self):
        with pytest.raises(ValueError):
            GridFunction1D(PeriodicGrid1D(4), np.zeros(5))


class TestHat:
    @pytest.mark.parametrize(
        "k, x, expected",
        [(0, 0.0, 1.0), (0, 0.05, 0.5), (0, 0.95, 0.5), (3, 0.3, 1.0), (0, 0.5, 0.0), (0, -0.05, 0.5), (0, 1.0, 1.0)],
    )
    def test_values_m10(self, k, x, expected):
        assert hat_eval(PeriodicGrid1D(10), k, x) == pytest.approx(expected, abs=1e-15)

    def test_kronecker_on_nodes(self):
        g = PeriodicGrid1D(7)
        for k in range(7):
            for j in range(7):
                assert hat_eval(g, k, g.node(j)) == pytest.approx(float(k == j), abs=1e-15)

    @pytest.mark.parametrize("k", [-1, 10, 11])
    def test_index_error(self, k):
        with pytest.raises(IndexError):
            hat_eval(PeriodicGrid1D(10), k, 0.1)

    @pytest.mark.parametrize("m_s", [2, 5, 64])
    def test_partition_of_unity(self, m_s):
        g = PeriodicGrid1D(m_s)
        x = np.random.default_rng(m_s).uniform(-3, 3, 1000)
        vals = np.array([hat_eval(g, k, x) for k in range(m_s)])
        npt.assert_allclose(vals.sum(axis=0), 1.0, atol=1e-14)
        if m_s > 2:
            assert np.all(np.count_nonzero(vals, axis=0) <= 2)


class TestWrap:
    @given(finite)
    def test_range(self, x):
        w = wrap_unit(x)
        assert 0.0 <= w < 1.0

    def test_tiny_negative_maps_below_one(self):
        assert wrap_unit(-1e-18) == 0.0 or wrap_unit(-1e-18) < 1.0


class TestInterpolate:
    def test_constant(self):
        u = GridFunction1D(PeriodicGrid1D(9), np.full(9, 2.5))
        x = np.linspace(-2, 2, 301)
        npt.assert_allclose(interpolate(u, x), 2.5, rtol=0, atol=1e-15)

    def test_reproduces_nodes(self):
        g = PeriodicGrid1D(12)
        u = GridFunction1D(g, g.nodes.copy())
        for j in range(12):
            assert interpolate(u, g.node(j)) == pytest.approx(g.node(j), abs=1e-15)

    def test_half_hat(self):
        u = GridFunction1D(PeriodicGrid1D(4), np.array([0.0, 1.0, 0.0, 0.0]))
        assert interpolate(u, 0.125) == pytest.approx(0.5)

    def test_wraps_last_cell(self):
        u = GridFunction1D(PeriodicGrid1D(4), np.array([1.0, 0.0, 0.0, 3.0]))
        # halfway between node 3 (value 3) and node 0 (value 1)
        assert interpolate(u, 0.875) == pytest.approx(2.0)
        assert interpolate(u, -0.125) == pytest.approx(2.0)

    def test_matches_hat_sum(self):
        u = random_u(11, seed=3)
        x = np.random.default_rng(1).uniform(0, 1, 50)
        direct = sum(u.values[k] * hat_eval(u.grid, k, x) for k in range(11))
        npt.assert_allclose(interpolate(u, x), direct, atol=1e-13)

    @settings(max_examples=50)
    @given(arrays(np.float64, st.integers(2, 40), elements=finite), st.lists(finite, min_size=1, max_size=20))
    def test_convexity(self, vals, xs):
        u = GridFunction1D(PeriodicGrid1D(vals.size), vals)
        out = np.asarray(interpolate(u, np.array(xs)))
        tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
        assert np.all(out >= vals.min() - tol) and np.all(out <= vals.max() + tol)

    @settings(max_examples=50)
    @given(arrays(np.float64, st.integers(2, 40), elements=finite))
    def test_project_interpolate_identity(self, vals):
        u = GridFunction1D(PeriodicGrid1D(vals.size), vals)
        back = project(lambda x: interpolate(u, x), u.grid)
        npt.assert_array_equal(back.values, vals)


class TestProject:
    def test_sine_quarter_points(self):
        p = project(lambda x: np.sin(2 * np.pi * x), PeriodicGrid1D(4))
        npt.assert_allclose(p.values, [0, 1, 0, -1], atol=1e-15)

    def test_ones(self):
        npt.assert_array_equal(project(lambda x: np.ones_like(x), PeriodicGrid1D(6)).values, np.ones(6))


class TestNorms:
    def test_l2_constant_and_zero(self):
        g = PeriodicGrid1D(37)
        assert norm_l2(GridFunction1D(g, np.ones(37))) == pytest.approx(1.0, abs=1e-15)
        assert norm_l2(GridFunction1D(g, np.zeros(37))) == 0.0

    def test_l2_sine_direct_sum(self):
        m_s = 100
        u = project(lambda x: np.sin(2 * np.pi * x), PeriodicGrid1D(m_s))
        acc = math.fsum((1.0 / m_s) * math.sin(2 * math.pi * j / m_s) ** 2 for j in range(m_s))
        assert norm_l2(u) == pytest.approx(math.sqrt(acc), abs=1e-14)

    def test_h1_constant(self):
        assert seminorm_h1(GridFunction1D(PeriodicGrid1D(5), np.full(5, 7.0))) == 0.0

    def test_h1_two_nodes(self):
        assert seminorm_h1(GridFunction1D(PeriodicGrid1D(2), np.array([0.0, 1.0]))) == pytest.approx(2.0)

    @pytest.mark.parametrize("m_s", [3, 16, 101])
    def test_h1_equals_interpolant_h1(self, m_s):
        u = random_u(m_s, seed=m_s)
        assert seminorm_h1(u) == pytest.approx(h1_of_interpolant(u), rel=1e-12)


class TestInterpolantL2:
    def test_constant(self):
        assert l2_norm_of_interpolant_sq(GridFunction1D(PeriodicGrid1D(8), np.ones(8))) == pytest.approx(1.0)

    def test_unit_vector(self):
        u = GridFunction1D(PeriodicGrid1D(4), np.array([1.0, 0, 0, 0]))
        assert l2_norm_of_interpolant_sq(u) == pytest.approx(1.0 / 6.0, rel=1e-15)

    @pytest.mark.parametrize("m_s", [4, 17, 256])
    def test_norm_identity(self, m_s):
        rng = np.random.default_rng(m_s)
        g = PeriodicGrid1D(m_s)
        for _ in range(100):
            u = GridFunction1D(g, rng.standard_normal(m_s))
            lhs = norm_l2(u) ** 2 - l2_norm_of_interpolant_sq(u)
            rhs = g.dx**2 * seminorm_h1(u) ** 2 / 6.0
            assert lhs == pytest.approx(rhs, rel=1e-12)

    @pytest.mark.parametrize("m_s", [3, 8])
    def test_against_quadrature(self, m_s):
        from scipy import integrate

        u = random_u(m_s, seed=11)
        total = 0.0
        for j in range(m_s):
            lo = j * u.grid.dx
            val, _ = integrate.quad(lambda x: float(interpolate(u, x)) ** 2, lo, lo + u.grid.dx, epsabs=1e-14)
            total += val
        assert l2_norm_of_interpolant_sq(u) == pytest.approx(total, rel=1e-11)
