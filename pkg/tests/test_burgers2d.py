import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcsl.burgers2d import (
    BurgersConfig,
    Grid2D,
    VectorField2D,
    bilinear_interp,
    burgers_step,
    forcing,
    sine_forcing,
    run_burgers,
)

coord = st.floats(-1.0, 1.0, allow_nan=False)


def smooth_field(grid, amp=0.3):
    x, y = grid.mesh()
    return VectorField2D(grid, amp * np.sin(np.pi * x) * np.sin(np.pi * y), -amp * np.sin(np.pi * x) * np.sin(2 * np.pi * y))


class TestGrid:
    @pytest.mark.parametrize("m", [3, 26, 51])
    def test_spacing(self, m):
        g = Grid2D(m)
        assert abs(g.dx * (m - 1) - 2.0) < 1e-12
        assert g.axis[0] == -1.0 and g.axis[-1] == pytest.approx(1.0, abs=1e-12)
        x, y = g.mesh()
        assert x[1, 0] - x[0, 0] == pytest.approx(g.dx) and y[0, 1] - y[0, 0] == pytest.approx(g.dx)

    def test_too_small(self):
        with pytest.raises(ValueError):
            Grid2D(2)

    def test_field_boundary_forced(self):
        g = Grid2D(5)
        f = VectorField2D(g, np.ones((5, 5)), np.ones((5, 5)))
        for v in (f.u1, f.u2):
            assert v[0].sum() == v[-1].sum() == v[:, 0].sum() == v[:, -1].sum() == 0
            assert v[1:-1, 1:-1].min() == 1.0

    def test_field_shape(self):
        with pytest.raises(ValueError):
            VectorField2D(Grid2D(5), np.ones((4, 5)), np.ones((5, 5)))


class TestConfig:
    def test_reference_defaults(self):
        c = BurgersConfig()
        assert (c.grid.m, c.m_t, c.n_substeps) == (51, 100, 10)

    def test_interior_mask(self):
        c = BurgersConfig()
        mask = c.interior_mask()
        ax = c.grid.axis
        inside = (np.abs(ax) < 0.8 - 1e-9)
        npt.assert_array_equal(mask, inside[:, None] & inside[None, :])
        assert mask.sum() == 39**2

    @pytest.mark.parametrize(
        "kwargs",
        [dict(tau=0.003), dict(dx=0.03), dict(n_boundary=5), dict(t_final=0.03), dict(forcing="wind"), dict(nu=-1.0)],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            BurgersConfig(**kwargs)


class TestBilinear:
    g = Grid2D(11)

    def test_nodes(self):
        f = np.random.default_rng(0).standard_normal((11, 11))
        for i in (0, 3, 10):
            for j in (0, 7, 10):
                assert bilinear_interp(f, self.g, (self.g.axis[i], self.g.axis[j])) == f[i, j]

    @given(coord, coord)
    def test_constant(self, x, y):
        assert bilinear_interp(np.full((11, 11), 2.5), self.g, (x, y)) == pytest.approx(2.5, rel=1e-15)

    @given(coord, coord)
    def test_reproduces_xy(self, x, y):
        xx, yy = self.g.mesh()
        assert bilinear_interp(xx * yy, self.g, (x, y)) == pytest.approx(x * y, abs=1e-12)

    @given(coord, coord)
    def test_bounded_by_corners(self, x, y):
        f = np.random.default_rng(1).standard_normal((11, 11))
        v = bilinear_interp(f, self.g, (x, y))
        i = min(int((x + 1) / self.g.dx), 9)
        j = min(int((y + 1) / self.g.dx), 9)
        corners = f[i:i + 2, j:j + 2]
        assert corners.min() - 1e-12 <= v <= corners.max() + 1e-12

    @pytest.mark.parametrize("p", [(1.01, 0.0), (0.0, -1.2)])
    def test_outside(self, p):
        with pytest.raises(ValueError):
            bilinear_interp(np.zeros((11, 11)), self.g, p)


class TestForcing:
    def test_zero_time(self):
        assert forcing(0.0, (0.3, -0.4)) == (0.0, 0.0) or np.allclose(forcing(0.0, (0.3, -0.4)), 0.0)

    def test_value(self):
        npt.assert_allclose(forcing(0.5, (0.5, 0.5)), (-1.0, -1.0), atol=1e-15)

    @given(st.floats(0, 3), coord, coord)
    def test_swap_symmetry(self, t, x, y):
        f1, _ = sine_forcing(t, y, x)
        _, f2 = sine_forcing(t, x, y)
        assert f2 == pytest.approx(f1, abs=1e-15)

    def test_callable_and_arrays(self):
        custom = lambda t, x, y: (t + x, t + y)  # noqa: E731
        assert forcing(1.0, (0.5, 0.25), custom) == (1.5, 1.25)
        f1, f2 = forcing(0.3, (np.zeros(4), np.ones(4)))
        assert f1.shape == f2.shape == (4,)

    def test_zero_descriptor(self):
        assert forcing(0.7, (0.1, 0.2), "zero") == (0.0, 0.0)


class TestStep:
    small = BurgersConfig(dx=0.2, t_final=0.1, n_interior=4, n_boundary=8, tau=0.01)

    def test_zero_data_zero_forcing(self):
        c = BurgersConfig(**{**self.small.__dict__, "forcing": "zero"})
        out = burgers_step(VectorField2D.zeros(c.grid), c, 5)
        assert not out.u1.any() and not out.u2.any()

    def test_forcing_vanishes_at_first_step(self):
        out = burgers_step(VectorField2D.zeros(self.small.grid), self.small, 0)
        assert not out.u1.any() and not out.u2.any()

    def test_second_step_feels_forcing(self):
        c = self.small
        u1 = burgers_step(burgers_step(VectorField2D.zeros(c.grid), c, 0), c, 1)
        assert np.abs(u1.u1).max() > 0

    def test_inviscid_backtrack(self):
        # nu = 0, no forcing: interior nodes take one deterministic step back along -u dt
        c = BurgersConfig(**{**self.small.__dict__, "nu": 0.0, "forcing": "zero"})
        u = smooth_field(c.grid)
        out = burgers_step(u, c, 0)
        x, y = c.grid.mesh()
        for i, j in zip(*np.nonzero(c.interior_mask())):
            p = (x[i, j] - u.u1[i, j] * c.dt, y[i, j] - u.u2[i, j] * c.dt)
            assert out.u1[i, j] == pytest.approx(bilinear_interp(u.u1, c.grid, p), abs=1e-14)
            assert out.u2[i, j] == pytest.approx(bilinear_interp(u.u2, c.grid, p), abs=1e-14)

    def test_zero_velocity_zero_viscosity_identity(self):
        c = BurgersConfig(**{**self.small.__dict__, "nu": 0.0, "forcing": "zero"})
        g = c.grid
        out = burgers_step(VectorField2D.zeros(g), c, 0)
        assert not out.u1.any()

    def test_threads_bit_identical(self):
        c = BurgersConfig(dx=0.04, t_final=0.04, n_interior=3, n_boundary=6, tau=0.01)
        u = smooth_field(c.grid)
        a = burgers_step(u, c, 3, threads=1)
        b = burgers_step(u, c, 3, threads=4)
        npt.assert_array_equal(a.u1, b.u1)
        npt.assert_array_equal(a.u2, b.u2)

    def test_boundary_zero_after_step(self):
        out = burgers_step(smooth_field(self.small.grid), self.small, 2)
        assert out.u1[0].sum() == out.u1[-1].sum() == out.u2[:, 0].sum() == out.u2[:, -1].sum() == 0.0


class TestRun:
    def test_snapshot_times(self):
        c = BurgersConfig(dx=0.2, t_final=0.2, n_interior=2, n_boundary=4, tau=0.01)
        run = run_burgers(c, snapshot_times=(0.04, 0.1, 5.0))
        assert run.times == [pytest.approx(0.04), pytest.approx(0.1), pytest.approx(0.2)]
        assert len(run.snapshots) == 3

    def test_sign_structure_at_t1(self):
        c = BurgersConfig(dx=0.08, t_final=1.0, seed=5)
        run = run_burgers(c, snapshot_times=(1.0,))
        u = run.snapshots[-1]
        x, y = c.grid.mesh()
        s1 = np.sin(np.pi * x) * np.sin(np.pi * y) ** 2
        s2 = np.sin(np.pi * x) ** 2 * np.sin(np.pi * y)
        strong1 = np.abs(s1) > 0.25
        strong2 = np.abs(s2) > 0.25
        assert np.mean(np.sign(u.u1[strong1]) == -np.sign(s1[strong1])) >= 0.95
        assert np.mean(np.sign(u.u2[strong2]) == -np.sign(s2[strong2])) >= 0.95

    def test_reference_parameters(self):
        run = run_burgers(BurgersConfig(seed=1))
        assert run.all_finite and run.boundary_always_zero
        assert 0 < run.sup_norm < 2
        assert run.times == [pytest.approx(t) for t in (0.5, 1.0, 1.5, 2.0)]
